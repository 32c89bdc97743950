#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xcube/corpus_store.hpp"
#include "xcube/full_text.hpp"

namespace xcube {

/// Where a query term may match: anywhere, an exact root-to-leaf path, a node-name glob, or
/// a disjunction of the latter two. Disjuncts are written "a | /x/y" in the surface form.
struct ContextSpec {
    enum class Kind { empty, full_path, name_pattern, disjunction };

    Kind kind = Kind::empty;
    ContextPath path;                      // full_path
    std::string pattern;                   // name_pattern, canonicalized
    std::vector<ContextSpec> alternatives;  // disjunction

    static ContextSpec any() { return {}; }
    static ContextSpec full(ContextPath p) {
        ContextSpec c;
        c.kind = Kind::full_path;
        c.path = std::move(p);
        return c;
    }
    static ContextSpec name(std::string_view glob) {
        auto canon = canonical_selector(glob);
        if (canon.empty()) throw InvalidQueryError("empty name pattern", 0);
        if (canon.find('/') != std::string::npos) throw InvalidQueryError("name pattern may not contain '/': " + canon, 0);
        ContextSpec c;
        c.kind = Kind::name_pattern;
        c.pattern = std::move(canon);
        return c;
    }
    static ContextSpec any_of(std::vector<ContextSpec> alts) {
        if (alts.empty()) throw InvalidQueryError("empty context disjunction", 0);
        for (auto& a : alts)
            if (a.kind == Kind::disjunction || a.kind == Kind::empty)
                throw InvalidQueryError("disjuncts must be paths or name patterns", 0);
        if (alts.size() == 1) return std::move(alts.front());
        ContextSpec c;
        c.kind = Kind::disjunction;
        c.alternatives = std::move(alts);
        return c;
    }

    /// "*" or blank = any; leading '/' = full path (no wildcards); "a | b" = disjunction.
    static ContextSpec parse(std::string_view s) {
        s = text::trim(s);
        if (s.empty() || s == "*") return any();
        if (s.find('|') != std::string_view::npos) {
            std::vector<ContextSpec> alts;
            std::size_t start = 0;
            while (true) {
                auto bar = s.find('|', start);
                auto piece = text::trim(s.substr(start, bar == std::string_view::npos ? bar : bar - start));
                if (piece.empty() || piece == "*") throw InvalidQueryError("invalid disjunct in context: " + std::string(s), start);
                alts.push_back(parse_single(piece));
                if (bar == std::string_view::npos) break;
                start = bar + 1;
            }
            return any_of(std::move(alts));
        }
        return parse_single(s);
    }

    bool is_empty() const noexcept { return kind == Kind::empty; }

    /// Whether a node with this name and context satisfies the context part of a term.
    bool matches(const std::string& node_name, const ContextPath& node_context) const {
        switch (kind) {
            case Kind::empty: return true;
            case Kind::full_path: return path == node_context;
            case Kind::name_pattern: return text::glob_match(pattern, node_name);
            case Kind::disjunction:
                for (auto& a : alternatives)
                    if (a.matches(node_name, node_context)) return true;
                return false;
        }
        return false;
    }

    /// Same test applied to a path as a whole (its leaf is the node name).
    bool matches_path(const ContextPath& p) const { return !p.empty() && matches(p.leaf(), p); }

    std::string to_string() const {
        switch (kind) {
            case Kind::empty: return "*";
            case Kind::full_path: return path.str();
            case Kind::name_pattern: return pattern;
            case Kind::disjunction: {
                std::string s;
                for (std::size_t i = 0; i < alternatives.size(); ++i) s += (i ? " | " : "") + alternatives[i].to_string();
                return s;
            }
        }
        return "*";
    }

    friend bool operator==(const ContextSpec&, const ContextSpec&) = default;

private:
    static ContextSpec parse_single(std::string_view s) {
        if (s.front() == '/') {
            if (s.find('*') != std::string_view::npos)
                throw InvalidQueryError("wildcards are not allowed inside a full path: " + std::string(s), 0);
            try {
                return full(ContextPath::parse(s));
            } catch (const InvalidArgumentError& e) {
                throw InvalidQueryError(e.what(), 0);
            }
        }
        return name(s);
    }
};

struct QueryTerm {
    ContextSpec context;
    SearchExpr search;

    friend bool operator==(const QueryTerm&, const QueryTerm&) = default;

    std::string to_string() const {
        auto s = search.to_string();
        return "(" + context.to_string() + ", " + s + ")";
    }
};

/// User refinements. An absent member means "not refined"; a present but empty connection set
/// admits nothing.
struct Refinement {
    std::optional<std::vector<std::set<ContextPath>>> contexts;  // one set per term
    std::optional<std::set<std::string>> connections;            // connection ids

    friend bool operator==(const Refinement&, const Refinement&) = default;
};

struct Query {
    std::vector<QueryTerm> terms;
    Refinement refinement;

    std::size_t size() const noexcept { return terms.size(); }

    /// Surface form; terms joined by AND. Refinements are not part of the text.
    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? " AND " : "") + terms[i].to_string();
        return s;
    }

    /// Whether a context is admitted for term i by the refinement.
    bool context_selected(std::size_t i, const ContextPath& p) const {
        if (!refinement.contexts) return true;
        return refinement.contexts->at(i).count(p) > 0;
    }

    friend bool operator==(const Query& a, const Query& b) { return a.terms == b.terms && a.refinement == b.refinement; }
};

inline constexpr std::size_t kDefaultMaxTerms = 8;

inline void validate_term(const QueryTerm& t, std::size_t at) {
    if (t.context.is_empty() && t.search.is_match_all())
        throw InvalidQueryError("query term needs a context or a search expression", at);
}

namespace detail {

class QueryParser {
public:
    explicit QueryParser(std::string_view src) : src_(src) {}

    Query parse(std::size_t max_terms) {
        Query q;
        skip();
        if (pos_ >= src_.size()) throw InvalidQueryError("empty query", 0);
        q.terms.push_back(parse_term());
        while (true) {
            skip();
            if (pos_ >= src_.size()) break;
            if (!conjunction()) throw InvalidQueryError("expected AND between query terms", pos_);
            q.terms.push_back(parse_term());
        }
        if (q.terms.size() > max_terms)
            throw InvalidQueryError("query has " + std::to_string(q.terms.size()) + " terms; maximum is " +
                                        std::to_string(max_terms),
                                    0);
        return q;
    }

private:
    void skip() {
        while (pos_ < src_.size() && text::is_space(src_[pos_])) ++pos_;
    }

    bool conjunction() {
        static constexpr std::string_view wedge = "\xE2\x88\xA7";  // U+2227
        for (auto tok : {wedge, std::string_view("AND"), std::string_view("&&")}) {
            if (src_.substr(pos_, tok.size()) == tok) {
                pos_ += tok.size();
                return true;
            }
        }
        return false;
    }

    QueryTerm parse_term() {
        skip();
        auto start = pos_;
        if (pos_ >= src_.size() || src_[pos_] != '(') throw InvalidQueryError("expected '(' to open a query term", pos_);
        ++pos_;
        auto comma = scan_to(',', false);
        auto ctx_text = src_.substr(start + 1, comma - start - 1);
        pos_ = comma + 1;
        auto close = scan_to(')', true);
        auto search_text = src_.substr(comma + 1, close - comma - 1);
        pos_ = close + 1;

        QueryTerm t;
        try {
            t.context = ContextSpec::parse(ctx_text);
        } catch (const InvalidQueryError& e) {
            throw InvalidQueryError(e.message(), start + 1);
        }
        auto trimmed = text::trim(search_text);
        if (trimmed.empty()) throw InvalidQueryError("empty search expression", comma + 1);
        try {
            t.search = parse_search(trimmed);
        } catch (const InvalidQueryError& e) {
            auto offset = static_cast<std::size_t>(trimmed.data() - src_.data());
            throw InvalidQueryError(e.message(), offset + e.position());
        }
        validate_term(t, start);
        return t;
    }

    // Position of the delimiter that ends the current term part, honoring quotes and parens.
    std::size_t scan_to(char delim, bool closing) {
        int depth = 0;
        bool quoted = false;
        for (auto i = pos_; i < src_.size(); ++i) {
            char c = src_[i];
            if (c == '"') quoted = !quoted;
            if (quoted) continue;
            if (c == '(') ++depth;
            else if (c == ')') {
                if (depth == 0) {
                    if (closing) return i;
                    throw InvalidQueryError("expected ',' between context and search", i);
                }
                --depth;
            } else if (c == delim && depth == 0 && !closing) {
                return i;
            }
        }
        if (quoted) throw InvalidQueryError("unterminated phrase", pos_);
        throw InvalidQueryError(closing ? "missing ')' closing the query term" : "expected ','", src_.size());
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `(context, search) AND (context, search) ...`; "∧" and "&&" are accepted for AND.
inline Query parse_query(std::string_view text, std::size_t max_terms = kDefaultMaxTerms) {
    return detail::QueryParser(text).parse(max_terms);
}

// JSON form: {"terms":[{"context":{"kind":"name_pattern","value":"country"} | "country",
//                       "search":"Romania"}], "contexts":[[...]], "connections":[...]}

inline nlohmann::json context_to_json(const ContextSpec& c) {
    using K = ContextSpec::Kind;
    switch (c.kind) {
        case K::empty: return {{"kind", "empty"}};
        case K::full_path: return {{"kind", "full_path"}, {"value", c.path.str()}};
        case K::name_pattern: return {{"kind", "name_pattern"}, {"value", c.pattern}};
        case K::disjunction: {
            auto arr = nlohmann::json::array();
            for (auto& a : c.alternatives) arr.push_back(context_to_json(a));
            return {{"kind", "disjunction"}, {"alternatives", arr}};
        }
    }
    return {};
}

inline ContextSpec context_from_json(const nlohmann::json& j) {
    if (j.is_string()) return ContextSpec::parse(j.get<std::string>());
    auto kind = j.at("kind").get<std::string>();
    if (kind == "empty") return ContextSpec::any();
    if (kind == "full_path") {
        auto v = j.at("value").get<std::string>();
        if (v.find('*') != std::string::npos) throw InvalidQueryError("wildcards are not allowed inside a full path", 0);
        return ContextSpec::full(ContextPath::parse(v));
    }
    if (kind == "name_pattern") return ContextSpec::name(j.at("value").get<std::string>());
    if (kind == "disjunction") {
        std::vector<ContextSpec> alts;
        for (auto& a : j.at("alternatives")) alts.push_back(context_from_json(a));
        return ContextSpec::any_of(std::move(alts));
    }
    throw InvalidQueryError("unknown context kind: " + kind, 0);
}

inline nlohmann::json query_to_json(const Query& q) {
    nlohmann::json j;
    auto& terms = j["terms"] = nlohmann::json::array();
    for (auto& t : q.terms) terms.push_back({{"context", context_to_json(t.context)}, {"search", t.search.to_string()}});
    if (q.refinement.contexts) {
        auto& cs = j["contexts"] = nlohmann::json::array();
        for (auto& set : *q.refinement.contexts) {
            auto arr = nlohmann::json::array();
            for (auto& p : set) arr.push_back(p.str());
            cs.push_back(arr);
        }
    }
    if (q.refinement.connections) j["connections"] = *q.refinement.connections;
    return j;
}

inline Query query_from_json(const nlohmann::json& j, std::size_t max_terms = kDefaultMaxTerms) {
    Query q;
    const auto& terms = j.at("terms");
    if (terms.empty()) throw InvalidQueryError("empty query", 0);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        QueryTerm t;
        t.context = terms[i].contains("context") ? context_from_json(terms[i]["context"]) : ContextSpec::any();
        t.search = parse_search(terms[i].value("search", std::string("*")));
        validate_term(t, i);
        q.terms.push_back(std::move(t));
    }
    if (q.terms.size() > max_terms) throw InvalidQueryError("too many query terms", 0);
    if (j.contains("contexts")) {
        std::vector<std::set<ContextPath>> sel;
        for (auto& arr : j["contexts"]) {
            std::set<ContextPath> s;
            for (auto& p : arr) s.insert(ContextPath::parse(p.get<std::string>()));
            sel.push_back(std::move(s));
        }
        if (sel.size() != q.terms.size()) throw InvalidArgumentError("context selection must have one entry per term");
        q.refinement.contexts = std::move(sel);
    }
    if (j.contains("connections")) q.refinement.connections = j["connections"].get<std::set<std::string>>();
    return q;
}

/// Term satisfaction: the node's own text satisfies the search expression and its name or
/// context satisfies the context specification.
inline bool satisfies(const CorpusStore& store, NodeRef n, const QueryTerm& t) {
    const auto& node = store.node(n);
    if (!t.context.matches(node.name, store.context(n))) return false;
    return evaluate(t.search, node.text).has_value();
}

/// Satisfaction plus the term's refinement (selected contexts).
inline bool satisfies(const CorpusStore& store, NodeRef n, const Query& q, std::size_t i) {
    return q.context_selected(i, store.context(n)) && satisfies(store, n, q.terms.at(i));
}

/// Paths admitted for term i: those matching its context spec and any selection.
inline std::set<PathId> admitted_paths(const CorpusStore& store, const Query& q, std::size_t i) {
    std::set<PathId> out;
    for (PathId p = 0; p < store.paths().size(); ++p) {
        const auto& path = store.path(p);
        if (q.terms[i].context.matches_path(path) && q.context_selected(i, path)) out.insert(p);
    }
    return out;
}

}  // namespace xcube

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xcube/error.hpp"
#include "xcube/text.hpp"

namespace xcube {

/// Full-text search expression: keywords, quoted phrases, AND / OR / NOT, parentheses and
/// the match-anything expression "*". Juxtaposed operands are a conjunction (bag of keywords).
struct SearchExpr {
    enum class Op { match_all, term, phrase, all_of, any_of, negate };

    Op op = Op::match_all;
    std::vector<std::string> words;     // term: one word; phrase: >= 2 words
    std::vector<SearchExpr> children;   // all_of / any_of: >= 2; negate: 1

    static SearchExpr match_all() { return {}; }
    static SearchExpr keyword(std::string w) { return {Op::term, {std::move(w)}, {}}; }

    bool is_match_all() const noexcept { return op == Op::match_all; }

    friend bool operator==(const SearchExpr&, const SearchExpr&) = default;

    /// Positive keywords the expression can match on (ignores negated subtrees).
    void collect_positive_terms(std::vector<std::string>& out) const {
        switch (op) {
            case Op::term:
            case Op::phrase: out.insert(out.end(), words.begin(), words.end()); break;
            case Op::all_of:
            case Op::any_of:
                for (auto& c : children) c.collect_positive_terms(out);
                break;
            default: break;
        }
    }

    std::string to_string() const { return render(false); }

private:
    std::string render(bool nested) const {
        switch (op) {
            case Op::match_all: return "*";
            case Op::term: return words.front();
            case Op::phrase: {
                std::string s = "\"";
                for (std::size_t i = 0; i < words.size(); ++i) s += (i ? " " : "") + words[i];
                return s + "\"";
            }
            case Op::negate: return "NOT " + children.front().render(true);
            case Op::all_of:
            case Op::any_of: {
                std::string s;
                for (std::size_t i = 0; i < children.size(); ++i) {
                    if (i) s += op == Op::all_of ? " AND " : " OR ";
                    s += children[i].render(true);
                }
                return nested ? "(" + s + ")" : s;
            }
        }
        return "*";
    }
};

namespace detail {

class SearchParser {
public:
    explicit SearchParser(std::string_view src) : src_(src) {}

    SearchExpr parse() {
        skip();
        if (pos_ >= src_.size()) throw InvalidQueryError("empty search expression", pos_);
        auto e = parse_or();
        skip();
        if (pos_ < src_.size()) throw InvalidQueryError("unexpected input in search expression", pos_);
        return e;
    }

private:
    void skip() {
        while (pos_ < src_.size() && text::is_space(src_[pos_])) ++pos_;
    }

    bool keyword(std::string_view kw) {
        skip();
        if (src_.substr(pos_, kw.size()) != kw) return false;
        auto after = pos_ + kw.size();
        if (after < src_.size() && !text::is_space(src_[after]) && src_[after] != '(' && src_[after] != '"') return false;
        pos_ = after;
        return true;
    }

    bool at_operand_start() {
        skip();
        if (pos_ >= src_.size()) return false;
        char c = src_[pos_];
        if (c == ')') return false;
        auto save = pos_;
        if (keyword("AND") || keyword("OR")) {
            pos_ = save;
            return false;
        }
        return true;
    }

    SearchExpr parse_or() {
        std::vector<SearchExpr> parts{parse_and()};
        while (keyword("OR")) parts.push_back(parse_and());
        return combine(SearchExpr::Op::any_of, std::move(parts));
    }

    SearchExpr parse_and() {
        std::vector<SearchExpr> parts{parse_unary()};
        while (true) {
            if (keyword("AND")) {
                parts.push_back(parse_unary());
            } else if (at_operand_start()) {
                parts.push_back(parse_unary());
            } else {
                break;
            }
        }
        return combine(SearchExpr::Op::all_of, std::move(parts));
    }

    SearchExpr parse_unary() {
        if (keyword("NOT")) {
            SearchExpr e;
            e.op = SearchExpr::Op::negate;
            e.children.push_back(parse_unary());
            return e;
        }
        return parse_primary();
    }

    SearchExpr parse_primary() {
        skip();
        if (pos_ >= src_.size()) throw InvalidQueryError("expected search operand", pos_);
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = parse_or();
            skip();
            if (pos_ >= src_.size() || src_[pos_] != ')') throw InvalidQueryError("missing ')'", pos_);
            ++pos_;
            return e;
        }
        if (c == '"') {
            auto start = pos_;
            auto close = src_.find('"', pos_ + 1);
            if (close == std::string_view::npos) throw InvalidQueryError("unterminated phrase", start);
            auto body = src_.substr(pos_ + 1, close - pos_ - 1);
            pos_ = close + 1;
            if (text::trim(body) == "*") return SearchExpr::match_all();
            return from_words(text::tokenize_terms(body), start);
        }
        auto start = pos_;
        while (pos_ < src_.size() && !text::is_space(src_[pos_]) && src_[pos_] != '(' && src_[pos_] != ')' &&
               src_[pos_] != '"')
            ++pos_;
        auto word = src_.substr(start, pos_ - start);
        if (word.empty()) throw InvalidQueryError("expected search operand", start);
        if (word == "*") return SearchExpr::match_all();
        return from_words(text::tokenize_terms(word), start);
    }

    static SearchExpr from_words(std::vector<std::string> words, std::size_t at) {
        if (words.empty()) throw InvalidQueryError("search operand has no searchable characters", at);
        if (words.size() == 1) return SearchExpr::keyword(std::move(words.front()));
        return {SearchExpr::Op::phrase, std::move(words), {}};
    }

    static SearchExpr combine(SearchExpr::Op op, std::vector<SearchExpr> parts) {
        if (parts.size() == 1) return std::move(parts.front());
        SearchExpr e;
        e.op = op;
        for (auto& p : parts) {
            if (p.op == op) {
                for (auto& c : p.children) e.children.push_back(std::move(c));
            } else {
                e.children.push_back(std::move(p));
            }
        }
        return e;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline SearchExpr parse_search(std::string_view s) { return detail::SearchParser(s).parse(); }

/// Token multiset + positions of one piece of text, used for direct (index-free) evaluation.
class TokenBag {
public:
    explicit TokenBag(std::string_view text) {
        for (auto& t : text::tokenize(text)) {
            positions_[t.term].push_back(t.position);
            ++length_;
        }
    }

    std::size_t length() const noexcept { return length_; }

    std::size_t count(const std::string& term) const {
        auto it = positions_.find(term);
        return it == positions_.end() ? 0 : it->second.size();
    }

    const std::vector<std::uint32_t>* positions(const std::string& term) const {
        auto it = positions_.find(term);
        return it == positions_.end() ? nullptr : &it->second;
    }

private:
    std::unordered_map<std::string, std::vector<std::uint32_t>> positions_;
    std::size_t length_ = 0;
};

/// Normalized term frequency; the default content score of a keyword.
inline double term_score(std::size_t tf, std::size_t length) {
    return length == 0 ? 0.0 : static_cast<double>(tf) / static_cast<double>(length);
}

/// True when `words` occurs as consecutive positions, given each word's sorted positions.
inline bool phrase_occurs(const std::vector<const std::vector<std::uint32_t>*>& lists) {
    if (lists.empty() || !lists.front()) return false;
    for (auto start : *lists.front()) {
        bool ok = true;
        for (std::size_t k = 1; k < lists.size() && ok; ++k)
            ok = lists[k] && std::binary_search(lists[k]->begin(), lists[k]->end(), start + static_cast<std::uint32_t>(k));
        if (ok) return true;
    }
    return false;
}

/// Evaluates an expression against one text. Returns the content score when it matches.
/// Scores: keyword = tf/len; phrase and AND = min of parts; OR = max of matching parts;
/// NOT and "*" = 1.
inline std::optional<double> evaluate(const SearchExpr& e, const TokenBag& bag) {
    using Op = SearchExpr::Op;
    switch (e.op) {
        case Op::match_all: return 1.0;
        case Op::term: {
            auto tf = bag.count(e.words.front());
            if (tf == 0) return std::nullopt;
            return term_score(tf, bag.length());
        }
        case Op::phrase: {
            std::vector<const std::vector<std::uint32_t>*> lists;
            for (auto& w : e.words) lists.push_back(bag.positions(w));
            if (!phrase_occurs(lists)) return std::nullopt;
            double s = 1.0;
            for (auto& w : e.words) s = std::min(s, term_score(bag.count(w), bag.length()));
            return s;
        }
        case Op::all_of: {
            double s = 1.0;
            for (auto& c : e.children) {
                auto r = evaluate(c, bag);
                if (!r) return std::nullopt;
                s = std::min(s, *r);
            }
            return s;
        }
        case Op::any_of: {
            std::optional<double> best;
            for (auto& c : e.children)
                if (auto r = evaluate(c, bag); r && (!best || *r > *best)) best = r;
            return best;
        }
        case Op::negate:
            if (evaluate(e.children.front(), bag)) return std::nullopt;
            return 1.0;
    }
    return std::nullopt;
}

inline std::optional<double> evaluate(const SearchExpr& e, std::string_view text) { return evaluate(e, TokenBag(text)); }

}  // namespace xcube

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "xcube/corpus_store.hpp"
#include "xcube/full_text.hpp"

namespace xcube {

struct PathMatch {
    PathId path = 0;
    std::size_t doc_frequency = 0;  // documents containing the path, irrespective of the keyword
    std::size_t occurrence = 0;     // nodes on the path that match

    friend bool operator==(const PathMatch&, const PathMatch&) = default;
};

struct PathPosting {
    std::string term;
    std::vector<PathMatch> paths;  // sorted by path string
};

struct IndexStats {
    std::size_t terms = 0;
    std::size_t content_terms = 0;
    std::size_t name_terms = 0;
    std::size_t node_postings = 0;
    std::size_t path_postings = 0;
    std::size_t longest_posting = 0;
};

struct ScoredNode {
    NodeRef node = 0;
    double score = 0.0;
};

/// Sorted-access cursor over nodes matching an expression (descending score, then Dewey
/// order) with random access to the score of any node.
class NodeStream {
public:
    NodeStream() = default;
    explicit NodeStream(std::vector<ScoredNode> entries) : entries_(std::move(entries)) {
        std::sort(entries_.begin(), entries_.end(), [](const ScoredNode& a, const ScoredNode& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.node < b.node;
        });
        for (auto& e : entries_) lookup_.emplace(e.node, e.score);
    }

    bool exhausted() const noexcept { return cursor_ >= entries_.size(); }
    const ScoredNode& peek() const { return entries_.at(cursor_); }
    const ScoredNode& next() { return entries_.at(cursor_++); }
    std::size_t consumed() const noexcept { return cursor_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<ScoredNode>& entries() const noexcept { return entries_; }

    std::optional<double> score_of(NodeRef n) const {
        auto it = lookup_.find(n);
        if (it == lookup_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<ScoredNode> entries_;
    std::unordered_map<NodeRef, double> lookup_;
    std::size_t cursor_ = 0;
};

/// Full-text index over a corpus: content words and tag names map to the distinct paths they
/// occur on (each path acts as a virtual document); a node-level positional index serves
/// scoring and phrase checks. Path occurrence counts live in the store, not in the postings.
class PathIndex {
public:
    struct NodeEntry {
        NodeRef node = 0;
        std::vector<std::uint32_t> positions;
    };

    static PathIndex build(const CorpusStore& store) {
        PathIndex idx(store);
        idx.node_length_.assign(store.node_count(), 0);
        for (NodeRef n = 0; n < store.node_count(); ++n) {
            auto toks = text::tokenize(store.node(n).text);
            idx.node_length_[n] = static_cast<std::uint32_t>(toks.size());
            std::map<std::string, std::vector<std::uint32_t>> local;
            for (auto& t : toks) local[t.term].push_back(t.position);
            for (auto& [term, pos] : local) idx.content_[term].push_back({n, std::move(pos)});
        }
        for (PathId p = 0; p < store.paths().size(); ++p) {
            const auto& leaf = store.path(p).leaf();
            std::set<std::string> terms{leaf};
            for (auto& t : text::tokenize_terms(leaf)) terms.insert(t);
            for (auto& t : terms) idx.names_[t].push_back(p);
            idx.leaf_names_[leaf].push_back(p);
        }
        idx.derive_path_postings();
        return idx;
    }

    const CorpusStore& store() const noexcept { return *store_; }

    IndexStats stats() const {
        IndexStats s;
        std::set<std::string> all;
        for (auto& [t, v] : content_) {
            all.insert(t);
            s.node_postings += v.size();
            s.longest_posting = std::max(s.longest_posting, v.size());
        }
        for (auto& [t, v] : names_) all.insert(t);
        s.content_terms = content_.size();
        s.name_terms = names_.size();
        s.terms = all.size();
        for (auto& t : all) s.path_postings += posting(t).paths.size();
        return s;
    }

    /// Paths on which `term` occurs as a content word or within a tag name.
    PathPosting posting(const std::string& raw_term) const {
        auto terms = text::tokenize_terms(raw_term);
        std::string term = terms.size() == 1 ? terms.front() : text::canonical_name(raw_term);
        std::map<PathId, std::size_t> occ;
        if (auto it = content_paths_.find(term); it != content_paths_.end())
            for (auto& [p, c] : it->second) occ[p] = c;
        if (auto it = names_.find(term); it != names_.end())
            for (auto p : it->second) occ[p] = store_->path_occurrence(p);
        PathPosting out{term, {}};
        for (auto& [p, c] : occ) out.paths.push_back({p, store_->path_doc_frequency(p), c});
        sort_by_path(out.paths);
        return out;
    }

    /// Paths whose leaf name matches a glob hint (canonicalized).
    std::vector<PathId> paths_with_leaf(std::string_view hint) const {
        auto pattern = canonical_selector(hint);
        std::vector<PathId> out;
        for (auto& [name, ps] : leaf_names_)
            if (text::glob_match(pattern, name)) out.insert(out.end(), ps.begin(), ps.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Context probe: the distinct paths holding nodes that satisfy `expr`, optionally
    /// restricted to paths whose last step matches `name_hint`.
    std::vector<PathMatch> paths_for(const SearchExpr& expr, std::optional<std::string_view> name_hint = {}) const {
        if (expr.is_match_all() && (!name_hint || text::trim(*name_hint).empty()))
            throw InvalidQueryError("search query and name hint are both empty");
        std::optional<std::set<PathId>> restrict;
        if (name_hint && !text::trim(*name_hint).empty()) {
            auto ps = paths_with_leaf(*name_hint);
            restrict.emplace(ps.begin(), ps.end());
        }
        std::vector<PathMatch> out;
        if (expr.is_match_all()) {
            for (auto p : *restrict) out.push_back({p, store_->path_doc_frequency(p), store_->path_occurrence(p)});
        } else {
            auto candidates = candidate_paths(expr);
            if (restrict) {
                std::set<PathId> both;
                std::set_intersection(candidates.begin(), candidates.end(), restrict->begin(), restrict->end(),
                                      std::inserter(both, both.end()));
                candidates = std::move(both);
            }
            std::map<PathId, std::size_t> occ;
            for (auto& sn : evaluate_nodes(expr, candidates)) ++occ[store_->node(sn.node).path];
            for (auto& [p, c] : occ) out.push_back({p, store_->path_doc_frequency(p), c});
        }
        sort_by_path(out);
        return out;
    }

    /// Matching nodes, optionally restricted to a set of contexts.
    NodeStream scan_nodes(const SearchExpr& expr, const std::optional<std::set<PathId>>& filter = {}) const {
        if (filter) return NodeStream(evaluate_nodes(expr, *filter));
        std::set<PathId> all;
        if (expr.is_match_all()) {
            for (PathId p = 0; p < store_->paths().size(); ++p) all.insert(p);
        } else {
            all = candidate_paths(expr);
        }
        return NodeStream(evaluate_nodes(expr, all));
    }

    void save(const std::filesystem::path& dir) const {
        nlohmann::json j;
        j["format"] = "xcube-index/1";
        j["node_length"] = node_length_;
        auto& jc = j["content"] = nlohmann::json::object();
        for (auto& [term, entries] : content_) {
            auto& arr = jc[term] = nlohmann::json::array();
            for (auto& e : entries) arr.push_back({e.node, e.positions});
        }
        j["names"] = names_;
        std::ofstream(dir / "index.json") << j.dump() << "\n";
    }

    static PathIndex load(const std::filesystem::path& dir, const CorpusStore& store) {
        std::ifstream in(dir / "index.json");
        if (!in) throw IoError("no index in " + dir.string() + " (run index first)");
        auto j = nlohmann::json::parse(in);
        PathIndex idx(store);
        idx.node_length_ = j.at("node_length").get<std::vector<std::uint32_t>>();
        if (idx.node_length_.size() != store.node_count()) throw IoError("index does not match the corpus store; rebuild it");
        for (auto& [term, arr] : j.at("content").items())
            for (auto& e : arr) idx.content_[term].push_back({e.at(0).get<NodeRef>(), e.at(1).get<std::vector<std::uint32_t>>()});
        idx.names_ = j.at("names").get<std::unordered_map<std::string, std::vector<PathId>>>();
        for (PathId p = 0; p < store.paths().size(); ++p) idx.leaf_names_[store.path(p).leaf()].push_back(p);
        idx.derive_path_postings();
        return idx;
    }

private:
    explicit PathIndex(const CorpusStore& store) : store_(&store) {}

    void derive_path_postings() {
        content_paths_.clear();
        for (auto& [term, entries] : content_) {
            auto& m = content_paths_[term];
            for (auto& e : entries) ++m[store_->node(e.node).path];
        }
    }

    void sort_by_path(std::vector<PathMatch>& v) const {
        std::sort(v.begin(), v.end(), [&](const PathMatch& a, const PathMatch& b) {
            return store_->path(a.path) < store_->path(b.path);
        });
    }

    /// Path-level evaluation: each path is a virtual document holding the words of its nodes.
    /// Over-approximates node-level matches; callers verify at node level.
    std::set<PathId> candidate_paths(const SearchExpr& e) const {
        using Op = SearchExpr::Op;
        auto all_paths = [&] {
            std::set<PathId> s;
            for (PathId p = 0; p < store_->paths().size(); ++p) s.insert(p);
            return s;
        };
        auto of_term = [&](const std::string& t) {
            std::set<PathId> s;
            if (auto it = content_paths_.find(t); it != content_paths_.end())
                for (auto& [p, c] : it->second) s.insert(p);
            return s;
        };
        auto intersect = [](const std::set<PathId>& a, const std::set<PathId>& b) {
            std::set<PathId> out;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
            return out;
        };
        switch (e.op) {
            case Op::match_all:
            case Op::negate: return all_paths();
            case Op::term: return of_term(e.words.front());
            case Op::phrase: {
                auto s = of_term(e.words.front());
                for (std::size_t i = 1; i < e.words.size(); ++i) s = intersect(s, of_term(e.words[i]));
                return s;
            }
            case Op::all_of: {
                auto s = all_paths();
                for (auto& c : e.children) s = intersect(s, candidate_paths(c));
                return s;
            }
            case Op::any_of: {
                std::set<PathId> s;
                for (auto& c : e.children) {
                    auto cs = candidate_paths(c);
                    s.insert(cs.begin(), cs.end());
                }
                return s;
            }
        }
        return {};
    }

    std::vector<NodeRef> universe(const std::set<PathId>& paths) const {
        std::vector<NodeRef> out;
        for (auto p : paths) {
            const auto& ns = store_->nodes_on_path(p);
            out.insert(out.end(), ns.begin(), ns.end());
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    using Scored = std::vector<ScoredNode>;  // sorted by node

    Scored evaluate_set(const SearchExpr& e, const std::set<PathId>& paths) const {
        using Op = SearchExpr::Op;
        auto in_scope = [&](NodeRef n) { return paths.count(store_->node(n).path) > 0; };
        switch (e.op) {
            case Op::match_all: {
                Scored out;
                for (auto n : universe(paths)) out.push_back({n, 1.0});
                return out;
            }
            case Op::term: {
                Scored out;
                auto it = content_.find(e.words.front());
                if (it == content_.end()) return out;
                for (auto& entry : it->second)
                    if (in_scope(entry.node))
                        out.push_back({entry.node, term_score(entry.positions.size(), node_length_[entry.node])});
                return out;
            }
            case Op::phrase: {
                std::vector<const std::vector<NodeEntry>*> lists;
                for (auto& w : e.words) {
                    auto it = content_.find(w);
                    if (it == content_.end()) return {};
                    lists.push_back(&it->second);
                }
                Scored out;
                for (auto& first : *lists.front()) {
                    if (!in_scope(first.node)) continue;
                    std::vector<const std::vector<std::uint32_t>*> pos{&first.positions};
                    double s = term_score(first.positions.size(), node_length_[first.node]);
                    bool present = true;
                    for (std::size_t k = 1; k < lists.size() && present; ++k) {
                        auto it = std::lower_bound(lists[k]->begin(), lists[k]->end(), first.node,
                                                   [](const NodeEntry& a, NodeRef n) { return a.node < n; });
                        present = it != lists[k]->end() && it->node == first.node;
                        if (present) {
                            pos.push_back(&it->positions);
                            s = std::min(s, term_score(it->positions.size(), node_length_[first.node]));
                        }
                    }
                    if (present && phrase_occurs(pos)) out.push_back({first.node, s});
                }
                return out;
            }
            case Op::all_of: {
                std::optional<Scored> acc;
                std::vector<const SearchExpr*> negated;
                for (auto& c : e.children) {
                    if (c.op == Op::negate) {
                        negated.push_back(&c.children.front());
                        continue;
                    }
                    auto part = evaluate_set(c, paths);
                    if (!acc) {
                        acc = std::move(part);
                        continue;
                    }
                    Scored merged;
                    std::size_t i = 0, j = 0;
                    while (i < acc->size() && j < part.size()) {
                        if ((*acc)[i].node < part[j].node) ++i;
                        else if (part[j].node < (*acc)[i].node) ++j;
                        else {
                            merged.push_back({part[j].node, std::min((*acc)[i].score, part[j].score)});
                            ++i;
                            ++j;
                        }
                    }
                    acc = std::move(merged);
                }
                if (!acc) {
                    acc.emplace();
                    for (auto n : universe(paths)) acc->push_back({n, 1.0});
                }
                for (auto* neg : negated) *acc = subtract(*acc, evaluate_set(*neg, paths));
                return *acc;
            }
            case Op::any_of: {
                std::map<NodeRef, double> best;
                for (auto& c : e.children)
                    for (auto& sn : evaluate_set(c, paths)) {
                        auto [it, inserted] = best.emplace(sn.node, sn.score);
                        if (!inserted) it->second = std::max(it->second, sn.score);
                    }
                Scored out;
                for (auto& [n, s] : best) out.push_back({n, s});
                return out;
            }
            case Op::negate: {
                Scored all;
                for (auto n : universe(paths)) all.push_back({n, 1.0});
                return subtract(all, evaluate_set(e.children.front(), paths));
            }
        }
        return {};
    }

    static Scored subtract(const Scored& a, const Scored& b) {
        Scored out;
        std::size_t j = 0;
        for (auto& x : a) {
            while (j < b.size() && b[j].node < x.node) ++j;
            if (j < b.size() && b[j].node == x.node) continue;
            out.push_back(x);
        }
        return out;
    }

    std::vector<ScoredNode> evaluate_nodes(const SearchExpr& e, const std::set<PathId>& paths) const {
        return evaluate_set(e, paths);
    }

    const CorpusStore* store_;
    std::vector<std::uint32_t> node_length_;
    std::unordered_map<std::string, std::vector<NodeEntry>> content_;
    std::unordered_map<std::string, std::map<PathId, std::size_t>> content_paths_;
    std::unordered_map<std::string, std::vector<PathId>> names_;
    std::map<std::string, std::vector<PathId>> leaf_names_;
};

}  // namespace xcube

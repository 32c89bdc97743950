#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "xcube/path_index.hpp"
#include "xcube/query.hpp"

namespace xcube {

inline constexpr std::uint32_t kDefaultRadiusCap = 6;
inline constexpr std::size_t kDefaultK = 10;

struct ScoredTuple {
    std::vector<NodeRef> nodes;          // one per query term
    std::vector<double> content_scores;  // one per query term
    std::uint32_t distance = 0;          // sum of pairwise hop counts
    double score = 0.0;

    friend bool operator==(const ScoredTuple&, const ScoredTuple&) = default;
};

/// Total result order: descending score, then lexicographic node vector (Dewey order).
inline bool ranks_before(const ScoredTuple& a, const ScoredTuple& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.nodes < b.nodes;
}

struct TopKResult {
    std::size_t k = 0;
    std::vector<ScoredTuple> tuples;
    std::size_t sorted_accesses = 0;
    std::size_t candidates = 0;  // distinct connected tuples scored
    bool stopped_early = false;  // threshold test fired before any stream ran dry
};

/// Default ranking: sum of content scores divided by (1 + distance). Any replacement must be
/// non-decreasing in each content score and non-increasing in distance, and `bound` must give
/// the best score reachable from per-term upper bounds.
struct SumOverDistance {
    double score(const std::vector<double>& content, std::uint32_t distance) const {
        double sum = 0.0;
        for (double c : content) sum += c;
        return sum / (1.0 + static_cast<double>(distance));
    }
    double bound(const std::vector<double>& best_content) const { return score(best_content, 0); }
};

/// Undirected shortest-path distances over every edge kind, truncated at a radius. Balls are
/// memoized per source node.
class DistanceOracle {
public:
    DistanceOracle(const CorpusStore& store, std::uint32_t cap) : store_(&store), cap_(cap) {}

    std::uint32_t cap() const noexcept { return cap_; }

    /// Nodes within `cap` hops of `src`, with their distances.
    const std::unordered_map<NodeRef, std::uint32_t>& ball(NodeRef src) {
        auto it = balls_.find(src);
        if (it != balls_.end()) return it->second;
        std::unordered_map<NodeRef, std::uint32_t> dist{{src, 0}};
        std::deque<NodeRef> frontier{src};
        while (!frontier.empty()) {
            auto u = frontier.front();
            frontier.pop_front();
            auto du = dist[u];
            if (du == cap_) continue;
            store_->for_each_neighbor(u, [&](NodeRef v, EdgeKind, std::uint32_t) {
                if (dist.emplace(v, du + 1).second) frontier.push_back(v);
            });
        }
        return balls_.emplace(src, std::move(dist)).first->second;
    }

    std::optional<std::uint32_t> distance(NodeRef a, NodeRef b) {
        if (a == b) return 0;
        const auto& ba = ball(a);
        auto it = ba.find(b);
        if (it == ba.end()) return std::nullopt;
        return it->second;
    }

private:
    const CorpusStore* store_;
    std::uint32_t cap_;
    std::unordered_map<NodeRef, std::unordered_map<NodeRef, std::uint32_t>> balls_;
};

/// Sum of pairwise distances, or nullopt when some pair is farther apart than the cap.
inline std::optional<std::uint32_t> connection_distance(DistanceOracle& oracle, const std::vector<NodeRef>& nodes) {
    std::uint32_t total = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            auto d = oracle.distance(nodes[i], nodes[j]);
            if (!d) return std::nullopt;
            total += *d;
        }
    return total;
}

inline std::optional<std::uint32_t> connection_distance(const CorpusStore& store, const std::vector<DeweyId>& ids,
                                                        std::uint32_t cap = kDefaultRadiusCap) {
    std::vector<NodeRef> nodes;
    for (auto& id : ids) nodes.push_back(store.at(id));
    DistanceOracle oracle(store, cap);
    return connection_distance(oracle, nodes);
}

struct TopKOptions {
    std::size_t k = kDefaultK;
    std::uint32_t radius_cap = kDefaultRadiusCap;
    bool allow_duplicates = true;  // may two terms bind the same node
};

namespace detail {

template <class Scorer>
class ThresholdSearch {
public:
    ThresholdSearch(const PathIndex& index, const Query& q, const TopKOptions& opt, const Scorer& scorer)
        : store_(index.store()), q_(q), opt_(opt), scorer_(scorer), oracle_(index.store(), opt.radius_cap) {
        for (std::size_t i = 0; i < q.size(); ++i)
            streams_.push_back(index.scan_nodes(q.terms[i].search, admitted_paths(store_, q, i)));
    }

    TopKResult run() {
        TopKResult out;
        out.k = opt_.k;
        const auto m = streams_.size();
        for (auto& s : streams_)
            if (s.size() == 0) return out;
        std::vector<double> last(m);
        for (std::size_t i = 0; i < m; ++i) last[i] = streams_[i].peek().score;

        bool done = false;
        while (!done) {
            for (std::size_t i = 0; i < m && !done; ++i) {
                const auto entry = streams_[i].next();
                ++out.sorted_accesses;
                last[i] = entry.score;
                expand(i, entry.node);
                if (streams_[i].exhausted()) {
                    done = true;  // every tuple contains a node of term i, all of which were expanded
                } else if (top_.size() == opt_.k && scorer_.bound(last) < top_.back().score) {
                    out.stopped_early = true;
                    done = true;
                }
            }
        }
        out.tuples = std::move(top_);
        out.candidates = seen_.size();
        return out;
    }

private:
    // All tuples binding `n` to term `i`, completed from nodes within the radius of n.
    void expand(std::size_t i, NodeRef n) {
        const auto m = streams_.size();
        std::vector<std::vector<std::pair<NodeRef, double>>> options(m);
        options[i] = {{n, streams_[i].score_of(n).value()}};
        const auto& around = oracle_.ball(n);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            for (auto& [v, d] : around)
                if (auto s = streams_[j].score_of(v)) options[j].push_back({v, *s});
            if (options[j].empty()) return;
            std::sort(options[j].begin(), options[j].end());
        }
        std::vector<NodeRef> nodes(m);
        std::vector<double> scores(m);
        choose(0, options, nodes, scores, 0);
    }

    void choose(std::size_t j, const std::vector<std::vector<std::pair<NodeRef, double>>>& options,
                std::vector<NodeRef>& nodes, std::vector<double>& scores, std::uint32_t distance) {
        if (j == options.size()) {
            offer(nodes, scores, distance);
            return;
        }
        for (auto& [v, s] : options[j]) {
            std::uint32_t d = distance;
            bool ok = true;
            for (std::size_t p = 0; p < j && ok; ++p) {
                if (!opt_.allow_duplicates && nodes[p] == v) ok = false;
                auto dp = ok ? oracle_.distance(nodes[p], v) : std::nullopt;
                if (!dp) ok = false;
                else d += *dp;
            }
            if (!ok) continue;
            nodes[j] = v;
            scores[j] = s;
            choose(j + 1, options, nodes, scores, d);
        }
    }

    void offer(const std::vector<NodeRef>& nodes, const std::vector<double>& scores, std::uint32_t distance) {
        if (!seen_.insert(nodes).second) return;
        ScoredTuple t{nodes, scores, distance, scorer_.score(scores, distance)};
        auto pos = std::lower_bound(top_.begin(), top_.end(), t, ranks_before);
        if (top_.size() == opt_.k && pos == top_.end()) return;
        top_.insert(pos, std::move(t));
        if (top_.size() > opt_.k) top_.pop_back();
    }

    const CorpusStore& store_;
    const Query& q_;
    TopKOptions opt_;
    Scorer scorer_;
    DistanceOracle oracle_;
    std::vector<NodeStream> streams_;
    std::set<std::vector<NodeRef>> seen_;
    std::vector<ScoredTuple> top_;
};

}  // namespace detail

/// Top-k connected tuples for a query (restricted by its selected contexts, if any), found by
/// round-robin sorted access over per-term node streams with random-access completion and
/// threshold termination.
template <class Scorer = SumOverDistance>
TopKResult top_k(const PathIndex& index, const Query& q, const TopKOptions& opt = {}, const Scorer& scorer = {}) {
    if (opt.k < 1) throw InvalidArgumentError("k must be at least 1");
    if (q.terms.empty()) throw InvalidArgumentError("query has no terms");
    if (q.refinement.contexts && q.refinement.contexts->size() != q.size())
        throw InvalidArgumentError("context selection must have one entry per term");
    return detail::ThresholdSearch<Scorer>(index, q, opt, scorer).run();
}

}  // namespace xcube

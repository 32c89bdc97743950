#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xcube/connection.hpp"
#include "xcube/dataguide.hpp"
#include "xcube/query.hpp"
#include "xcube/topk.hpp"

namespace xcube {

/// Bound on the number of tied-shortest routes enumerated per endpoint pair.
inline constexpr std::size_t kMaxRoutesPerPair = 256;

/// Graph over guide tree nodes: tree edges (up/down) plus lifted guide links.
class GuideGraph {
public:
    struct Edge {
        std::uint32_t to = 0;
        Step step;
    };

    explicit GuideGraph(const GuideSet& gs) {
        for (auto& g : gs.guides())
            for (auto& p : g.paths) intern({g.id, p});
        for (std::uint32_t v = 0; v < nodes_.size(); ++v) {
            const auto& gn = nodes_[v];
            if (gn.path.depth() > 1) {
                auto parent = index_.at({gn.guide, gn.path.parent()});
                adj_[v].push_back({parent, Step::up()});
                adj_[parent].push_back({v, Step::down()});
            }
        }
        for (auto& l : gs.links()) {
            auto a = index_.at(l.from);
            auto b = index_.at(l.to);
            adj_[a].push_back({b, Step::link(l.kind, l.label, true)});
            adj_[b].push_back({a, Step::link(l.kind, l.label, false)});
        }
        for (auto& [gn, v] : index_) by_path_[gn.path].push_back(v);
    }

    /// All tied-shortest routes from any guide node on `a` to any guide node on `b`, up to
    /// `cap` steps, as canonical connections.
    std::vector<Connection> shortest(const ContextPath& a, const ContextPath& b, std::uint32_t cap) const {
        auto src = by_path_.find(a);
        auto dst = by_path_.find(b);
        if (src == by_path_.end() || dst == by_path_.end()) return {};
        constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();
        std::vector<std::uint32_t> dist(nodes_.size(), kInf);
        std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> pred(nodes_.size());  // (node, edge index)
        std::deque<std::uint32_t> q;
        for (auto s : src->second) {
            dist[s] = 0;
            q.push_back(s);
        }
        std::set<std::uint32_t> targets(dst->second.begin(), dst->second.end());
        std::uint32_t best = kInf;
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            if (dist[u] >= best || dist[u] >= cap) continue;
            for (std::size_t e = 0; e < adj_[u].size(); ++e) {
                auto v = adj_[u][e].to;
                if (dist[v] == kInf) {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                    if (targets.count(v)) best = std::min(best, dist[v]);
                }
                if (dist[v] == dist[u] + 1) pred[v].push_back({u, e});
            }
        }
        if (best == kInf) return {};
        std::map<std::string, Connection> out;
        std::vector<std::uint32_t> route_nodes;
        std::vector<Step> route_steps;
        std::size_t budget = kMaxRoutesPerPair;
        for (auto t : targets) {
            if (dist[t] != best) continue;
            route_nodes = {t};
            route_steps.clear();
            backtrack(t, pred, route_nodes, route_steps, out, budget);
        }
        std::vector<Connection> result;
        for (auto& [id, c] : out) result.push_back(std::move(c));
        return result;
    }

    /// The route inside one guide tree: climb from `a` to the longest common prefix, then
    /// descend to `b`. Empty when no guide holds both paths or the route exceeds `cap`.
    std::optional<Connection> tree_route(const ContextPath& a, const ContextPath& b, std::uint32_t cap) const {
        auto src = by_path_.find(a);
        auto dst = by_path_.find(b);
        if (src == by_path_.end() || dst == by_path_.end() || a == b) return std::nullopt;
        std::set<std::uint32_t> guides;
        for (auto v : src->second) guides.insert(nodes_[v].guide);
        bool shared = std::any_of(dst->second.begin(), dst->second.end(),
                                  [&](std::uint32_t v) { return guides.count(nodes_[v].guide) > 0; });
        if (!shared) return std::nullopt;
        std::size_t common = 0;
        while (common < a.depth() && common < b.depth() && a.segments()[common] == b.segments()[common]) ++common;
        if (common == 0) return std::nullopt;  // different roots never share a document tree
        if (a.depth() + b.depth() - 2 * common > cap) return std::nullopt;
        Connection c;
        c.waypoints.push_back(a);
        for (auto p = a; p.depth() > common;) {
            p = p.parent();
            c.waypoints.push_back(p);
            c.steps.push_back(Step::up());
        }
        for (std::size_t d = common + 1; d <= b.depth(); ++d) {
            c.waypoints.push_back(b.prefix(d));
            c.steps.push_back(Step::down());
        }
        return canonicalize(std::move(c));
    }

private:
    void intern(const GuideNode& gn) {
        if (index_.emplace(gn, static_cast<std::uint32_t>(nodes_.size())).second) {
            nodes_.push_back(gn);
            adj_.emplace_back();
        }
    }

    void backtrack(std::uint32_t v, const std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>>& pred,
                   std::vector<std::uint32_t>& route_nodes, std::vector<Step>& route_steps,
                   std::map<std::string, Connection>& out, std::size_t& budget) const {
        if (budget == 0) return;
        if (pred[v].empty()) {  // reached a source (distance 0)
            Connection c;
            for (auto it = route_nodes.rbegin(); it != route_nodes.rend(); ++it) c.waypoints.push_back(nodes_[*it].path);
            for (auto it = route_steps.rbegin(); it != route_steps.rend(); ++it) c.steps.push_back(*it);
            c = canonicalize(std::move(c));
            out.emplace(c.id, std::move(c));
            --budget;
            return;
        }
        for (auto& [u, e] : pred[v]) {
            route_nodes.push_back(u);
            route_steps.push_back(adj_[u][e].step);
            backtrack(u, pred, route_nodes, route_steps, out, budget);
            route_nodes.pop_back();
            route_steps.pop_back();
        }
    }

    std::vector<GuideNode> nodes_;
    std::map<GuideNode, std::uint32_t> index_;
    std::vector<std::vector<Edge>> adj_;
    std::map<ContextPath, std::vector<std::uint32_t>> by_path_;
};

/// All shortest data-graph routes between two nodes (within `cap` hops), as connections.
inline std::vector<Connection> instance_routes(const CorpusStore& store, NodeRef a, NodeRef b, std::uint32_t cap) {
    if (a == b) return {canonicalize(Connection{{}, {store.context(a)}, {}})};
    struct Pred {
        NodeRef from;
        Step step;
    };
    std::unordered_map<NodeRef, std::uint32_t> dist{{a, 0}};
    std::unordered_map<NodeRef, std::vector<Pred>> pred;
    std::deque<NodeRef> q{a};
    std::optional<std::uint32_t> found;
    while (!q.empty()) {
        auto u = q.front();
        q.pop_front();
        auto du = dist[u];
        if (du >= cap || (found && du >= *found)) continue;
        store.for_each_incident(u, [&](NodeRef v, EdgeKind kind, std::uint32_t label, bool outgoing) {
            Step st = kind == EdgeKind::parent_child ? (outgoing ? Step::down() : Step::up())
                                                     : Step::link(kind, store.label(label), outgoing);
            auto [it, inserted] = dist.emplace(v, du + 1);
            if (inserted) q.push_back(v);
            if (it->second == du + 1) pred[v].push_back({u, st});
            if (v == b) found = du + 1;
        });
    }
    if (!found) return {};
    std::map<std::string, Connection> out;
    std::vector<NodeRef> nodes{b};
    std::vector<Step> steps;
    std::size_t budget = kMaxRoutesPerPair;
    std::function<void(NodeRef)> back = [&](NodeRef v) {
        if (budget == 0) return;
        if (v == a) {
            Connection c;
            for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) c.waypoints.push_back(store.context(*it));
            for (auto it = steps.rbegin(); it != steps.rend(); ++it) c.steps.push_back(*it);
            c = canonicalize(std::move(c));
            out.emplace(c.id, std::move(c));
            --budget;
            return;
        }
        for (auto& p : pred[v]) {
            nodes.push_back(p.from);
            steps.push_back(p.step);
            back(p.from);
            nodes.pop_back();
            steps.pop_back();
        }
    };
    back(b);
    std::vector<Connection> result;
    for (auto& [id, c] : out) result.push_back(std::move(c));
    return result;
}

/// Memo of guide-level routes keyed by endpoint path pair. Entries are value-identical for a
/// given guide set, so concurrent writers may race harmlessly.
class ConnectionCache {
public:
    template <class Compute>
    std::vector<Connection> get(const ContextPath& a, const ContextPath& b, Compute&& compute) {
        auto key = a < b ? std::make_pair(a.str(), b.str()) : std::make_pair(b.str(), a.str());
        {
            std::lock_guard lock(mu_);
            if (auto it = entries_.find(key); it != entries_.end()) {
                ++hits_;
                return it->second;
            }
        }
        auto value = compute();
        std::lock_guard lock(mu_);
        ++misses_;
        entries_[key] = value;
        return value;
    }

    void clear() {
        std::lock_guard lock(mu_);
        entries_.clear();
    }
    std::size_t size() const {
        std::lock_guard lock(mu_);
        return entries_.size();
    }
    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::string>, std::vector<Connection>> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

struct ConnectionGroup {
    std::size_t i = 0;  // term indices, i < j
    std::size_t j = 0;
    std::vector<std::string> ids;  // sorted by length, then canonical text
};

struct ConnectionSummary {
    std::map<std::string, Connection> connections;
    std::vector<ConnectionGroup> groups;
    std::map<std::string, std::vector<std::size_t>> provenance;  // top-k tuple indices per id

    bool empty() const noexcept { return connections.empty(); }
    bool contains(const std::string& id) const { return connections.count(id) > 0; }
    const ConnectionGroup* group(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        for (auto& g : groups)
            if (g.i == i && g.j == j) return &g;
        return nullptr;
    }
};

struct SummaryOptions {
    std::uint32_t radius_cap = kDefaultRadiusCap;
    bool include_guide_routes = true;
};

/// Pairwise connections realized by, or structurally possible for, the top-k tuples. Every
/// shortest route between the two nodes of a tuple pair is included (so nothing realized in
/// top-k is missed); for distinct endpoint contexts the tied-shortest routes in the guide
/// graph are added as well, along with the in-guide tree route between the two contexts, so the
/// intra-document join stays selectable when a shorter link route exists. Merged guides are
/// where spurious alternatives come from.
inline ConnectionSummary summarize_connections(const CorpusStore& store, const GuideSet& guides, const Query& q,
                                               const TopKResult& topk, const SummaryOptions& opt = {},
                                               ConnectionCache* cache = nullptr) {
    ConnectionSummary out;
    const auto m = q.size();
    if (m < 2 || topk.tuples.empty()) return out;
    GuideGraph graph(guides);
    ConnectionCache local;
    if (!cache) cache = &local;
    std::map<std::pair<std::size_t, std::size_t>, std::set<std::string>> grouped;
    auto add = [&](std::size_t i, std::size_t j, const Connection& c) {
        out.connections.emplace(c.id, c);
        grouped[{i, j}].insert(c.id);
    };
    for (std::size_t t = 0; t < topk.tuples.size(); ++t) {
        const auto& nodes = topk.tuples[t].nodes;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                for (auto& c : instance_routes(store, nodes[i], nodes[j], opt.radius_cap)) {
                    add(i, j, c);
                    auto& prov = out.provenance[c.id];
                    if (prov.empty() || prov.back() != t) prov.push_back(t);
                }
                const auto& pa = store.context(nodes[i]);
                const auto& pb = store.context(nodes[j]);
                if (!opt.include_guide_routes || pa == pb) continue;
                auto routes = cache->get(pa, pb, [&] {
                    auto r = graph.shortest(pa, pb, opt.radius_cap);
                    if (auto t = graph.tree_route(pa, pb, opt.radius_cap))
                        if (std::none_of(r.begin(), r.end(), [&](const Connection& c) { return c.id == t->id; }))
                            r.push_back(*t);
                    return r;
                });
                for (auto& c : routes) add(i, j, c);
            }
    }
    for (auto& [pair, ids] : grouped) {
        ConnectionGroup g{pair.first, pair.second, {ids.begin(), ids.end()}};
        std::sort(g.ids.begin(), g.ids.end(), [&](const std::string& a, const std::string& b) {
            const auto& ca = out.connections.at(a);
            const auto& cb = out.connections.at(b);
            if (ca.length() != cb.length()) return ca.length() < cb.length();
            return ca.canonical_text() < cb.canonical_text();
        });
        out.groups.push_back(std::move(g));
    }
    return out;
}

/// Restricts materialization to the chosen connections. Every id must come from the summary.
inline Query apply_connection_selection(const Query& q, const ConnectionSummary& summary,
                                        const std::set<std::string>& chosen) {
    for (auto& id : chosen)
        if (!summary.contains(id)) throw InvalidSelectionError("unknown connection id: " + id);
    Query out = q;
    out.refinement.connections = chosen;
    return out;
}

/// Whether some pair of nodes satisfying terms i and j is an instance of `c`.
inline bool instantiated(const CorpusStore& store, const Query& q, std::size_t i, std::size_t j, const Connection& c) {
    auto try_from = [&](std::size_t s, std::size_t t, const Connection& oriented) {
        auto pid = store.path_id(oriented.from());
        if (!pid) return false;
        for (auto a : store.nodes_on_path(*pid)) {
            if (!satisfies(store, a, q, s)) continue;
            for (auto b : walk(store, oriented, a))
                if (satisfies(store, b, q, t)) return true;
        }
        return false;
    };
    return try_from(i, j, c) || try_from(j, i, c);
}

/// Summary connections with no instance among the query's satisfying nodes.
inline std::size_t count_false_positives(const CorpusStore& store, const Query& q, const ConnectionSummary& s) {
    std::size_t count = 0;
    for (auto& [id, c] : s.connections) {
        bool any = false;
        for (auto& g : s.groups)
            if (std::find(g.ids.begin(), g.ids.end(), id) != g.ids.end() && instantiated(store, q, g.i, g.j, c)) {
                any = true;
                break;
            }
        if (!any) ++count;
    }
    return count;
}

inline nlohmann::json summary_to_json(const ConnectionSummary& s) {
    auto groups = nlohmann::json::array();
    for (auto& g : s.groups) {
        auto conns = nlohmann::json::array();
        for (auto& id : g.ids) {
            auto j = connection_to_json(s.connections.at(id));
            auto it = s.provenance.find(id);
            j["provenance"] = it == s.provenance.end() ? std::vector<std::size_t>{} : it->second;
            conns.push_back(std::move(j));
        }
        groups.push_back({{"terms", {g.i, g.j}}, {"connections", conns}});
    }
    return {{"groups", groups}};
}

inline std::string render_summary(const Query& q, const ConnectionSummary& s) {
    std::ostringstream os;
    if (s.groups.empty()) os << "no connections (fewer than two terms or no top-k results)\n";
    for (auto& g : s.groups) {
        os << "terms " << g.i + 1 << " <-> " << g.j + 1 << "  " << q.terms[g.i].to_string() << " / "
           << q.terms[g.j].to_string() << "\n";
        for (auto& id : g.ids) {
            const auto& c = s.connections.at(id);
            auto it = s.provenance.find(id);
            std::size_t n = it == s.provenance.end() ? 0 : it->second.size();
            bool chosen = q.refinement.connections && q.refinement.connections->count(id);
            os << (chosen ? "  [x] " : "  [ ] ") << id << "  len=" << c.length() << "  top-k=" << n << "  "
               << c.render() << "\n"
               << "        " << c.canonical_text() << "\n";
        }
    }
    return os.str();
}

}  // namespace xcube

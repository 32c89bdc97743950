#pragma once
// Brute-force reference implementations used by the oracle tests. They deliberately avoid the
// engine's indexes and planners and recompute everything from first principles.

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "xcube/connection.hpp"
#include "xcube/corpus_store.hpp"
#include "xcube/query.hpp"

namespace xcube::oracle {

// ---- text --------------------------------------------------------------

inline std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::string squeeze(const std::string& s) {
    std::istringstream in(s);
    std::string w, out;
    while (in >> w) out += (out.empty() ? "" : " ") + w;
    return out;
}

/// Descendant text of an element by walking a Boost DOM (text runs kept separate).
inline std::string dom_content(const boost::property_tree::ptree& node) {
    std::string out;
    for (auto& [key, child] : node) {
        if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
        std::string piece = key == "<xmltext>" ? squeeze(child.data()) : dom_content(child);
        if (piece.empty()) continue;
        if (!out.empty()) out += " ";
        out += piece;
    }
    return out;
}

inline boost::property_tree::ptree parse_dom(const std::string& xml) {
    boost::property_tree::ptree pt;
    std::istringstream in(xml);
    boost::property_tree::read_xml(in, pt, boost::property_tree::xml_parser::no_concat_text);
    return pt;
}

// ---- scoring -----------------------------------------------------------

/// Score of a single-keyword search on a text: occurrences / token count.
inline std::optional<double> keyword_score(const std::string& keyword, const std::string& text) {
    auto ws = words(text);
    auto n = std::count(ws.begin(), ws.end(), keyword);
    if (n == 0) return std::nullopt;
    return static_cast<double>(n) / static_cast<double>(ws.size());
}

// ---- graph -------------------------------------------------------------

/// Undirected adjacency over every edge kind, rebuilt from the raw node and link tables.
inline std::vector<std::vector<NodeRef>> adjacency(const CorpusStore& store) {
    std::vector<std::vector<NodeRef>> adj(store.node_count());
    for (NodeRef n = 0; n < store.node_count(); ++n) {
        auto p = store.node(n).parent;
        if (p != kNoNode) {
            adj[n].push_back(p);
            adj[p].push_back(n);
        }
    }
    for (auto& l : store.links()) {
        adj[l.from].push_back(l.to);
        adj[l.to].push_back(l.from);
    }
    return adj;
}

inline std::vector<int> bfs(const std::vector<std::vector<NodeRef>>& adj, NodeRef src) {
    std::vector<int> dist(adj.size(), -1);
    std::deque<NodeRef> q{src};
    dist[src] = 0;
    while (!q.empty()) {
        auto u = q.front();
        q.pop_front();
        for (auto v : adj[u])
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
    }
    return dist;
}

struct OracleTuple {
    std::vector<NodeRef> nodes;
    double score = 0;
    int distance = 0;
};

/// All satisfying, connected tuples scored as sum(content) / (1 + distance), sorted by score
/// descending then node vector ascending.
inline std::vector<OracleTuple> enumerate_topk(const CorpusStore& store, const Query& q, std::size_t k, int cap,
                                               bool allow_duplicates = true) {
    auto adj = adjacency(store);
    std::vector<std::vector<std::pair<NodeRef, double>>> cands(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        for (NodeRef n = 0; n < store.node_count(); ++n) {
            if (!q.context_selected(i, store.context(n))) continue;
            const auto& t = q.terms[i];
            if (!t.context.matches(store.node(n).name, store.context(n))) continue;
            if (auto s = evaluate(t.search, store.node(n).text)) cands[i].push_back({n, *s});
        }
    std::map<NodeRef, std::vector<int>> dist;
    auto d = [&](NodeRef a, NodeRef b) {
        auto it = dist.find(a);
        if (it == dist.end()) it = dist.emplace(a, bfs(adj, a)).first;
        return it->second[b];
    };
    std::vector<OracleTuple> all;
    std::vector<std::size_t> idx(q.size(), 0);
    for (auto& c : cands)
        if (c.empty()) return {};
    while (true) {
        OracleTuple t;
        double sum = 0;
        bool ok = true;
        for (std::size_t i = 0; i < q.size(); ++i) {
            t.nodes.push_back(cands[i][idx[i]].first);
            sum += cands[i][idx[i]].second;
        }
        for (std::size_t i = 0; i < q.size() && ok; ++i)
            for (std::size_t j = i + 1; j < q.size() && ok; ++j) {
                if (!allow_duplicates && t.nodes[i] == t.nodes[j]) ok = false;
                if (!ok) break;
                int dij = d(t.nodes[i], t.nodes[j]);
                if (dij < 0 || dij > cap) ok = false;
                else t.distance += dij;
            }
        if (ok) {
            t.score = sum / (1.0 + t.distance);
            all.push_back(t);
        }
        std::size_t pos = 0;
        while (pos < q.size() && ++idx[pos] == cands[pos].size()) idx[pos++] = 0;
        if (pos == q.size()) break;
    }
    std::sort(all.begin(), all.end(), [](const OracleTuple& a, const OracleTuple& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.nodes < b.nodes;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

/// Independent connection conformance: follows parent pointers and scans the full link list
/// instead of using the store's incidence lists.
inline bool conforms_oneway(const CorpusStore& store, const Connection& c, NodeRef a, NodeRef b) {
    if (store.context(a) != c.from() || store.context(b) != c.to()) return false;
    std::set<NodeRef> cur{a};
    for (std::size_t i = 0; i < c.steps.size(); ++i) {
        const auto& st = c.steps[i];
        std::set<NodeRef> next;
        for (auto u : cur) {
            if (st.kind == Step::Kind::up) {
                if (store.node(u).parent != kNoNode) next.insert(store.node(u).parent);
            } else if (st.kind == Step::Kind::down) {
                for (NodeRef v = 0; v < store.node_count(); ++v)
                    if (store.node(v).parent == u) next.insert(v);
            } else {
                for (auto& l : store.links()) {
                    if (l.kind != st.link_kind || store.label(l.label) != st.label) continue;
                    if (st.forward && l.from == u) next.insert(l.to);
                    if (!st.forward && l.to == u) next.insert(l.from);
                }
            }
        }
        cur.clear();
        for (auto v : next)
            if (store.context(v) == c.waypoints[i + 1]) cur.insert(v);
    }
    return cur.count(b) > 0;
}

inline bool conforms_any(const CorpusStore& store, const Connection& c, NodeRef a, NodeRef b) {
    return conforms_oneway(store, c, a, b) || conforms_oneway(store, c.reversed(), a, b);
}

/// Nested-loop materialization: every tuple of satisfying nodes (refinement honored) whose
/// every term pair conforms to at least one chosen connection. Rows sorted and distinct.
inline std::vector<std::vector<NodeRef>> materialize(const CorpusStore& store, const Query& q,
                                                     const std::vector<Connection>& chosen) {
    std::vector<std::vector<NodeRef>> cands(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        for (NodeRef n = 0; n < store.node_count(); ++n) {
            if (!q.context_selected(i, store.context(n))) continue;
            const auto& t = q.terms[i];
            if (!t.context.matches(store.node(n).name, store.context(n))) continue;
            if (evaluate(t.search, store.node(n).text)) cands[i].push_back(n);
        }
    std::vector<std::vector<NodeRef>> rows;
    for (auto& c : cands)
        if (c.empty()) return rows;
    if (q.size() >= 2 && chosen.empty()) return rows;
    std::vector<std::size_t> idx(q.size(), 0);
    while (true) {
        std::vector<NodeRef> row;
        for (std::size_t i = 0; i < q.size(); ++i) row.push_back(cands[i][idx[i]]);
        bool ok = true;
        for (std::size_t i = 0; i < q.size() && ok; ++i)
            for (std::size_t j = i + 1; j < q.size() && ok; ++j)
                ok = std::any_of(chosen.begin(), chosen.end(),
                                 [&](const Connection& c) { return conforms_any(store, c, row[i], row[j]); });
        if (ok) rows.push_back(row);
        std::size_t pos = 0;
        while (pos < q.size() && ++idx[pos] == cands[pos].size()) idx[pos++] = 0;
        if (pos == q.size()) break;
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
}

}  // namespace xcube::oracle

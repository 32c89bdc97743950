#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "xcube/corpus_store.hpp"

namespace xcube {

struct Step {
    enum class Kind : std::uint8_t { up, down, link };

    Kind kind = Kind::up;
    EdgeKind link_kind = EdgeKind::value_based;  // link steps only
    std::string label;                           // link steps only
    bool forward = true;                         // link steps: traversed from its source to its target

    friend bool operator==(const Step&, const Step&) = default;

    Step reversed() const {
        Step s = *this;
        if (kind == Kind::up) s.kind = Kind::down;
        else if (kind == Kind::down) s.kind = Kind::up;
        else s.forward = !forward;
        return s;
    }

    static Step up() { return {Kind::up, EdgeKind::parent_child, {}, true}; }
    static Step down() { return {Kind::down, EdgeKind::parent_child, {}, true}; }
    static Step link(EdgeKind k, std::string label, bool forward) { return {Kind::link, k, std::move(label), forward}; }
};

/// A route between two contexts: waypoint paths and the steps between consecutive waypoints.
/// Stored in canonical orientation (from the smaller endpoint); `id` hashes the canonical form.
struct Connection {
    std::string id;
    std::vector<ContextPath> waypoints;  // steps.size() + 1 entries
    std::vector<Step> steps;

    const ContextPath& from() const { return waypoints.front(); }
    const ContextPath& to() const { return waypoints.back(); }
    std::size_t length() const noexcept { return steps.size(); }

    Connection reversed() const {
        Connection c;
        c.id = id;
        c.waypoints.assign(waypoints.rbegin(), waypoints.rend());
        for (auto it = steps.rbegin(); it != steps.rend(); ++it) c.steps.push_back(it->reversed());
        return c;
    }

    /// Exact textual form that determines identity.
    std::string canonical_text() const {
        std::string s = waypoints.front().str();
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& st = steps[i];
            switch (st.kind) {
                case Step::Kind::up: s += " ^ "; break;
                case Step::Kind::down: s += " v "; break;
                case Step::Kind::link:
                    s += st.forward ? " ~" : " <~";
                    s += std::string(to_string(st.link_kind)) + ":" + st.label + (st.forward ? "~> " : "~ ");
                    break;
            }
            s += waypoints[i + 1].str();
        }
        return s;
    }

    /// Human-readable form, e.g. "percentage ↑item ↓trade_country".
    std::string render() const {
        std::string s = waypoints.front().leaf();
        if (steps.empty()) return s + " (same node)";
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& st = steps[i];
            const auto& name = waypoints[i + 1].leaf();
            switch (st.kind) {
                case Step::Kind::up: s += " \xE2\x86\x91" + name; break;    // ↑
                case Step::Kind::down: s += " \xE2\x86\x93" + name; break;  // ↓
                case Step::Kind::link:
                    s += std::string(st.forward ? " \xE2\x86\x92" : " \xE2\x86\x90") + "[" + st.label + "]" + name;  // → ←
                    break;
            }
        }
        return s;
    }

    bool has_link() const {
        return std::any_of(steps.begin(), steps.end(), [](const Step& s) { return s.kind == Step::Kind::link; });
    }

    friend bool operator==(const Connection& a, const Connection& b) {
        return a.waypoints == b.waypoints && a.steps == b.steps;
    }
};

/// Orients a connection canonically and assigns its id.
inline Connection canonicalize(Connection c) {
    auto r = c.reversed();
    bool flip = r.from() < c.from() || (r.from() == c.from() && r.canonical_text() < c.canonical_text());
    if (flip) c = std::move(r);
    c.id = text::hex64(text::fnv1a64(c.canonical_text()));
    return c;
}

inline nlohmann::json connection_to_json(const Connection& c) {
    auto wps = nlohmann::json::array();
    for (auto& w : c.waypoints) wps.push_back(w.str());
    auto steps = nlohmann::json::array();
    for (auto& s : c.steps) {
        if (s.kind == Step::Kind::link)
            steps.push_back({{"step", "link"}, {"kind", to_string(s.link_kind)}, {"label", s.label}, {"forward", s.forward}});
        else
            steps.push_back({{"step", s.kind == Step::Kind::up ? "up" : "down"}});
    }
    return {{"id", c.id},      {"from", c.from().str()}, {"to", c.to().str()},     {"length", c.length()},
            {"steps", steps},  {"waypoints", wps},       {"rendering", c.render()}};
}

/// Nodes reached from `start` by following `c` step by step, each intermediate node having
/// the waypoint's context. Walks need not be simple paths.
inline std::set<NodeRef> walk(const CorpusStore& store, const Connection& c, NodeRef start) {
    std::set<NodeRef> frontier;
    if (store.context(start) != c.from()) return frontier;
    frontier.insert(start);
    for (std::size_t i = 0; i < c.steps.size() && !frontier.empty(); ++i) {
        const auto& st = c.steps[i];
        const auto& want = c.waypoints[i + 1];
        auto want_id = store.path_id(want);
        if (!want_id) return {};
        std::set<NodeRef> next;
        for (auto u : frontier) {
            store.for_each_incident(u, [&](NodeRef v, EdgeKind kind, std::uint32_t label, bool outgoing) {
                if (store.node(v).path != *want_id) return;
                switch (st.kind) {
                    case Step::Kind::up:
                        if (kind == EdgeKind::parent_child && !outgoing) next.insert(v);
                        break;
                    case Step::Kind::down:
                        if (kind == EdgeKind::parent_child && outgoing) next.insert(v);
                        break;
                    case Step::Kind::link:
                        if (kind == st.link_kind && outgoing == st.forward && store.label(label) == st.label) next.insert(v);
                        break;
                }
            });
        }
        frontier = std::move(next);
    }
    return frontier;
}

/// Whether the pair (a, b) is an instance of `c`, in either orientation.
inline bool conforms(const CorpusStore& store, const Connection& c, NodeRef a, NodeRef b) {
    const auto& ca = store.context(a);
    const auto& cb = store.context(b);
    if (ca == c.from() && cb == c.to() && walk(store, c, a).count(b)) return true;
    if (ca == c.to() && cb == c.from() && walk(store, c.reversed(), a).count(b)) return true;
    return false;
}

}  // namespace xcube

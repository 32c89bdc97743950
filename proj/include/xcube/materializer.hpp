#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "xcube/connection_summary.hpp"
#include "xcube/path_index.hpp"

namespace xcube {

// --- plan --------------------------------------------------------------------------------

/// A plan variable: a query-term binding or an interior node where a connection crosses a link.
struct PlanVar {
    ContextPath path;
    PathId path_id = 0;
    std::optional<std::size_t> term;
};

/// Tree constraint inside one document: the two nodes share their first `depth` Dewey steps.
struct TreeJoin {
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t depth = 0;
};

struct TwigPattern {
    std::vector<std::size_t> vars;  // ascending
    std::vector<TreeJoin> joins;
};

struct CrossTwigEdge {
    std::size_t left_twig = 0, right_twig = 0;
    std::size_t left = 0, right = 0;  // vars; `left` is the link's source when forward
    EdgeKind kind = EdgeKind::value_based;
    std::string label;
    bool forward = true;
};

/// One combination of per-term contexts and per-pair connections.
struct PlanBranch {
    std::vector<ContextPath> contexts;          // per term
    std::vector<std::string> connection_ids;    // per term pair, in (0,1), (0,2), ..., (1,2) order
    std::vector<PlanVar> vars;
    std::vector<TwigPattern> twigs;
    std::vector<CrossTwigEdge> cross;
};

struct Plan {
    std::size_t terms = 0;
    std::vector<PlanBranch> branches;
    std::vector<std::string> warnings;
};

struct FullResult {
    std::size_t terms = 0;
    std::vector<std::vector<NodeRef>> rows;  // sorted, distinct
    std::vector<std::string> warnings;

    std::set<PathId> column_paths(const CorpusStore& store, std::size_t term) const {
        std::set<PathId> out;
        for (auto& r : rows) out.insert(store.node(r.at(term)).path);
        return out;
    }

    std::string to_csv(const CorpusStore& store) const {
        std::vector<std::string> header;
        for (std::size_t i = 1; i <= terms; ++i) {
            header.push_back("c_n" + std::to_string(i));
            header.push_back("c_p" + std::to_string(i));
        }
        std::string out = text::csv_row(header);
        for (auto& r : rows) {
            std::vector<std::string> cells;
            for (auto n : r) {
                cells.push_back(store.node(n).id.to_string());
                cells.push_back(store.context(n).str());
            }
            out += text::csv_row(cells);
        }
        return out;
    }
};

struct MaterializeOptions {
    bool allow_duplicates = true;
};

namespace detail {

/// Contexts per term that hold at least one satisfying node under the refinement.
inline std::vector<std::vector<PathId>> live_contexts(const PathIndex& index, const Query& q) {
    std::vector<std::vector<PathId>> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        std::set<PathId> live;
        auto stream = index.scan_nodes(q.terms[i].search, admitted_paths(index.store(), q, i));
        for (auto& e : stream.entries()) live.insert(index.store().node(e.node).path);
        std::vector<PathId> v(live.begin(), live.end());
        std::sort(v.begin(), v.end(),
                  [&](PathId a, PathId b) { return index.store().path(a) < index.store().path(b); });
        out[i] = std::move(v);
    }
    return out;
}

class BranchBuilder {
public:
    BranchBuilder(const CorpusStore& store, PlanBranch& b) : store_(store), b_(b) {}

    std::size_t add_var(const ContextPath& p, std::optional<std::size_t> term) {
        auto pid = store_.path_id(p);
        if (!pid) throw PlanningError("connection waypoint " + p.str() + " does not occur in the corpus");
        b_.vars.push_back({p, *pid, term});
        return b_.vars.size() - 1;
    }

    /// Adds the constraints of connection `c` (oriented from var a's context to var z's).
    void add_connection(std::size_t a, std::size_t z, const Connection& c) {
        const auto last = c.waypoints.size() - 1;
        if (c.steps.empty()) {
            tree_.push_back({a, z, c.waypoints.front().depth()});
            return;
        }
        std::size_t seg_start_var = a;
        std::size_t seg_start = 0;
        for (std::size_t s = 0; s <= c.steps.size(); ++s) {
            bool at_link = s < c.steps.size() && c.steps[s].kind == Step::Kind::link;
            bool at_end = s == c.steps.size();
            if (!at_link && !at_end) continue;
            // tree segment spans waypoints [seg_start, s]
            std::size_t seg_end_var = at_end ? z : (s == seg_start ? seg_start_var : add_var(c.waypoints[s], {}));
            if (s > seg_start || at_end) add_segment(c, seg_start, s, seg_start_var, seg_end_var);
            if (at_end) break;
            const auto& st = c.steps[s];
            std::size_t next_var = (s + 1 == last) ? z : add_var(c.waypoints[s + 1], {});
            links_.push_back({seg_end_var, next_var, st.link_kind, st.label, st.forward});
            seg_start = s + 1;
            seg_start_var = next_var;
            if (s + 1 == last) {
                // connection ends right after the link
                break;
            }
        }
    }

    void finish() {
        // Twigs: connected components of tree joins.
        std::vector<std::size_t> parent(b_.vars.size());
        std::iota(parent.begin(), parent.end(), 0);
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            return parent[x] == x ? x : parent[x] = find(parent[x]);
        };
        for (auto& t : tree_) {
            auto ra = find(t.a), rb = find(t.b);
            if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
        std::map<std::size_t, std::size_t> twig_of_root;
        std::vector<std::size_t> twig_of(b_.vars.size());
        for (std::size_t v = 0; v < b_.vars.size(); ++v) {
            auto r = find(v);
            auto [it, inserted] = twig_of_root.emplace(r, b_.twigs.size());
            if (inserted) b_.twigs.emplace_back();
            twig_of[v] = it->second;
            b_.twigs[it->second].vars.push_back(v);
        }
        for (auto& t : tree_) b_.twigs[twig_of[t.a]].joins.push_back(t);
        for (auto& l : links_)
            b_.cross.push_back({twig_of[l.a], twig_of[l.b], l.a, l.b, l.kind, l.label, l.forward});
    }

private:
    struct LinkC {
        std::size_t a, b;
        EdgeKind kind;
        std::string label;
        bool forward;
    };

    void add_segment(const Connection& c, std::size_t from, std::size_t to, std::size_t va, std::size_t vb) {
        // Shortest routes inside a tree climb then descend; anything else is not plannable.
        std::size_t top = c.waypoints[from].depth();
        bool descending = false;
        for (std::size_t s = from; s < to; ++s) {
            auto k = c.steps[s].kind;
            if (k == Step::Kind::up) {
                if (descending) throw PlanningError("connection " + c.id + " descends then climbs inside one document");
            } else {
                descending = true;
            }
            top = std::min(top, c.waypoints[s + 1].depth());
        }
        tree_.push_back({va, vb, top});
    }

    const CorpusStore& store_;
    PlanBranch& b_;
    std::vector<TreeJoin> tree_;
    std::vector<LinkC> links_;
};

}  // namespace detail

/// Splits each (context assignment, connection choice) combination into twigs joined by
/// cross-twig link edges. A single-term query yields single-variable twigs.
inline Plan plan_twigs(const PathIndex& index, const Query& q, const ConnectionSummary& summary) {
    const auto& store = index.store();
    const auto m = q.size();
    Plan plan;
    plan.terms = m;
    if (m >= 2 && !q.refinement.connections) throw PlanningError("no connection selection; choose connections first");
    if (m >= 2 && q.refinement.connections->empty()) {
        plan.warnings.push_back("empty connection selection: the result is empty");
        return plan;
    }
    std::vector<const Connection*> chosen;
    if (m >= 2)
        for (auto& id : *q.refinement.connections) {
            auto it = summary.connections.find(id);
            if (it == summary.connections.end()) throw InvalidSelectionError("unknown connection id: " + id);
            chosen.push_back(&it->second);
        }

    auto contexts = detail::live_contexts(index, q);
    // Every pair needs a chosen connection whose endpoints fit its selected contexts.
    auto fits = [&](const Connection& c, PathId a, PathId b) {
        return (c.from() == store.path(a) && c.to() == store.path(b)) || (c.to() == store.path(a) && c.from() == store.path(b));
    };
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) pairs.push_back({i, j});
    for (auto [i, j] : pairs) {
        bool any = false;
        for (auto* c : chosen)
            for (auto a : contexts[i])
                for (auto b : contexts[j]) any = any || fits(*c, a, b);
        if (!any)
            throw PlanningError("terms " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                " have no chosen connection between their selected contexts");
    }

    std::vector<std::size_t> ci(m, 0);
    for (auto& c : contexts)
        if (c.empty()) return plan;
    while (true) {
        // per-pair candidate connections, oriented from term i's context to term j's
        std::vector<std::vector<Connection>> options;
        bool feasible = true;
        for (auto [i, j] : pairs) {
            std::vector<Connection> opts;
            const auto& pa = store.path(contexts[i][ci[i]]);
            const auto& pb = store.path(contexts[j][ci[j]]);
            for (auto* c : chosen) {
                if (c->from() == pa && c->to() == pb) opts.push_back(*c);
                if (c->to() == pa && c->from() == pb && !(pa == pb && c->reversed() == *c)) opts.push_back(c->reversed());
            }
            if (opts.empty()) feasible = false;
            options.push_back(std::move(opts));
        }
        if (feasible) {
            std::vector<std::size_t> oi(pairs.size(), 0);
            while (true) {
                PlanBranch b;
                detail::BranchBuilder builder(store, b);
                for (std::size_t t = 0; t < m; ++t) {
                    b.contexts.push_back(store.path(contexts[t][ci[t]]));
                    builder.add_var(b.contexts.back(), t);
                }
                for (std::size_t p = 0; p < pairs.size(); ++p) {
                    const auto& c = options[p][oi[p]];
                    b.connection_ids.push_back(c.id);
                    builder.add_connection(pairs[p].first, pairs[p].second, c);
                }
                builder.finish();
                plan.branches.push_back(std::move(b));
                std::size_t pos = 0;
                while (pos < oi.size() && ++oi[pos] == options[pos].size()) oi[pos++] = 0;
                if (pos == oi.size()) break;
            }
        }
        std::size_t pos = 0;
        while (pos < m && ++ci[pos] == contexts[pos].size()) ci[pos++] = 0;
        if (pos == m) break;
    }
    return plan;
}

namespace detail {

using Relation = std::vector<std::vector<NodeRef>>;  // rows over a fixed list of vars

inline int compare_prefix(const DeweyId& a, const DeweyId& b, std::size_t depth) {
    if (a.doc != b.doc) return a.doc < b.doc ? -1 : 1;
    for (std::size_t k = 0; k < depth; ++k) {
        auto x = k < a.steps.size() ? a.steps[k] : 0;
        auto y = k < b.steps.size() ? b.steps[k] : 0;
        if (x != y) return x < y ? -1 : 1;
    }
    return 0;
}

class BranchEvaluator {
public:
    BranchEvaluator(const PathIndex& index, const Query& q, const PlanBranch& b) : index_(index), store_(index.store()), q_(q), b_(b) {}

    Relation run(std::vector<std::size_t>& columns) {
        std::vector<Relation> twig_rel;
        std::vector<std::vector<std::size_t>> twig_cols;
        for (auto& t : b_.twigs) {
            std::vector<std::size_t> cols;
            twig_rel.push_back(eval_twig(t, cols));
            twig_cols.push_back(std::move(cols));
            if (twig_rel.back().empty()) return {};
        }
        // Join twigs along cross edges, starting from twig 0.
        std::vector<bool> joined(b_.twigs.size(), false);
        Relation rel = std::move(twig_rel[0]);
        columns = twig_cols[0];
        joined[0] = true;
        std::vector<bool> used(b_.cross.size(), false);
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t e = 0; e < b_.cross.size(); ++e) {
                if (used[e]) continue;
                const auto& ce = b_.cross[e];
                bool l_in = joined[ce.left_twig], r_in = joined[ce.right_twig];
                if (l_in && r_in) {
                    filter_link(rel, columns, ce);
                } else if (l_in || r_in) {
                    auto other = l_in ? ce.right_twig : ce.left_twig;
                    rel = hash_join(rel, columns, twig_rel[other], twig_cols[other], ce, l_in);
                    columns.insert(columns.end(), twig_cols[other].begin(), twig_cols[other].end());
                    joined[other] = true;
                } else {
                    continue;
                }
                used[e] = true;
                progress = true;
            }
        }
        for (std::size_t t = 0; t < joined.size(); ++t)
            if (!joined[t]) throw PlanningError("twig " + std::to_string(t) + " is not connected to the others");
        return rel;
    }

private:
    std::vector<NodeRef> candidates(std::size_t v) const {
        const auto& var = b_.vars[v];
        if (var.term) {
            auto stream = index_.scan_nodes(q_.terms[*var.term].search, std::set<PathId>{var.path_id});
            std::vector<NodeRef> out;
            for (auto& e : stream.entries()) out.push_back(e.node);
            std::sort(out.begin(), out.end());
            return out;
        }
        return store_.nodes_on_path(var.path_id);  // already Dewey-sorted
    }

    const DeweyId& id(NodeRef n) const { return store_.node(n).id; }

    // Structural join over Dewey-ordered streams: each tree join is a merge on shared prefixes.
    Relation eval_twig(const TwigPattern& t, std::vector<std::size_t>& cols) {
        cols = {t.vars.front()};
        Relation rel;
        for (auto n : candidates(t.vars.front())) rel.push_back({n});
        std::vector<bool> done(t.joins.size(), false);
        std::size_t remaining = t.joins.size();
        while (remaining > 0) {
            bool progress = false;
            for (std::size_t k = 0; k < t.joins.size(); ++k) {
                if (done[k]) continue;
                const auto& j = t.joins[k];
                auto ia = std::find(cols.begin(), cols.end(), j.a);
                auto ib = std::find(cols.begin(), cols.end(), j.b);
                if (ia != cols.end() && ib != cols.end()) {
                    auto ca = static_cast<std::size_t>(ia - cols.begin()), cb = static_cast<std::size_t>(ib - cols.begin());
                    std::erase_if(rel, [&](const std::vector<NodeRef>& r) {
                        return compare_prefix(id(r[ca]), id(r[cb]), j.depth) != 0;
                    });
                } else if (ia != cols.end() || ib != cols.end()) {
                    auto bound_col = static_cast<std::size_t>((ia != cols.end() ? ia : ib) - cols.begin());
                    auto fresh = ia != cols.end() ? j.b : j.a;
                    rel = merge_join(rel, bound_col, candidates(fresh), j.depth);
                    cols.push_back(fresh);
                } else {
                    continue;
                }
                done[k] = true;
                --remaining;
                progress = true;
                if (rel.empty()) return rel;
            }
            if (!progress) throw InternalError("twig joins do not form a connected pattern");
        }
        return rel;
    }

    Relation merge_join(Relation rel, std::size_t col, const std::vector<NodeRef>& stream, std::size_t depth) const {
        std::stable_sort(rel.begin(), rel.end(), [&](const auto& x, const auto& y) {
            return compare_prefix(id(x[col]), id(y[col]), depth) < 0;
        });
        Relation out;
        std::size_t i = 0, s = 0;
        while (i < rel.size() && s < stream.size()) {
            int c = compare_prefix(id(rel[i][col]), id(stream[s]), depth);
            if (c < 0) {
                ++i;
            } else if (c > 0) {
                ++s;
            } else {
                auto i_end = i, s_end = s;
                while (i_end < rel.size() && compare_prefix(id(rel[i_end][col]), id(stream[s]), depth) == 0) ++i_end;
                while (s_end < stream.size() && compare_prefix(id(rel[i][col]), id(stream[s_end]), depth) == 0) ++s_end;
                for (auto a = i; a < i_end; ++a)
                    for (auto b = s; b < s_end; ++b) {
                        auto row = rel[a];
                        row.push_back(stream[b]);
                        out.push_back(std::move(row));
                    }
                i = i_end;
                s = s_end;
            }
        }
        return out;
    }

    // Nodes linked to `n` by the cross edge, seen from side `from_left`.
    std::vector<NodeRef> linked(NodeRef n, const CrossTwigEdge& ce, bool from_left) const {
        std::vector<NodeRef> out;
        auto want = b_.vars[from_left ? ce.right : ce.left].path_id;
        store_.for_each_incident(n, [&](NodeRef v, EdgeKind kind, std::uint32_t label, bool outgoing) {
            if (kind != ce.kind || store_.node(v).path != want || store_.label(label) != ce.label) return;
            if (outgoing == (from_left == ce.forward)) out.push_back(v);
        });
        return out;
    }

    void filter_link(Relation& rel, const std::vector<std::size_t>& cols, const CrossTwigEdge& ce) const {
        auto cl = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), ce.left) - cols.begin());
        auto cr = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), ce.right) - cols.begin());
        std::erase_if(rel, [&](const std::vector<NodeRef>& r) {
            auto l = linked(r[cl], ce, true);
            return std::find(l.begin(), l.end(), r[cr]) == l.end();
        });
    }

    /// Hash join; the smaller input is the build side, keyed on its link endpoint.
    Relation hash_join(const Relation& rel, const std::vector<std::size_t>& cols, const Relation& other,
                       const std::vector<std::size_t>& other_cols, const CrossTwigEdge& ce, bool rel_is_left) const {
        auto col_of = [](const std::vector<std::size_t>& cs, std::size_t v) {
            return static_cast<std::size_t>(std::find(cs.begin(), cs.end(), v) - cs.begin());
        };
        auto rel_col = col_of(cols, rel_is_left ? ce.left : ce.right);
        auto oth_col = col_of(other_cols, rel_is_left ? ce.right : ce.left);
        bool build_rel = rel.size() <= other.size();
        const auto& build = build_rel ? rel : other;
        const auto& probe = build_rel ? other : rel;
        auto build_col = build_rel ? rel_col : oth_col;
        auto probe_col = build_rel ? oth_col : rel_col;
        bool probe_is_left = build_rel ? !rel_is_left : rel_is_left;
        std::unordered_map<NodeRef, std::vector<std::size_t>> table;
        for (std::size_t r = 0; r < build.size(); ++r) table[build[r][build_col]].push_back(r);
        Relation out;
        for (auto& pr : probe)
            for (auto v : linked(pr[probe_col], ce, probe_is_left)) {
                auto it = table.find(v);
                if (it == table.end()) continue;
                for (auto r : it->second) {
                    const auto& br = build[r];
                    const auto& rel_row = build_rel ? br : pr;
                    const auto& oth_row = build_rel ? pr : br;
                    auto row = rel_row;
                    row.insert(row.end(), oth_row.begin(), oth_row.end());
                    out.push_back(std::move(row));
                }
            }
        return out;
    }

    const PathIndex& index_;
    const CorpusStore& store_;
    const Query& q_;
    const PlanBranch& b_;
};

}  // namespace detail

/// Complete result of a planned query: union of all branches, projected to term bindings,
/// deduplicated and sorted in Dewey order.
inline FullResult evaluate(const PathIndex& index, const Query& q, const Plan& plan, const MaterializeOptions& opt = {}) {
    FullResult out;
    out.terms = plan.terms;
    out.warnings = plan.warnings;
    std::set<std::vector<NodeRef>> rows;
    for (auto& b : plan.branches) {
        std::vector<std::size_t> cols;
        auto rel = detail::BranchEvaluator(index, q, b).run(cols);
        std::vector<std::size_t> term_col(plan.terms);
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (auto t = b.vars[cols[c]].term) term_col[*t] = c;
        for (auto& r : rel) {
            std::vector<NodeRef> row;
            for (auto c : term_col) row.push_back(r[c]);
            if (!opt.allow_duplicates) {
                std::set<NodeRef> distinct(row.begin(), row.end());
                if (distinct.size() != row.size()) continue;
            }
            rows.insert(std::move(row));
        }
    }
    out.rows.assign(rows.begin(), rows.end());
    return out;
}

inline FullResult materialize(const PathIndex& index, const Query& q, const ConnectionSummary& summary,
                              const MaterializeOptions& opt = {}) {
    return evaluate(index, q, plan_twigs(index, q, summary), opt);
}

inline std::string describe_plan(const CorpusStore& store, const Plan& plan) {
    (void)store;
    std::ostringstream os;
    os << plan.branches.size() << " plan branch" << (plan.branches.size() == 1 ? "" : "es") << "\n";
    for (std::size_t k = 0; k < plan.branches.size(); ++k) {
        const auto& b = plan.branches[k];
        os << "branch " << k << ": " << b.twigs.size() << " twig(s), " << b.cross.size() << " cross-twig edge(s)\n";
        for (std::size_t t = 0; t < b.twigs.size(); ++t) {
            os << "  twig " << t << ":";
            for (auto v : b.twigs[t].vars) {
                os << " " << b.vars[v].path.str();
                if (b.vars[v].term) os << "[t" << *b.vars[v].term + 1 << "]";
            }
            os << "\n";
        }
        for (auto& e : b.cross)
            os << "  cross " << e.left_twig << " -" << to_string(e.kind) << ":" << e.label << "- " << e.right_twig << "\n";
    }
    return os.str();
}

}  // namespace xcube

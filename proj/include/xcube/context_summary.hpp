#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xcube/path_index.hpp"
#include "xcube/query.hpp"

namespace xcube {

struct ContextEntry {
    ContextPath path;
    std::size_t path_frequency = 0;  // documents containing the path (display and sort key)
    std::size_t occurrence = 0;      // nodes on the path satisfying the term

    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

struct ContextBucket {
    std::size_t term = 0;
    std::vector<ContextEntry> entries;

    bool contains(const ContextPath& p) const {
        return std::any_of(entries.begin(), entries.end(), [&](const ContextEntry& e) { return e.path == p; });
    }
};

namespace detail {

inline void probe(const PathIndex& index, const SearchExpr& search, const ContextSpec& ctx,
                  std::map<PathId, PathMatch>& out) {
    using K = ContextSpec::Kind;
    auto add = [&](const std::vector<PathMatch>& ms) {
        for (auto& m : ms) out.emplace(m.path, m);
    };
    switch (ctx.kind) {
        case K::empty: add(index.paths_for(search)); break;
        case K::name_pattern: add(index.paths_for(search, ctx.pattern)); break;
        case K::full_path: {
            // probe with the last tag name, then keep the exact path
            for (auto& m : index.paths_for(search, ctx.path.leaf()))
                if (index.store().path(m.path) == ctx.path) out.emplace(m.path, m);
            break;
        }
        case K::disjunction:
            for (auto& alt : ctx.alternatives) probe(index, search, alt, out);
            break;
    }
}

}  // namespace detail

/// One bucket per term: every distinct path in the collection holding a node that satisfies
/// the term, sorted by collection-wide path frequency (descending), then path.
inline std::vector<ContextBucket> context_buckets(const PathIndex& index, const Query& q) {
    std::vector<ContextBucket> out;
    for (std::size_t i = 0; i < q.size(); ++i) {
        std::map<PathId, PathMatch> found;
        detail::probe(index, q.terms[i].search, q.terms[i].context, found);
        ContextBucket b{i, {}};
        for (auto& [p, m] : found) b.entries.push_back({index.store().path(p), m.doc_frequency, m.occurrence});
        std::sort(b.entries.begin(), b.entries.end(), [](const ContextEntry& a, const ContextEntry& b) {
            if (a.path_frequency != b.path_frequency) return a.path_frequency > b.path_frequency;
            return a.path < b.path;
        });
        out.push_back(std::move(b));
    }
    return out;
}

/// Restricts terms to chosen contexts. Terms absent from `selections` keep their previous
/// selection, or their whole bucket when none was made.
inline Query apply_context_selection(const Query& q, const std::vector<ContextBucket>& buckets,
                                     const std::map<std::size_t, std::set<ContextPath>>& selections) {
    if (buckets.size() != q.size()) throw InvalidArgumentError("bucket count does not match the query");
    Query out = q;
    std::vector<std::set<ContextPath>> chosen;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q.refinement.contexts) {
            chosen.push_back(q.refinement.contexts->at(i));
        } else {
            std::set<ContextPath> all;
            for (auto& e : buckets[i].entries) all.insert(e.path);
            chosen.push_back(std::move(all));
        }
    }
    for (auto& [term, paths] : selections) {
        if (term >= q.size())
            throw InvalidSelectionError("term " + std::to_string(term + 1) + " does not exist; the query has " +
                                        std::to_string(q.size()) + " terms");
        for (auto& p : paths)
            if (!buckets[term].contains(p))
                throw InvalidSelectionError("term " + std::to_string(term + 1) + ": path " + p.str() +
                                            " is not in its context bucket");
        chosen[term] = paths;
    }
    out.refinement.contexts = std::move(chosen);
    out.refinement.connections.reset();  // connections depend on contexts; choose again
    return out;
}

inline std::string render_buckets(const Query& q, const std::vector<ContextBucket>& buckets) {
    std::ostringstream os;
    for (auto& b : buckets) {
        os << "term " << b.term + 1 << " " << q.terms[b.term].to_string() << ": " << b.entries.size() << " context"
           << (b.entries.size() == 1 ? "" : "s") << "\n";
        std::size_t width = 0;
        for (auto& e : b.entries) width = std::max(width, e.path.str().size());
        for (auto& e : b.entries) {
            bool selected = q.context_selected(b.term, e.path);
            os << (selected ? "  [x] " : "  [ ] ") << std::left << std::setw(static_cast<int>(width)) << e.path.str()
               << "  docs=" << e.path_frequency << "  matches=" << e.occurrence << "\n";
        }
    }
    return os.str();
}

inline nlohmann::json buckets_to_json(const std::vector<ContextBucket>& buckets) {
    auto arr = nlohmann::json::array();
    for (auto& b : buckets) {
        auto entries = nlohmann::json::array();
        for (auto& e : b.entries)
            entries.push_back({{"path", e.path.str()}, {"path_frequency", e.path_frequency}, {"occurrence", e.occurrence}});
        arr.push_back({{"term", b.term}, {"entries", entries}});
    }
    return arr;
}

}  // namespace xcube

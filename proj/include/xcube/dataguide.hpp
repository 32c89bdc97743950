#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "xcube/corpus_store.hpp"

namespace xcube {

inline constexpr double kDefaultThreshold = 0.4;

/// Path-set summary of one or more documents. Path sets are prefix-closed, so the prefix tree
/// of a guide has exactly one node per path.
struct Dataguide {
    std::uint32_t id = 0;
    std::set<ContextPath> paths;
    std::vector<std::uint32_t> members;  // document ordinals, ascending

    bool contains(const ContextPath& p) const { return paths.count(p) > 0; }

    std::vector<ContextPath> children(const ContextPath& p) const {
        std::vector<ContextPath> out;
        for (auto it = paths.upper_bound(p); it != paths.end() && it->str().starts_with(p.str()); ++it)
            if (it->depth() == p.depth() + 1 && p.is_prefix_of(*it)) out.push_back(*it);
        return out;
    }

    std::vector<ContextPath> roots() const {
        std::vector<ContextPath> out;
        for (auto& p : paths)
            if (p.depth() == 1) out.push_back(p);
        return out;
    }
};

/// A node of a guide's prefix tree.
struct GuideNode {
    std::uint32_t guide = 0;
    ContextPath path;

    friend bool operator==(const GuideNode&, const GuideNode&) = default;
    friend auto operator<=>(const GuideNode& a, const GuideNode& b) {
        if (a.guide != b.guide) return a.guide <=> b.guide;
        return a.path <=> b.path;
    }
};

struct GuideLink {
    GuideNode from;
    GuideNode to;
    EdgeKind kind = EdgeKind::value_based;
    std::string label;

    friend bool operator==(const GuideLink&, const GuideLink&) = default;
    friend auto operator<=>(const GuideLink& a, const GuideLink& b) {
        return std::tie(a.from, a.to, a.kind, a.label) <=> std::tie(b.from, b.to, b.kind, b.label);
    }
};

/// min(|common| / |a|, |common| / |b|).
inline double overlap(const std::set<ContextPath>& a, const std::set<ContextPath>& b) {
    if (a.empty() || b.empty()) throw InvalidArgumentError("overlap of an empty path set is undefined");
    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) ++ia;
        else if (*ib < *ia) ++ib;
        else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    auto c = static_cast<double>(common);
    return std::min(c / static_cast<double>(a.size()), c / static_cast<double>(b.size()));
}

inline double overlap(const Dataguide& a, const Dataguide& b) { return overlap(a.paths, b.paths); }

struct GuideStats {
    std::size_t guides = 0;
    std::size_t documents = 0;
    std::size_t distinct_paths = 0;
    std::size_t min_paths = 0;
    std::size_t max_paths = 0;
    double avg_paths = 0;
    std::size_t links = 0;
    double threshold = 0;
};

class GuideSet {
public:
    const std::vector<Dataguide>& guides() const noexcept { return guides_; }
    const std::vector<GuideLink>& links() const noexcept { return links_; }
    double threshold() const noexcept { return threshold_; }
    const Dataguide& guide(std::uint32_t id) const { return guides_.at(id); }
    std::uint32_t guide_of_document(std::uint32_t doc) const { return doc_guide_.at(doc); }

    /// All guides containing the path.
    std::vector<GuideNode> locate(const ContextPath& p) const {
        std::vector<GuideNode> out;
        for (auto& g : guides_)
            if (g.contains(p)) out.push_back({g.id, p});
        if (out.empty()) throw InternalError("path " + p.str() + " is not covered by any dataguide");
        return out;
    }

    GuideStats stats() const {
        GuideStats s;
        s.guides = guides_.size();
        s.documents = doc_guide_.size();
        s.links = links_.size();
        s.threshold = threshold_;
        std::set<ContextPath> all;
        std::size_t total = 0;
        for (auto& g : guides_) {
            all.insert(g.paths.begin(), g.paths.end());
            total += g.paths.size();
            s.min_paths = s.min_paths == 0 ? g.paths.size() : std::min(s.min_paths, g.paths.size());
            s.max_paths = std::max(s.max_paths, g.paths.size());
        }
        s.distinct_paths = all.size();
        s.avg_paths = guides_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(guides_.size());
        return s;
    }

    /// Table-style report: totals, then one line per guide.
    std::string report() const {
        auto s = stats();
        std::ostringstream os;
        os << "threshold\t" << threshold_ << "\n"
           << "documents\t" << s.documents << "\n"
           << "dataguides\t" << s.guides << "\n"
           << "distinct_paths\t" << s.distinct_paths << "\n"
           << "paths_per_guide\tmin=" << s.min_paths << " avg=" << std::fixed << std::setprecision(1) << s.avg_paths
           << " max=" << s.max_paths << "\n"
           << "guide_links\t" << s.links << "\n";
        os << "guide\tdocuments\tpaths\troots\n";
        for (auto& g : guides_) {
            os << g.id << "\t" << g.members.size() << "\t" << g.paths.size() << "\t";
            auto r = g.roots();
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i].str();
            os << "\n";
        }
        return os.str();
    }

    void save(const std::filesystem::path& dir) const {
        nlohmann::json j;
        j["format"] = "xcube-guides/1";
        j["threshold"] = threshold_;
        auto& gs = j["guides"] = nlohmann::json::array();
        for (auto& g : guides_) {
            std::vector<std::string> ps;
            for (auto& p : g.paths) ps.push_back(p.str());
            gs.push_back({{"id", g.id}, {"members", g.members}, {"paths", ps}});
        }
        auto& ls = j["links"] = nlohmann::json::array();
        for (auto& l : links_)
            ls.push_back({{"from", {l.from.guide, l.from.path.str()}},
                          {"to", {l.to.guide, l.to.path.str()}},
                          {"kind", to_string(l.kind)},
                          {"label", l.label}});
        std::ofstream(dir / "guides.json") << j.dump(1) << "\n";
    }

    static GuideSet load(const std::filesystem::path& dir) {
        std::ifstream in(dir / "guides.json");
        if (!in) throw IoError("no dataguides in " + dir.string() + " (run guides build first)");
        auto j = nlohmann::json::parse(in);
        GuideSet s;
        s.threshold_ = j.at("threshold").get<double>();
        for (auto& jg : j.at("guides")) {
            Dataguide g;
            g.id = jg.at("id").get<std::uint32_t>();
            g.members = jg.at("members").get<std::vector<std::uint32_t>>();
            for (auto& p : jg.at("paths")) g.paths.insert(ContextPath::parse(p.get<std::string>()));
            s.guides_.push_back(std::move(g));
        }
        for (auto& jl : j.at("links")) {
            GuideLink l;
            l.from = {jl.at("from").at(0).get<std::uint32_t>(), ContextPath::parse(jl.at("from").at(1).get<std::string>())};
            l.to = {jl.at("to").at(0).get<std::uint32_t>(), ContextPath::parse(jl.at("to").at(1).get<std::string>())};
            l.kind = edge_kind_from_string(jl.at("kind").get<std::string>());
            l.label = jl.at("label").get<std::string>();
            s.links_.push_back(std::move(l));
        }
        s.index_members();
        return s;
    }

    friend GuideSet build_guides(const CorpusStore& store, double threshold);

private:
    void index_members() {
        std::size_t docs = 0;
        for (auto& g : guides_) docs += g.members.size();
        doc_guide_.assign(docs, 0);
        for (auto& g : guides_)
            for (auto d : g.members) doc_guide_.at(d) = g.id;
    }

    std::vector<Dataguide> guides_;
    std::vector<GuideLink> links_;
    std::vector<std::uint32_t> doc_guide_;
    double threshold_ = kDefaultThreshold;
};

/// Distinct contexts of a document's nodes (prefix-closed).
inline std::set<ContextPath> document_paths(const CorpusStore& store, std::uint32_t doc) {
    std::set<PathId> ids;
    for (NodeRef n = store.doc_begin(doc); n < store.doc_end(doc); ++n) ids.insert(store.node(n).path);
    std::set<ContextPath> out;
    for (auto p : ids) out.insert(store.path(p));
    return out;
}

/// One pass over documents in ordinal order. A document whose paths are contained in an
/// existing guide joins the first such guide; otherwise it is merged into the guide of highest
/// overlap (first on ties) when that overlap is >= threshold; otherwise it starts a new guide.
/// A threshold above 1 disables merging. Link edges are then lifted to guide links.
inline GuideSet build_guides(const CorpusStore& store, double threshold = kDefaultThreshold) {
    if (threshold < 0) throw InvalidArgumentError("threshold must be non-negative");
    GuideSet gs;
    gs.threshold_ = threshold;
    for (std::uint32_t d = 0; d < store.documents().size(); ++d) {
        auto dg = document_paths(store, d);
        Dataguide* home = nullptr;
        for (auto& g : gs.guides_)
            if (std::includes(g.paths.begin(), g.paths.end(), dg.begin(), dg.end())) {
                home = &g;
                break;
            }
        if (!home && threshold <= 1.0) {
            double best = -1;
            for (auto& g : gs.guides_) {
                double o = overlap(g.paths, dg);
                if (o >= threshold && o > best) {
                    best = o;
                    home = &g;
                }
            }
            if (home) home->paths.insert(dg.begin(), dg.end());
        }
        if (!home) {
            gs.guides_.push_back({static_cast<std::uint32_t>(gs.guides_.size()), std::move(dg), {}});
            home = &gs.guides_.back();
        }
        home->members.push_back(d);
    }
    gs.index_members();

    std::set<GuideLink> lifted;
    for (auto& l : store.links()) {
        GuideNode from{gs.doc_guide_[store.doc_of(l.from)], store.context(l.from)};
        GuideNode to{gs.doc_guide_[store.doc_of(l.to)], store.context(l.to)};
        lifted.insert({from, to, l.kind, store.label(l.label)});
    }
    gs.links_.assign(lifted.begin(), lifted.end());
    return gs;
}

}  // namespace xcube

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "xcube/context_summary.hpp"
#include "xcube/cube_builder.hpp"

namespace xcube {

/// Tunables shared by the CLI and the service. Loaded from JSON; unknown keys are rejected.
struct Config {
    std::size_t k = kDefaultK;
    std::uint32_t radius_cap = kDefaultRadiusCap;
    double threshold = kDefaultThreshold;
    std::size_t max_terms = kDefaultMaxTerms;
    bool allow_duplicates = true;

    static Config from_json(const nlohmann::json& j) {
        Config c;
        for (auto& [key, v] : j.items()) {
            if (key == "k") c.k = v.get<std::size_t>();
            else if (key == "radius_cap") c.radius_cap = v.get<std::uint32_t>();
            else if (key == "threshold") c.threshold = v.get<double>();
            else if (key == "max_terms") c.max_terms = v.get<std::size_t>();
            else if (key == "allow_duplicates") c.allow_duplicates = v.get<bool>();
            else throw InvalidArgumentError("unknown config key: " + key);
        }
        c.validate();
        return c;
    }

    static Config load(const std::filesystem::path& file) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open config " + file.string());
        return from_json(nlohmann::json::parse(in));
    }

    void validate() const {
        if (k < 1) throw InvalidArgumentError("k must be at least 1");
        if (radius_cap < 1) throw InvalidArgumentError("radius_cap must be at least 1");
        if (threshold < 0) throw InvalidArgumentError("threshold must be non-negative");
        if (max_terms < 1) throw InvalidArgumentError("max_terms must be at least 1");
    }

    nlohmann::json to_json() const {
        return {{"k", k}, {"radius_cap", radius_cap}, {"threshold", threshold}, {"max_terms", max_terms},
                {"allow_duplicates", allow_duplicates}};
    }
};

/// A store directory opened for querying: corpus, index, guides at the configured threshold,
/// and the catalog. Artifacts missing on disk are built in memory.
class Workspace {
public:
    static std::unique_ptr<Workspace> open(const std::filesystem::path& dir, const Config& cfg = {}) {
        auto ws = std::unique_ptr<Workspace>(new Workspace(dir, cfg));
        ws->store_ = std::make_unique<CorpusStore>(CorpusStore::load(dir));
        ws->index_ = std::filesystem::exists(dir / "index.json")
                         ? std::make_unique<PathIndex>(PathIndex::load(dir, *ws->store_))
                         : std::make_unique<PathIndex>(PathIndex::build(*ws->store_));
        ws->load_guides();
        ws->catalog_ = Catalog::load(dir);
        return ws;
    }

    /// Ingests a directory of XML files into `dir`, writing the store, index and guides.
    static CorpusStats ingest(const std::filesystem::path& xml_dir, const std::vector<LinkSpec>& links,
                              const std::filesystem::path& dir, const Config& cfg = {}) {
        auto r = CorpusStore::ingest_directory(xml_dir, links);
        std::filesystem::create_directories(dir);
        r.store.save(dir);
        PathIndex::build(r.store).save(dir);
        build_guides(r.store, cfg.threshold).save(dir);
        return r.stats;
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }
    const Config& config() const noexcept { return cfg_; }
    const CorpusStore& store() const { return *store_; }
    const PathIndex& index() const { return *index_; }
    const GuideSet& guides() const { return guides_; }
    ConnectionCache& cache() { return cache_; }
    /// Snapshot of the catalog; writers go through set_catalog or update_catalog.
    Catalog catalog() const {
        std::lock_guard lock(catalog_mu_);
        return catalog_;
    }

    void rebuild_index() {
        index_ = std::make_unique<PathIndex>(PathIndex::build(*store_));
        index_->save(dir_);
    }

    void rebuild_guides(double threshold) {
        cfg_.threshold = threshold;
        guides_ = build_guides(*store_, threshold);
        guides_.save(dir_);
        cache_.clear();
    }

    /// Replaces the catalog and persists it.
    void set_catalog(Catalog c) {
        std::lock_guard lock(catalog_mu_);
        c.save(dir_);
        catalog_ = std::move(c);
    }

    /// Applies `f` to a copy of the catalog and persists it, serialized with other writers.
    template <class F>
    auto update_catalog(F&& f) {
        std::lock_guard lock(catalog_mu_);
        Catalog c = catalog_;
        auto r = f(c);
        c.save(dir_);
        catalog_ = std::move(c);
        return r;
    }

private:
    Workspace(std::filesystem::path dir, Config cfg) : dir_(std::move(dir)), cfg_(cfg) {}

    void load_guides() {
        if (std::filesystem::exists(dir_ / "guides.json")) {
            auto g = GuideSet::load(dir_);
            if (g.threshold() == cfg_.threshold) {
                guides_ = std::move(g);
                return;
            }
        }
        guides_ = build_guides(*store_, cfg_.threshold);
    }

    std::filesystem::path dir_;
    Config cfg_;
    std::unique_ptr<CorpusStore> store_;
    std::unique_ptr<PathIndex> index_;
    GuideSet guides_;
    Catalog catalog_;
    mutable std::mutex catalog_mu_;
    ConnectionCache cache_;
};

/// One query's refinement loop: contexts, connections, full result, catalog match, cube.
/// Steps must run in order; calling one early raises StateError.
class Session {
public:
    enum class Stage { created, contexts, connections, materialized, cube };

    Session(Workspace& ws, Query q, std::optional<Config> cfg = {})
        : ws_(&ws), cfg_(cfg.value_or(ws.config())), query_(std::move(q)) {
        cfg_.validate();
        for (std::size_t i = 0; i < query_.size(); ++i) validate_term(query_.terms[i], i);
        if (query_.size() > cfg_.max_terms)
            throw InvalidQueryError("query has " + std::to_string(query_.size()) + " terms; the limit is " +
                                        std::to_string(cfg_.max_terms),
                                    0);
    }

    Session(Workspace& ws, const std::string& text, std::optional<Config> cfg = {})
        : Session(ws, parse_query(text, cfg.value_or(ws.config()).max_terms), cfg) {}

    const Config& config() const noexcept { return cfg_; }

    /// Changes k or the radius for later steps; cached top-k and connections are dropped.
    void set_config(const Config& cfg) {
        cfg.validate();
        cfg_ = cfg;
        topk_.reset();
        summary_.reset();
        result_.reset();
        augmented_.reset();
        star_.reset();
        if (stage_ > Stage::contexts) stage_ = query_.refinement.contexts ? Stage::contexts : Stage::created;
        query_.refinement.connections.reset();
    }

    const Query& query() const noexcept { return query_; }
    Stage stage() const noexcept { return stage_; }
    const Workspace& workspace() const { return *ws_; }

    /// Context buckets for the current refinement (the buckets themselves are unrefined).
    const std::vector<ContextBucket>& contexts() {
        if (!buckets_) buckets_ = context_buckets(ws_->index(), query_);
        return *buckets_;
    }

    /// `selections` maps 0-based term indices to chosen paths.
    void select_contexts(const std::map<std::size_t, std::set<ContextPath>>& selections) {
        query_ = apply_context_selection(query_, contexts(), selections);
        summary_.reset();
        topk_.reset();
        result_.reset();
        augmented_.reset();
        star_.reset();
        stage_ = Stage::contexts;
    }

    const TopKResult& top() {
        if (!topk_) topk_ = top_k(ws_->index(), query_, options());
        return *topk_;
    }

    const ConnectionSummary& connections() {
        if (!summary_)
            summary_ = summarize_connections(ws_->store(), ws_->guides(), query_, top(),
                                             {cfg_.radius_cap, true}, &ws_->cache());
        if (stage_ < Stage::connections) stage_ = Stage::connections;
        return *summary_;
    }

    void select_connections(const std::set<std::string>& ids) {
        if (!summary_) throw StateError("list connections before choosing them");
        query_ = apply_connection_selection(query_, *summary_, ids);
        result_.reset();
        augmented_.reset();
        star_.reset();
        stage_ = Stage::connections;
    }

    const FullResult& materialize() {
        if (!result_) {
            if (query_.size() >= 2 && !query_.refinement.connections)
                throw StateError("choose connections before materializing");
            ConnectionSummary empty;
            result_ = xcube::materialize(ws_->index(), query_, summary_ ? *summary_ : empty,
                                         {cfg_.allow_duplicates});
        }
        stage_ = std::max(stage_, Stage::materialized);
        return *result_;
    }

    const FullResult& result() const {
        if (!result_) throw StateError("materialize first");
        return *result_;
    }

    MatchReport match() const { return xcube::match(ws_->store(), cube_table(result()), ws_->catalog()); }

    const Augmented& build_cube(const CubeSelection& sel, const AugmentOptions& opt = {}) {
        auto cat = ws_->catalog();
        auto a = augment(ws_->store(), cube_table(result()), cat, sel, opt);
        star_ = emit_star(ws_->store(), a, cat, query_.to_string());
        augmented_ = std::move(a);
        stage_ = Stage::cube;
        return *augmented_;
    }

    const Augmented& augmented() const {
        if (!augmented_) throw StateError("build the cube first");
        return *augmented_;
    }

    bool has_summary() const noexcept { return summary_.has_value(); }

    const StarSchema& star() const {
        if (!star_) throw StateError("build the cube first");
        return *star_;
    }

    /// Defines a catalog entry over the nodes of a result column (1-based term number).
    EntryDef define(EntryKind kind, const std::string& name, std::size_t term, const std::set<ContextPath>& contexts,
                    const std::vector<std::string>& key) {
        const auto& r = result();
        if (term < 1 || term > r.terms) throw InvalidArgumentError("no result column " + std::to_string(term));
        std::vector<NodeRef> column;
        for (auto& row : r.rows) column.push_back(row[term - 1]);
        return ws_->update_catalog(
            [&](Catalog& cat) { return define_entry(ws_->store(), cat, kind, name, contexts, key, column); });
    }

private:
    TopKOptions options() const {
        return {cfg_.k, cfg_.radius_cap, cfg_.allow_duplicates};
    }

    Workspace* ws_;
    Config cfg_;
    Query query_;
    Stage stage_ = Stage::created;
    std::optional<std::vector<ContextBucket>> buckets_;
    std::optional<TopKResult> topk_;
    std::optional<ConnectionSummary> summary_;
    std::optional<FullResult> result_;
    std::optional<Augmented> augmented_;
    std::optional<StarSchema> star_;
};

// ---------------------------------------------------------------------------------------------
// JSON views shared by the CLI (--json) and the service

inline nlohmann::json topk_to_json(const CorpusStore& store, const TopKResult& r) {
    auto tuples = nlohmann::json::array();
    for (std::size_t i = 0; i < r.tuples.size(); ++i) {
        const auto& t = r.tuples[i];
        auto nodes = nlohmann::json::array();
        for (std::size_t j = 0; j < t.nodes.size(); ++j) {
            auto n = t.nodes[j];
            nodes.push_back({{"id", store.node(n).id.to_string()},
                             {"context", store.context(n).str()},
                             {"value", store.value(n)},
                             {"content_score", t.content_scores[j]}});
        }
        tuples.push_back({{"rank", i + 1}, {"score", t.score}, {"distance", t.distance}, {"nodes", nodes}});
    }
    return {{"k", r.k},
            {"tuples", tuples},
            {"sorted_accesses", r.sorted_accesses},
            {"candidates", r.candidates},
            {"stopped_early", r.stopped_early}};
}

inline nlohmann::json match_to_json(const MatchReport& m) {
    auto cols = nlohmann::json::array();
    for (auto& c : m.columns) {
        auto matches = nlohmann::json::array();
        for (auto& e : c.matches) {
            std::vector<std::string> missing;
            for (auto& p : e.missing) missing.push_back(p.str());
            matches.push_back({{"kind", to_string(e.kind)}, {"entry", e.entry}, {"full", e.full}, {"missing", missing}});
        }
        std::vector<std::string> paths;
        for (auto& p : c.paths) paths.push_back(p.str());
        cols.push_back({{"column", c.name}, {"status", c.status()}, {"paths", paths}, {"matches", matches}});
    }
    return {{"columns", cols},
            {"facts", m.entries(EntryKind::fact)},
            {"dimensions", m.entries(EntryKind::dimension)},
            {"warnings", m.warnings()}};
}

inline std::string render_match(const MatchReport& m) {
    std::ostringstream os;
    for (auto& c : m.columns) {
        os << c.name << "  " << c.status();
        for (auto& e : c.matches) os << "  " << (e.full ? "" : "~") << to_string(e.kind) << ":" << e.entry;
        os << "\n";
        for (auto& p : c.paths) os << "    " << p.str() << "\n";
    }
    for (auto& w : m.warnings()) os << "warning: " << w << "\n";
    return os.str();
}

inline std::string render_topk(const CorpusStore& store, const TopKResult& r) {
    std::ostringstream os;
    os << "rank\tscore\tdistance\tnodes\n";
    for (std::size_t i = 0; i < r.tuples.size(); ++i) {
        const auto& t = r.tuples[i];
        os << i + 1 << "\t" << std::fixed << std::setprecision(4) << t.score << "\t" << t.distance << "\t";
        for (std::size_t j = 0; j < t.nodes.size(); ++j) {
            auto n = t.nodes[j];
            auto v = store.value(n);
            if (v.size() > 40) v = v.substr(0, 37) + "...";
            os << (j ? "  |  " : "") << store.node(n).id.to_string() << " " << store.context(n).str() << " \"" << v << "\"";
        }
        os << "\n";
    }
    if (r.tuples.empty()) os << "(no connected results)\n";
    return os.str();
}

}  // namespace xcube

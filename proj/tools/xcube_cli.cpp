// Command-line front end. Every subcommand is stateless: refinement choices are passed as
// flags and the pipeline is replayed from the store on each invocation.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xcube/xcube.hpp"

using namespace xcube;

namespace {

struct Globals {
    std::string store = ".xcube";
    std::optional<std::size_t> k;
    std::optional<std::uint32_t> radius_cap;
    std::optional<double> threshold;
    std::string config;
    bool json = false;
    bool no_duplicates = false;

    Config resolve() const {
        Config c = config.empty() ? Config{} : Config::load(config);
        if (k) c.k = *k;
        if (radius_cap) c.radius_cap = *radius_cap;
        if (threshold) c.threshold = *threshold;
        if (no_duplicates) c.allow_duplicates = false;
        c.validate();
        return c;
    }
};

/// Refinement flags shared by the query-driven subcommands.
struct Refine {
    std::string query;
    std::vector<std::string> contexts;     // "i=/path", 1-based term numbers
    std::vector<std::string> connections;  // connection ids

    void add_to(CLI::App* cmd, bool with_connections) {
        cmd->add_option("query", query, "keyword query, e.g. '(*, \"United States\") AND (percentage, *)'")->required();
        cmd->add_option("--context", contexts, "restrict term i to a context: i=/path (repeatable)");
        if (with_connections) cmd->add_option("--connection", connections, "choose a connection id (repeatable)");
    }

    std::map<std::size_t, std::set<ContextPath>> selections(std::size_t terms) const {
        std::map<std::size_t, std::set<ContextPath>> out;
        for (auto& c : contexts) {
            auto eq = c.find('=');
            if (eq == std::string::npos) throw InvalidArgumentError("--context expects i=/path, got " + c);
            std::size_t term = 0;
            try {
                term = std::stoul(c.substr(0, eq));
            } catch (const std::exception&) {
                throw InvalidArgumentError("--context expects a term number before '=': " + c);
            }
            if (term < 1 || term > terms)
                throw InvalidSelectionError("term " + std::to_string(term) + " does not exist; the query has " +
                                            std::to_string(terms) + " terms");
            out[term - 1].insert(ContextPath::parse(c.substr(eq + 1)));
        }
        return out;
    }

    /// Replays contexts and, when requested, connection choices onto a fresh session.
    std::unique_ptr<Session> replay(Workspace& ws, const Config& cfg, bool choose_connections) const {
        auto s = std::make_unique<Session>(ws, query, cfg);
        if (!contexts.empty()) s->select_contexts(selections(s->query().size()));
        // without --connection, multi-term steps stop with a state error
        if (choose_connections && s->query().size() >= 2 && !connections.empty()) {
            s->connections();
            s->select_connections({connections.begin(), connections.end()});
        }
        return s;
    }
};

void print_buckets(const Session& s, const std::vector<ContextBucket>& buckets) {
    const auto& q = s.query();
    for (auto& b : buckets) {
        std::cout << "term " << b.term + 1 << "  " << q.terms[b.term].to_string() << "\n";
        for (auto& e : b.entries) {
            bool on = q.context_selected(b.term, e.path);
            std::cout << "  [" << (on ? "x" : " ") << "] " << e.path.str() << "  (" << e.path_frequency << " docs, "
                      << e.occurrence << " nodes)\n";
        }
        if (b.entries.empty()) std::cout << "  (no satisfying context)\n";
    }
}

int run(int argc, char** argv) {
    CLI::App app{"xcube: keyword search over XML collections, refined into a star schema"};
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    app.add_option("--store", g.store, "store directory")->envname("XCUBE_STORE");
    app.add_option("--k", g.k, "number of top-k results");
    app.add_option("--radius-cap", g.radius_cap, "maximum hops between connected nodes");
    app.add_option("--threshold", g.threshold, "dataguide merge threshold");
    app.add_option("--config", g.config, "JSON file with default settings");
    app.add_flag("--json", g.json, "print JSON instead of text");
    app.add_flag("--no-duplicates", g.no_duplicates, "forbid two terms from binding the same node");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse a directory of XML files into the store");
    std::string xml_dir, links_file;
    ingest->add_option("dir", xml_dir, "directory of .xml files")->required();
    ingest->add_option("--links", links_file, "JSON file of link specifications");

    // index
    auto* index = app.add_subcommand("index", "rebuild the inverted index, or look up a term");
    std::string index_term;
    index->add_option("--term", index_term, "print the path posting of a term");

    // guides
    auto* guides = app.add_subcommand("guides", "build dataguides or report on them");
    std::string guides_action = "build";
    guides->add_option("action", guides_action, "build | stats")->check(CLI::IsMember({"build", "stats"}));

    // query-driven subcommands
    Refine refine;
    auto* query = app.add_subcommand("query", "print the top-k connected results");
    refine.add_to(query, false);
    auto* contexts = app.add_subcommand("contexts", "print the context summary of each term");
    refine.add_to(contexts, false);
    auto* connections = app.add_subcommand("connections", "print the connection summary");
    refine.add_to(connections, false);
    auto* materialize = app.add_subcommand("materialize", "compute the full result");
    refine.add_to(materialize, true);
    std::string out_path;
    materialize->add_option("--out", out_path, "write the full result as CSV");
    auto* match = app.add_subcommand("match", "match full-result columns against the catalog");
    refine.add_to(match, true);

    auto* cube = app.add_subcommand("cube", "augment the full result and emit fact and dimension tables");
    refine.add_to(cube, true);
    std::vector<std::string> add_fact, remove_fact, add_dim, remove_dim;
    bool skip_rows = false;
    std::string cube_out = "cube";
    cube->add_option("--add-fact", add_fact, "include a fact (repeatable)");
    cube->add_option("--remove-fact", remove_fact, "exclude a matched fact (repeatable)");
    cube->add_option("--add-dim", add_dim, "include a dimension (repeatable)");
    cube->add_option("--remove-dim", remove_dim, "exclude a matched dimension (repeatable)");
    cube->add_flag("--skip-rows", skip_rows, "drop rows whose keys do not resolve");
    cube->add_option("--out", cube_out, "output directory");

    // catalog
    auto* catalog = app.add_subcommand("catalog", "show or edit the fact and dimension catalog");
    catalog->require_subcommand(1);
    auto* cat_show = catalog->add_subcommand("show", "print the catalog");
    auto* cat_import = catalog->add_subcommand("import", "merge an administrator seed file");
    std::string seed;
    cat_import->add_option("file", seed)->required();
    auto* cat_remove = catalog->add_subcommand("remove", "delete an entry");
    std::string kind = "fact", name;
    cat_remove->add_option("--kind", kind)->check(CLI::IsMember({"fact", "dimension"}));
    cat_remove->add_option("--name", name)->required();
    auto* cat_define = catalog->add_subcommand("define", "define an entry from a full-result column");
    Refine def_refine;
    def_refine.add_to(cat_define, true);
    std::size_t def_term = 0;
    std::vector<std::string> def_paths, def_key;
    cat_define->add_option("--kind", kind)->check(CLI::IsMember({"fact", "dimension"}));
    cat_define->add_option("--name", name)->required();
    cat_define->add_option("--term", def_term, "result column (1-based term number)")->required();
    cat_define->add_option("--path", def_paths, "context covered by the entry (repeatable)")->required();
    cat_define->add_option("--key", def_key, "key path: '.', '/abs/path', './sibling' (repeatable)")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    const auto cfg = g.resolve();
    const std::filesystem::path store_dir = g.store;

    if (*ingest) {
        std::vector<LinkSpec> links;
        if (!links_file.empty()) links = read_link_specs(links_file);
        auto stats = Workspace::ingest(xml_dir, links, store_dir, cfg);
        std::cout << stats.to_text();
        return 0;
    }

    auto ws = Workspace::open(store_dir, cfg);

    if (*index) {
        if (index_term.empty()) {
            ws->rebuild_index();
            auto s = ws->index().stats();
            std::cout << "terms\t" << s.terms << "\ncontent_terms\t" << s.content_terms << "\nname_terms\t" << s.name_terms
                      << "\nnode_postings\t" << s.node_postings << "\npath_postings\t" << s.path_postings
                      << "\nlongest_posting\t" << s.longest_posting << "\n";
        } else {
            auto p = ws->index().posting(index_term);
            std::cout << "term\t" << p.term << "\n";
            for (auto& m : p.paths)
                std::cout << ws->store().path(m.path).str() << "\t" << m.doc_frequency << " docs\t" << m.occurrence
                          << " nodes\n";
        }
        return 0;
    }

    if (*guides) {
        if (guides_action == "build") ws->rebuild_guides(cfg.threshold);
        std::cout << ws->guides().report();
        return 0;
    }

    if (*query) {
        auto s = refine.replay(*ws, cfg, false);
        const auto& r = s->top();
        if (g.json) std::cout << topk_to_json(ws->store(), r).dump(2) << "\n";
        else std::cout << render_topk(ws->store(), r);
        return 0;
    }

    if (*contexts) {
        auto s = refine.replay(*ws, cfg, false);
        if (g.json) std::cout << buckets_to_json(s->contexts()).dump(2) << "\n";
        else print_buckets(*s, s->contexts());
        return 0;
    }

    if (*connections) {
        auto s = refine.replay(*ws, cfg, false);
        const auto& sum = s->connections();
        if (g.json) std::cout << summary_to_json(sum).dump(2) << "\n";
        else std::cout << render_summary(s->query(), sum);
        return 0;
    }

    if (*materialize) {
        auto s = refine.replay(*ws, cfg, true);
        const auto& r = s->materialize();
        for (auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        auto csv = r.to_csv(ws->store());
        if (out_path.empty()) {
            std::cout << csv;
        } else {
            std::ofstream(out_path, std::ios::binary) << csv;
            std::cout << r.rows.size() << " rows written to " << out_path << "\n";
        }
        return 0;
    }

    if (*match) {
        auto s = refine.replay(*ws, cfg, true);
        s->materialize();
        auto m = s->match();
        if (g.json) std::cout << match_to_json(m).dump(2) << "\n";
        else std::cout << render_match(m);
        return 0;
    }

    if (*cube) {
        auto s = refine.replay(*ws, cfg, true);
        s->materialize();
        auto m = s->match();
        for (auto& w : m.warnings()) std::cerr << "warning: " << w << "\n";
        CubeSelection sel{m.entries(EntryKind::fact), m.entries(EntryKind::dimension)};
        sel.facts.insert(add_fact.begin(), add_fact.end());
        sel.dimensions.insert(add_dim.begin(), add_dim.end());
        for (auto& f : remove_fact) sel.facts.erase(f);
        for (auto& d : remove_dim) sel.dimensions.erase(d);
        const auto& a = s->build_cube(sel, {skip_rows});
        for (auto& e : a.row_errors) std::cerr << "skipped: " << e << "\n";
        auto files = s->star().write(cube_out);
        if (g.json) {
            std::cout << s->star().manifest.dump(2) << "\n";
        } else {
            for (auto& d : a.auto_dims) std::cout << "added dimension " << d << " (matched a key column)\n";
            for (auto* v : {&s->star().facts, &s->star().dimensions})
                for (auto& t : *v) {
                    std::cout << t.name << "  (";
                    auto h = t.header();
                    for (std::size_t i = 0; i < h.size(); ++i) std::cout << (i ? ", " : "") << h[i];
                    std::cout << ")  " << t.rows.size() << " rows\n";
                }
            std::cout << "wrote " << files.size() << " files to " << cube_out << "\n";
        }
        return 0;
    }

    if (*catalog) {
        if (*cat_show) {
            std::cout << ws->catalog().to_json().dump(2) << "\n";
        } else if (*cat_import) {
            ws->update_catalog([&](Catalog& c) {
                c.import_file(seed);
                return 0;
            });
            auto c = ws->catalog();
            std::cout << c.facts().size() << " facts, " << c.dimensions().size() << " dimensions\n";
        } else if (*cat_remove) {
            bool removed = ws->update_catalog([&](Catalog& c) { return c.remove(entry_kind_from_string(kind), name); });
            if (!removed) throw NotFoundError("no " + kind + " named " + name);
            std::cout << "removed " << kind << " " << name << "\n";
        } else if (*cat_define) {
            auto s = def_refine.replay(*ws, cfg, true);
            s->materialize();
            std::set<ContextPath> paths;
            for (auto& p : def_paths) paths.insert(ContextPath::parse(p));
            auto e = s->define(entry_kind_from_string(kind), name, def_term, paths, def_key);
            std::cout << "defined " << kind << " " << e.name << " with key (";
            auto names = e.key_names();
            for (std::size_t i = 0; i < names.size(); ++i) std::cout << (i ? ", " : "") << names[i];
            std::cout << ")\n";
        }
        return 0;
    }

    if (*serve) {
        Service service(*ws);
        std::cerr << "listening on http://" << host << ":" << port << "\n";
        if (!service.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
        return 0;
    }
    std::cerr << app.help();
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const KeyViolationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// Library walkthrough: ingest the factbook sample, refine Query 1, and write a star schema.
//
//   xcube_demo <fixtures-dir> <work-dir>

#include <iostream>

#include "xcube/xcube.hpp"

using namespace xcube;

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: " << argv[0] << " <fixtures-dir> <work-dir>\n";
        return 2;
    }
    const std::filesystem::path fx = argv[1], work = argv[2];
    try {
        Workspace::ingest(fx / "factbook", read_link_specs(fx / "factbook_links.json"), work / "store");
        Catalog seed;
        seed.import_file(fx / "factbook_catalog.json");
        seed.save(work / "store");
        auto ws = Workspace::open(work / "store");

        Session s(*ws, R"((*, "United States") AND (trade country, *) AND (percentage, *))");
        std::cout << render_topk(ws->store(), s.top()) << "\n";

        s.select_contexts({{0, {ContextPath::parse("/country")}},
                           {1, {ContextPath::parse("/country/economy/import_partners/item/trade_country")}},
                           {2, {ContextPath::parse("/country/economy/import_partners/item/percentage")}}});

        // keep the shortest in-document route for each pair of terms
        std::set<std::string> chosen;
        const auto& summary = s.connections();
        for (auto& g : summary.groups)
            for (auto& id : g.ids)
                if (!summary.connections.at(id).has_link()) {
                    chosen.insert(id);
                    break;
                }
        s.select_connections(chosen);

        std::cout << s.materialize().to_csv(ws->store()) << "\n";
        auto report = s.match();
        std::cout << render_match(report) << "\n";

        s.build_cube({report.entries(EntryKind::fact), report.entries(EntryKind::dimension)});
        for (auto& p : s.star().write(work / "cube")) std::cout << "wrote " << p.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "support.hpp"
#include "xcube/path_index.hpp"

using namespace xcube;
using xcube::testing::factbook;
using xcube::testing::from_strings;

namespace {

std::set<std::string> path_strings(const CorpusStore& s, const std::vector<PathMatch>& ms) {
    std::set<std::string> out;
    for (auto& m : ms) out.insert(s.path(m.path).str());
    return out;
}

const std::string kImportTc = "/country/economy/import_partners/item/trade_country";
const std::string kExportTc = "/country/economy/export_partners/item/trade_country";
const std::string kImportPct = "/country/economy/import_partners/item/percentage";
const std::string kExportPct = "/country/economy/export_partners/item/percentage";

}  // namespace

TEST(PathIndex, TrivialPosting) {
    auto store = from_strings({"<a><b>red</b></a>", "<a><c>red</c></a>"});
    auto idx = PathIndex::build(store);
    auto p = idx.posting("red");
    EXPECT_EQ(path_strings(store, p.paths), (std::set<std::string>{"/a/b", "/a/c"}));
    for (auto& m : p.paths) EXPECT_GE(m.occurrence, 1u);
}

TEST(PathIndex, UnitedOccursInThreeContexts) {
    auto store = factbook();
    auto idx = PathIndex::build(store);
    std::set<std::string> expect{"/country", kImportTc, kExportTc};
    EXPECT_EQ(path_strings(store, idx.posting("united").paths), expect);
    EXPECT_EQ(path_strings(store, idx.paths_for(parse_search("\"united states\""))), expect);
}

TEST(PathIndex, TagNameTerm) {
    auto store = factbook();
    auto idx = PathIndex::build(store);
    EXPECT_EQ(path_strings(store, idx.posting("percentage").paths), (std::set<std::string>{kImportPct, kExportPct}));
    auto hinted = idx.paths_for(SearchExpr::match_all(), "percentage");
    ASSERT_EQ(hinted.size(), 2u);
    for (auto& m : hinted) {
        EXPECT_EQ(m.doc_frequency, 6u);
        EXPECT_EQ(m.occurrence, store.path_occurrence(m.path));
    }
    EXPECT_TRUE(idx.paths_for(SearchExpr::match_all(), "nonexistent_tag").empty());
    EXPECT_THROW(idx.paths_for(SearchExpr::match_all()), InvalidQueryError);
}

TEST(PathIndex, ScanNodes) {
    auto store = factbook();
    auto idx = PathIndex::build(store);
    auto one = idx.scan_nodes(parse_search("japan AND 14"));
    EXPECT_EQ(one.size(), 0u);  // direct text: trade_country and percentage are separate nodes
    auto japan = idx.scan_nodes(parse_search("\"16.9\""));
    ASSERT_EQ(japan.size(), 1u);
    EXPECT_GT(japan.peek().score, 0.0);

    auto pct = *store.path_id(ContextPath::parse(kImportPct));
    auto all = idx.scan_nodes(SearchExpr::match_all(), std::set<PathId>{pct});
    EXPECT_EQ(all.size(), store.path_occurrence(pct));
    for (auto& e : all.entries()) {
        EXPECT_EQ(store.node(e.node).path, pct);
        EXPECT_EQ(e.score, 1.0);
        EXPECT_EQ(all.score_of(e.node), 1.0);
    }
}

TEST(PathIndex, ScoresMatchFrequencyOracle) {
    std::vector<std::string> docs;
    const char* vocab[] = {"alpha", "beta", "gamma", "delta"};
    for (int d = 0; d < 10; ++d) {
        std::string x = "<doc>";
        for (int i = 0; i < 4; ++i) {
            x += "<p>";
            for (int w = 0; w <= (d * 7 + i * 3) % 6; ++w) x += std::string(vocab[(d + i * w) % 4]) + " ";
            x += "</p>";
        }
        docs.push_back(x + "</doc>");
    }
    auto store = from_strings(docs);
    ASSERT_EQ(store.node_count(), 50u);
    auto idx = PathIndex::build(store);
    for (auto kw : vocab) {
        auto stream = idx.scan_nodes(parse_search(kw));
        std::vector<std::pair<double, NodeRef>> expected;
        for (NodeRef n = 0; n < store.node_count(); ++n)
            if (auto s = oracle::keyword_score(kw, store.node(n).text)) expected.push_back({-*s, n});
        std::sort(expected.begin(), expected.end());
        ASSERT_EQ(stream.size(), expected.size()) << kw;
        for (std::size_t i = 0; i < expected.size(); ++i) {
            auto got = stream.next();
            EXPECT_EQ(got.node, expected[i].second);
            EXPECT_DOUBLE_EQ(got.score, -expected[i].first);
        }
    }
}

TEST(PathIndex, UnionBoundAndPostingConsistency) {
    auto store = factbook();
    auto idx = PathIndex::build(store);
    for (auto q : {"united", "\"united states\"", "china OR canada", "china NOT japan", "15", "2007", "NOT china"}) {
        auto expr = parse_search(q);
        auto paths = idx.paths_for(expr);
        std::set<PathId> from_paths, from_nodes;
        for (auto& m : paths) from_paths.insert(m.path);
        std::map<PathId, std::size_t> occ;
        auto stream = idx.scan_nodes(expr);
        for (auto& e : stream.entries()) {
            from_nodes.insert(store.node(e.node).path);
            ++occ[store.node(e.node).path];
        }
        EXPECT_EQ(from_paths, from_nodes) << q;
        for (auto& m : paths) EXPECT_EQ(m.occurrence, occ[m.path]) << q;
        // brute force over all nodes
        std::set<PathId> brute;
        for (NodeRef n = 0; n < store.node_count(); ++n)
            if (evaluate(expr, store.node(n).text)) brute.insert(store.node(n).path);
        EXPECT_EQ(brute, from_nodes) << q;
    }
}

TEST(PathIndex, PersistenceRoundTrip) {
    auto store = factbook();
    auto idx = PathIndex::build(store);
    xcube::testing::TempDir dir;
    idx.save(dir.path);
    auto back = PathIndex::load(dir.path, store);
    EXPECT_EQ(back.stats().terms, idx.stats().terms);
    auto q = parse_search("china");
    EXPECT_EQ(back.scan_nodes(q).size(), idx.scan_nodes(q).size());
}

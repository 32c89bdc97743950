#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "xcube/connection_summary.hpp"
#include "xcube/context_summary.hpp"

using namespace xcube;

namespace {

const char* kQuery1 = R"((*, "United States") AND (trade country, *) AND (percentage, *))";
const char* kImportTc = "/country/economy/import_partners/item/trade_country";
const char* kImportPct = "/country/economy/import_partners/item/percentage";

Query refined_query1(const PathIndex& index) {
    auto q = parse_query(kQuery1);
    auto buckets = context_buckets(index, q);
    return apply_context_selection(q, buckets,
                                   {{0, {ContextPath::parse("/country")}},
                                    {1, {ContextPath::parse(kImportTc)}},
                                    {2, {ContextPath::parse(kImportPct)}}});
}

}  // namespace

TEST(ContextSummary, QueryOneBuckets) {
    auto store = xcube::testing::factbook();
    auto index = PathIndex::build(store);
    auto q = parse_query(kQuery1);
    auto b = context_buckets(index, q);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0].entries.size(), 3u);
    EXPECT_TRUE(b[0].contains(ContextPath::parse("/country")));
    EXPECT_TRUE(b[0].contains(ContextPath::parse(kImportTc)));
    EXPECT_EQ(b[1].entries.size(), 2u);
    EXPECT_EQ(b[2].entries.size(), 2u);
    for (auto& bucket : b)
        for (std::size_t i = 1; i < bucket.entries.size(); ++i)
            EXPECT_GE(bucket.entries[i - 1].path_frequency, bucket.entries[i].path_frequency);
    // "United States" is the direct text of three country roots
    for (auto& e : b[0].entries)
        if (e.path.str() == "/country") EXPECT_EQ(e.occurrence, 3u);

    EXPECT_THROW(apply_context_selection(q, b, {{5, {ContextPath::parse("/country")}}}), InvalidSelectionError);
    EXPECT_THROW(apply_context_selection(q, b, {{1, {ContextPath::parse("/country")}}}), InvalidSelectionError);
    auto r = refined_query1(index);
    EXPECT_EQ(r.refinement.contexts->at(1), std::set<ContextPath>{ContextPath::parse(kImportTc)});
    auto json = buckets_to_json(b);
    EXPECT_EQ(json.size(), 3u);
    EXPECT_NE(render_buckets(q, b).find("/country"), std::string::npos);
}

TEST(Connection, CanonicalFormAndWalk) {
    auto store = xcube::testing::factbook();
    auto tc = store.find(DeweyId::parse("2:1.3.2.1.1"));
    auto pct = store.find(DeweyId::parse("2:1.3.2.1.2"));
    ASSERT_TRUE(tc && pct);
    auto routes = instance_routes(store, *tc, *pct, 6);
    ASSERT_EQ(routes.size(), 1u);
    auto& c = routes[0];
    EXPECT_EQ(c.from().str(), kImportPct);
    EXPECT_EQ(c.render(), "percentage \xE2\x86\x91item \xE2\x86\x93trade_country");
    EXPECT_EQ(canonicalize(c.reversed()).id, c.id);
    EXPECT_TRUE(conforms(store, c, *tc, *pct));
    EXPECT_TRUE(conforms(store, c, *pct, *tc));
    auto other_pct = store.find(DeweyId::parse("2:1.3.2.2.2"));
    EXPECT_FALSE(conforms(store, c, *tc, *other_pct));
    auto cousin = instance_routes(store, *tc, *other_pct, 6);
    ASSERT_EQ(cousin.size(), 1u);
    EXPECT_EQ(cousin[0].length(), 4u);
    EXPECT_TRUE(conforms(store, cousin[0], *tc, *other_pct));
    // walks need not be simple, so the cousin route also reaches the sibling
    EXPECT_TRUE(conforms(store, cousin[0], *tc, *pct));
}

TEST(ConnectionSummary, QueryOneImportContexts) {
    auto store = xcube::testing::factbook();
    auto index = PathIndex::build(store);
    auto guides = build_guides(store);
    auto q = refined_query1(index);
    auto topk = top_k(index, q);
    ASSERT_FALSE(topk.tuples.empty());
    auto s = summarize_connections(store, guides, q, topk);
    auto g = s.group(1, 2);
    ASSERT_NE(g, nullptr);
    EXPECT_GE(g->ids.size(), 2u);
    bool sibling = false;
    for (auto& id : g->ids) sibling = sibling || s.connections.at(id).render() == "percentage \xE2\x86\x91item \xE2\x86\x93trade_country";
    EXPECT_TRUE(sibling);
    EXPECT_EQ(s.connections.at(g->ids.front()).length(), 2u);

    // zero false negatives: every top-k pair conforms to a summarized connection of its group
    for (auto& t : topk.tuples)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j) {
                auto grp = s.group(i, j);
                ASSERT_NE(grp, nullptr);
                bool hit = false;
                for (auto& id : grp->ids) hit = hit || oracle::conforms_any(store, s.connections.at(id), t.nodes[i], t.nodes[j]);
                EXPECT_TRUE(hit) << i << "," << j;
            }
    EXPECT_EQ(count_false_positives(store, q, s), 0u);
    EXPECT_FALSE(summary_to_json(s)["groups"].empty());

    auto chosen = apply_connection_selection(q, s, {g->ids.front()});
    EXPECT_EQ(chosen.refinement.connections->size(), 1u);
    EXPECT_THROW(apply_connection_selection(q, s, {"feedface"}), InvalidSelectionError);
}

TEST(ConnectionSummary, MergeThresholdControlsFalsePositives) {
    auto store = xcube::testing::mixed();
    auto index = PathIndex::build(store);
    auto q = parse_query("(x, alpha) AND (w2, *)");
    auto topk = top_k(index, q);
    ASSERT_FALSE(topk.tuples.empty());
    auto loose = summarize_connections(store, build_guides(store, 0.2), q, topk);
    auto strict = summarize_connections(store, build_guides(store, 0.6), q, topk);
    auto fp_loose = count_false_positives(store, q, loose);
    auto fp_strict = count_false_positives(store, q, strict);
    EXPECT_EQ(fp_loose, 1u);
    EXPECT_EQ(fp_strict, 0u);
    EXPECT_LE(fp_strict, fp_loose);
}

TEST(ConnectionSummary, CacheIsTransparent) {
    auto store = xcube::testing::factbook();
    auto index = PathIndex::build(store);
    auto guides = build_guides(store);
    auto q = refined_query1(index);
    auto topk = top_k(index, q);
    ConnectionCache cache;
    auto a = summarize_connections(store, guides, q, topk, {}, &cache);
    auto misses = cache.misses();
    auto b = summarize_connections(store, guides, q, topk, {}, &cache);
    auto c = summarize_connections(store, guides, q, topk);
    EXPECT_EQ(cache.misses(), misses);
    EXPECT_GT(cache.hits(), 0u);
    EXPECT_EQ(summary_to_json(a), summary_to_json(b));
    EXPECT_EQ(summary_to_json(a), summary_to_json(c));
}

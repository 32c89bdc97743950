#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "xcube/dataguide.hpp"

using namespace xcube;

namespace {
std::set<ContextPath> paths(std::initializer_list<const char*> ps) {
    std::set<ContextPath> s;
    for (auto p : ps) s.insert(ContextPath::parse(p));
    return s;
}
}  // namespace

TEST(Overlap, Formula) {
    auto a = paths({"/r", "/r/a", "/r/b", "/r/c"});
    EXPECT_DOUBLE_EQ(overlap(a, a), 1.0);
    EXPECT_DOUBLE_EQ(overlap(a, paths({"/s", "/s/a"})), 0.0);
    auto b = paths({"/r", "/r/a", "/s", "/s/x", "/s/y"});
    EXPECT_NEAR(overlap(a, b), 0.4, 1e-12);
    EXPECT_NEAR(overlap(b, a), 0.4, 1e-12);
    EXPECT_THROW(overlap(std::set<ContextPath>{}, a), InvalidArgumentError);
}

TEST(Overlap, SymmetricOnRandomSets) {
    std::mt19937 rng(3);
    for (int i = 0; i < 100; ++i) {
        std::set<ContextPath> a, b;
        for (int k = 0, n = 1 + rng() % 10; k < n; ++k) a.insert(ContextPath::parse("/p" + std::to_string(rng() % 15)));
        for (int k = 0, n = 1 + rng() % 10; k < n; ++k) b.insert(ContextPath::parse("/p" + std::to_string(rng() % 15)));
        EXPECT_EQ(overlap(a, b), overlap(b, a));
        EXPECT_EQ(overlap(a, a), 1.0);
        EXPECT_GE(overlap(a, b), 0.0);
        EXPECT_LE(overlap(a, b), 1.0);
    }
}

TEST(Dataguides, ThreeFamilies) {
    auto store = xcube::testing::from_strings(xcube::testing::family_corpus());
    auto gs = build_guides(store, 0.4);
    EXPECT_EQ(gs.guides().size(), 3u);
    for (auto& g : gs.guides()) EXPECT_EQ(g.members.size(), 100u);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double t : {1.0, 0.6, 0.4, 0.2, 0.0}) {
        auto n = build_guides(store, t).guides().size();
        EXPECT_LE(n, prev) << t;
        prev = n;
    }
    EXPECT_EQ(build_guides(store, 0.0).guides().size(), 1u);
}

TEST(Dataguides, DegenerateCorpusWithoutMerging) {
    auto store = xcube::testing::from_strings(xcube::testing::degenerate_corpus(50));
    EXPECT_EQ(build_guides(store, 1.5).guides().size(), 50u);
    EXPECT_EQ(build_guides(store, 1.0).guides().size(), 50u);
    EXPECT_LT(build_guides(store, 0.4).guides().size(), 50u);
}

TEST(Dataguides, ContainedDocumentsShareAGuide) {
    auto store = xcube::testing::from_strings({"<r><a/><b/></r>", "<r><a/></r>", "<r><b/></r>"});
    auto gs = build_guides(store, 2.0);
    EXPECT_EQ(gs.guides().size(), 1u);
    EXPECT_EQ(gs.guide(0).members, (std::vector<std::uint32_t>{0, 1, 2}));
    EXPECT_EQ(gs.guide(0).children(ContextPath::parse("/r")).size(), 2u);
}

TEST(Dataguides, CoverageOnAllFixtures) {
    std::vector<CorpusStore> stores;
    stores.push_back(xcube::testing::factbook());
    stores.push_back(xcube::testing::mixed());
    stores.push_back(xcube::testing::from_strings(xcube::testing::family_corpus(20)));
    for (unsigned s = 0; s < 3; ++s) stores.push_back(xcube::testing::random_corpus(s));
    for (auto& store : stores)
        for (double t : {1.0, 0.4, 0.0}) {
            auto gs = build_guides(store, t);
            for (PathId p = 0; p < store.paths().size(); ++p) EXPECT_FALSE(gs.locate(store.path(p)).empty());
            for (std::uint32_t d = 0; d < store.documents().size(); ++d)
                for (auto& p : document_paths(store, d)) EXPECT_TRUE(gs.guide(gs.guide_of_document(d)).contains(p));
        }
}

TEST(Dataguides, LinksAndPersistence) {
    auto store = xcube::testing::factbook();
    auto gs = build_guides(store);
    EXPECT_EQ(gs.guides().size(), 1u);
    ASSERT_FALSE(gs.links().empty());
    for (auto& l : gs.links()) EXPECT_EQ(l.to.path.str(), "/country");
    xcube::testing::TempDir dir;
    gs.save(dir.path);
    auto back = GuideSet::load(dir.path);
    EXPECT_EQ(back.guides().size(), gs.guides().size());
    EXPECT_EQ(back.links(), gs.links());
    EXPECT_EQ(back.guide(0).paths, gs.guide(0).paths);
    EXPECT_THROW(gs.locate(ContextPath::parse("/nowhere")), InternalError);
    EXPECT_NE(gs.report().find("guides"), std::string::npos);
}

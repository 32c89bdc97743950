#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "support.hpp"
#include "xcube/corpus_store.hpp"

using namespace xcube;
using xcube::testing::factbook;
using xcube::testing::from_strings;

TEST(CorpusStore, TrivialDocument) {
    auto store = from_strings({"<a><b>x</b><b>y</b></a>"});
    EXPECT_EQ(store.node_count(), 3u);
    std::set<std::string> paths;
    for (auto& p : store.paths()) paths.insert(p.str());
    EXPECT_EQ(paths, (std::set<std::string>{"/a", "/a/b"}));
    EXPECT_EQ(store.stats().edges.at(EdgeKind::parent_child), 2u);
}

TEST(CorpusStore, DeweyOrderMatchesPreorder) {
    auto store = from_strings({"<a x='1'><b><c/></b><d/></a>"});
    std::vector<std::string> ids;
    for (auto& n : store.nodes()) ids.push_back(n.id.to_string());
    EXPECT_EQ(ids, (std::vector<std::string>{"0:1", "0:1.1", "0:1.2", "0:1.2.1", "0:1.3"}));
    EXPECT_EQ(store.context(1).str(), "/a/@x");
    for (NodeRef n = 1; n < store.node_count(); ++n) EXPECT_LT(store.node(n - 1).id, store.node(n).id);
}

TEST(CorpusStore, ContextEqualsParentWalk) {
    auto store = factbook();
    for (NodeRef n = 0; n < store.node_count(); ++n) {
        std::vector<std::string> segs;
        for (NodeRef m = n; m != kNoNode; m = store.node(m).parent) segs.insert(segs.begin(), store.node(m).name);
        EXPECT_EQ(ContextPath(segs), store.context(n));
    }
}

TEST(CorpusStore, NameCanonicalization) {
    auto store = from_strings({"<Country><Trade_Country>x</Trade_Country><ns:Item/></Country>"});
    EXPECT_EQ(store.context(1).str(), "/country/trade_country");
    EXPECT_EQ(store.context(2).str(), "/country/item");
    EXPECT_EQ(ContextPath::parse("/Country/trade country").str(), "/country/trade_country");
}

TEST(CorpusStore, ContentConcatenation) {
    auto store = from_strings({"<item><trade_country>China</trade_country><percentage>15</percentage></item>",
                               "<p>15%</p>"});
    EXPECT_EQ(store.content(DeweyId{0, {1}}), "China 15");
    EXPECT_EQ(store.content(DeweyId{1, {1}}), "15%");
    EXPECT_THROW(store.content(DeweyId{7, {1}}), NotFoundError);
}

TEST(CorpusStore, ContentMatchesDomWalk) {
    std::string xml =
        "<r>alpha <a>beta <b>gamma <c>delta</c> epsilon</b> zeta</a>  eta <d>theta</d> iota<e/></r>";
    auto store = from_strings({xml});
    auto dom = oracle::parse_dom(xml);
    EXPECT_EQ(store.content(0), oracle::dom_content(dom.get_child("r")));
    EXPECT_EQ(store.content(1), oracle::dom_content(dom.get_child("r.a")));
    EXPECT_EQ(store.content(2), oracle::dom_content(dom.get_child("r.a.b")));
}

TEST(CorpusStore, MalformedDocumentIsRejected) {
    auto result = CorpusStore::ingest({{"good.xml", "<a/>"}, {"bad.xml", "<a><b></a>"}, {"ok.xml", "<c/>"}}, {});
    EXPECT_EQ(result.stats.documents, 2u);
    ASSERT_EQ(result.stats.rejected.size(), 1u);
    EXPECT_EQ(result.stats.rejected[0].document, "bad.xml");
    EXPECT_NE(result.stats.rejected[0].message.find("line"), std::string::npos);
}

TEST(CorpusStore, DuplicateDocumentIdentity) {
    EXPECT_THROW(CorpusStore::ingest({{"a.xml", "<a/>"}, {"a.xml", "<b/>"}}, {}), InvalidArgumentError);
}

TEST(CorpusStore, ValueLinksMatchPairwiseScan) {
    auto store = factbook();
    std::size_t expected = 0;
    for (NodeRef s = 0; s < store.node_count(); ++s) {
        if (store.node(s).name != "trade_country") continue;
        for (NodeRef t = 0; t < store.node_count(); ++t)
            if (store.context(t).str() == "/country" && store.node(t).text == store.node(s).text) ++expected;
    }
    EXPECT_GT(expected, 0u);
    EXPECT_EQ(store.stats().edges.at(EdgeKind::value_based), expected);
}

TEST(CorpusStore, NeighborsIncludeLinkAndAreSymmetric) {
    auto store = factbook();
    auto china_tc = store.at(DeweyId::parse("2:1.3.2.1.1"));
    ASSERT_EQ(store.node(china_tc).name, "trade_country");
    ASSERT_EQ(store.node(china_tc).text, "China");
    auto ns = store.neighbors(store.node(china_tc).id, {EdgeKind::value_based});
    ASSERT_EQ(ns.size(), 1u);
    EXPECT_EQ(ns[0].node->text, "China");
    EXPECT_EQ(store.context(store.at(ns[0].node->id)).str(), "/country");
    EXPECT_TRUE(store.neighbors(store.node(china_tc).id, {}).empty());

    for (NodeRef a = 0; a < store.node_count(); ++a)
        for (auto& nb : store.neighbors(store.node(a).id, EdgeKindSet::all())) {
            auto back = store.neighbors(nb.node->id, EdgeKindSet::all());
            bool found = std::any_of(back.begin(), back.end(), [&](const Neighbor& x) {
                return x.node->id == store.node(a).id && x.edge == nb.edge;
            });
            EXPECT_TRUE(found) << store.node(a).id.to_string();
        }
}

TEST(CorpusStore, RootNeighborOrder) {
    auto store = from_strings({"<a><b/></a>"});
    auto ns = store.neighbors(DeweyId{0, {1}}, {EdgeKind::parent_child});
    ASSERT_EQ(ns.size(), 1u);
    EXPECT_EQ(ns[0].node->id.to_string(), "0:1.1");
}

TEST(CorpusStore, PathDocumentFrequencySkew) {
    std::vector<std::string> docs;
    for (int i = 0; i < 16; ++i) {
        std::string d = i < 15 ? "<country>" : "<region>";
        if (i < 2) d += "<rare>x</rare>";
        d += i < 15 ? "</country>" : "</region>";
        docs.push_back(d);
    }
    auto store = from_strings(docs);
    EXPECT_EQ(store.path_doc_frequency(*store.path_id(ContextPath::parse("/country"))), 15u);
    EXPECT_EQ(store.path_doc_frequency(*store.path_id(ContextPath::parse("/country/rare"))), 2u);
}

TEST(CorpusStore, ReingestAndPersistenceRoundTrip) {
    auto a = factbook();
    auto b = factbook();
    EXPECT_EQ(a.stats(), b.stats());
    EXPECT_EQ(a.paths(), b.paths());
    xcube::testing::TempDir dir;
    a.save(dir.path);
    auto c = CorpusStore::load(dir.path);
    EXPECT_EQ(a.stats(), c.stats());
    EXPECT_EQ(a.paths(), c.paths());
    for (NodeRef n = 0; n < a.node_count(); ++n) {
        EXPECT_EQ(a.node(n).id, c.node(n).id);
        EXPECT_EQ(a.content(n), c.content(n));
    }
    EXPECT_EQ(a.links().size(), c.links().size());
}

TEST(CorpusStore, IdrefAndXlinkEdges) {
    std::vector<LinkSpec> links{{EdgeKind::idref, "/lib/book/@author", "/lib/person/@id", "wrote", false},
                                {EdgeKind::xlink, "/lib/book/@href", "/cat/entry/@id", "listed", false}};
    auto store = CorpusStore::ingest({{"lib.xml",
                                       "<lib><person id='p1'/><person id='p2'/>"
                                       "<book author='p1 p2' href='cat.xml#e1'/></lib>"},
                                      {"cat.xml", "<cat><entry id='e1'/></cat>"}},
                                     links)
                     .store;
    EXPECT_EQ(store.stats().edges.at(EdgeKind::idref), 2u);
    EXPECT_EQ(store.stats().edges.at(EdgeKind::xlink), 1u);
}

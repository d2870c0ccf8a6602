#include <gtest/gtest.h>

#include "mcwb/embedding.hpp"

using namespace mcwb;

namespace {

RotationEmbedding triangle() {
    RotationEmbedding emb;
    emb.graph = WeightedGraph(3);
    emb.graph.addEdge(0, 1, 1);
    emb.graph.addEdge(1, 2, 2);
    emb.graph.addEdge(0, 2, 3);
    emb.rotation = {{0, 2}, {1, 0}, {2, 1}};
    return emb;
}

RotationEmbedding planeK4() {
    RotationEmbedding emb;
    emb.graph = WeightedGraph(4);
    for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}})
        emb.graph.addEdge(a, b, 1);
    emb.rotation = {{0, 1, 2}, {3, 0, 4}, {5, 1, 3}, {4, 2, 5}};
    return emb;
}

}  // namespace

TEST(TraceFaces, PlaneExamples) {
    auto t = traceFaces(triangle());
    EXPECT_EQ(t.faces.size(), 2u);
    EXPECT_EQ(t.genus, 0);
    auto k = traceFaces(planeK4());
    EXPECT_EQ(k.faces.size(), 4u);
    EXPECT_EQ(k.genus, 0);
    for (const auto& f : k.faces) EXPECT_EQ(f.vertices.size(), 3u);
}

TEST(TraceFaces, ReversedVertexOnTriangleIsNoOp) {
    // A degree-2 vertex has a single cyclic order, so reversal leaves the embedding unchanged.
    auto emb = triangle();
    std::reverse(emb.rotation[0].begin(), emb.rotation[0].end());
    auto t = traceFaces(emb);
    EXPECT_EQ(t.faces.size(), 2u);
    EXPECT_EQ(t.genus, 0);
}

TEST(TraceFaces, NonPlaneRotations) {
    auto emb = planeK4();
    std::reverse(emb.rotation[0].begin(), emb.rotation[0].end());
    auto t = traceFaces(emb);
    EXPECT_EQ(t.faces.size(), 2u);
    EXPECT_EQ(t.genus, 2);
    // Bouquet of two interleaved loops: one face on the torus.
    RotationEmbedding b;
    b.graph = WeightedGraph(1);
    b.graph.addEdge(0, 0, 1);
    b.graph.addEdge(0, 0, 1);
    b.rotation = {{0, 1, 0, 1}};
    auto bt = traceFaces(b);
    EXPECT_EQ(bt.faces.size(), 1u);
    EXPECT_EQ(bt.genus, 2);
    EXPECT_FALSE(validatePlane(b).ok);
}

TEST(TraceFaces, DartsCoveredOnceAndLengthsSum) {
    for (const auto& emb : {triangle(), planeK4()}) {
        auto t = traceFaces(emb);
        std::vector<int> seen(2 * emb.graph.edgeCount(), 0);
        std::size_t total = 0;
        for (const auto& f : t.faces) {
            total += f.walk.size();
            for (const auto& d : f.walk) ++seen[d.id()];
        }
        EXPECT_EQ(total, 2u * emb.graph.edgeCount());
        for (int s : seen) EXPECT_EQ(s, 1);
    }
}

TEST(TraceFaces, MalformedRotation) {
    auto emb = triangle();
    emb.rotation[0] = {0};
    EXPECT_THROW(traceFaces(emb), EmbeddingError);
    emb.rotation[0] = {0, 1};
    EXPECT_THROW(traceFaces(emb), EmbeddingError);
    emb.rotation.pop_back();
    EXPECT_THROW(traceFaces(emb), EmbeddingError);
}

TEST(DualGraph, Examples) {
    auto d = dualGraph(triangle());
    EXPECT_EQ(d.vertexCount, 2);
    EXPECT_EQ(d.edgeCount(), 3);
    for (const auto& e : d.edges) EXPECT_NE(e.a, e.b);

    RotationEmbedding tree;
    tree.graph = WeightedGraph(4);
    tree.graph.addEdge(0, 1, 1);
    tree.graph.addEdge(0, 2, 1);
    tree.graph.addEdge(0, 3, 1);
    tree.rotation = {{0, 1, 2}, {0}, {1}, {2}};
    auto dt = dualGraph(tree);
    EXPECT_EQ(dt.vertexCount, 1);
    for (const auto& e : dt.edges) EXPECT_EQ(e.a, e.b);

    auto dk = dualGraph(planeK4());
    EXPECT_EQ(dk.vertexCount, 4);
    std::vector<int> deg(4, 0);
    for (const auto& e : dk.edges) {
        ++deg[e.a];
        ++deg[e.b];
    }
    for (int x : deg) EXPECT_EQ(x, 3);
}

TEST(DualGraph, DoubleDualKeepsWeights) {
    auto emb = triangle();
    auto dd = dualEmbedding(dualEmbedding(emb));
    ASSERT_EQ(dd.graph.edgeCount(), emb.graph.edgeCount());
    for (int e = 0; e < emb.graph.edgeCount(); ++e) EXPECT_EQ(dd.graph.edges[e].w, emb.graph.edges[e].w);
    EXPECT_EQ(dd.graph.vertexCount, emb.graph.vertexCount);
}

TEST(FaceCover, Examples) {
    auto emb = triangle();
    auto ft = traceFaces(emb);
    EXPECT_EQ(minFaceCover(emb, ft, {0, 1, 2}).faces.size(), 1u);
    EXPECT_TRUE(minFaceCover(emb, ft, {}).faces.empty());
    auto k = planeK4();
    auto kt = traceFaces(k);
    auto c = minFaceCover(k, kt, {0, 1, 2, 3});
    EXPECT_EQ(c.faces.size(), 2u);
    EXPECT_TRUE(c.exact);
    auto g = minFaceCover(k, kt, {0, 1, 2, 3}, 2);
    EXPECT_FALSE(g.exact);
    EXPECT_EQ(g.faces.size(), 2u);
}

TEST(ValidatePlane, Examples) {
    RotationEmbedding c4;
    c4.graph = WeightedGraph(4);
    for (int i = 0; i < 4; ++i) c4.graph.addEdge(i, (i + 1) % 4, 1);
    c4.rotation = {{0, 3}, {0, 1}, {1, 2}, {2, 3}};
    EXPECT_TRUE(validatePlane(c4).ok);

    RotationEmbedding two;
    two.graph = WeightedGraph(6);
    for (int base : {0, 3}) {
        two.graph.addEdge(base, base + 1, 1);
        two.graph.addEdge(base + 1, base + 2, 1);
        two.graph.addEdge(base, base + 2, 1);
    }
    two.rotation = {{0, 2}, {0, 1}, {1, 2}, {3, 5}, {3, 4}, {4, 5}};
    auto r = validatePlane(two);
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.componentGenus.size(), 2u);

    auto k = planeK4();
    std::reverse(k.rotation[0].begin(), k.rotation[0].end());
    auto bad = validatePlane(k);
    EXPECT_FALSE(bad.ok);
    EXPECT_EQ(bad.genus, 2);
}

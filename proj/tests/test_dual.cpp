#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "mcwb/corpus.hpp"
#include "mcwb/dual.hpp"
#include "mcwb/oracles.hpp"

using namespace mcwb;

namespace {

RotationEmbedding triangle() {
    RotationEmbedding emb;
    emb.graph = WeightedGraph(3);
    emb.graph.addEdge(0, 1, 1);
    emb.graph.addEdge(1, 2, 1);
    emb.graph.addEdge(2, 0, 1);
    emb.rotation = {{0, 2}, {1, 0}, {2, 1}};
    return emb;
}

// Unit 4-cycle 0-1-2-3 with pendant 4 inside (at 0) and pendant 5 outside (at 2).
RotationEmbedding squareWithPendants(Weight ring = Weight(1)) {
    RotationEmbedding emb;
    emb.graph = WeightedGraph(6);
    for (int i = 0; i < 4; ++i) emb.graph.addEdge(i, (i + 1) % 4, ring);
    emb.graph.addEdge(0, 4, 1);  // 4
    emb.graph.addEdge(2, 5, 1);  // 5
    emb.rotation = {{0, 4, 3}, {1, 0}, {2, 1}, {3, 2}, {4}, {5}};
    emb.rotation[2] = {2, 5, 1};
    auto ft = traceFaces(emb);
    if (ft.faceOfDart[2 * 4] == ft.faceOfDart[2 * 5]) emb.rotation[2] = {2, 1, 5};
    return emb;
}

int crossings(const Setup& s) {
    int c = 0;
    for (const auto& w : s.k.edges) c += static_cast<int>(w.crossed.size());
    return c;
}

}  // namespace

TEST(BuildSetup, TwoTerminalsOnOneFace) {
    auto s = buildSetup(triangle(), {0, 1});
    ASSERT_EQ(s.k.edges.size(), 1u);
    EXPECT_TRUE(s.k.edges[0].crossed.empty());
    EXPECT_EQ(s.k.edges[0].weight, Weight::zero());
    // The K-edge is a chord of that face and splits it.
    EXPECT_EQ(s.parcels.parcelCount, static_cast<int>(s.faces.faces.size()) + 1);
}

TEST(BuildSetup, TerminalsOnOppositeFaces) {
    auto emb = squareWithPendants();
    ASSERT_TRUE(validatePlane(emb).ok);
    auto ft = traceFaces(emb);
    ASSERT_EQ(ft.faces.size(), 2u);
    // The pendants must sit in different faces for this example.
    ASSERT_NE(ft.faceOfDart[2 * 4], ft.faceOfDart[2 * 5]);
    auto s = buildSetup(emb, {4, 5});
    ASSERT_EQ(s.k.edges.size(), 1u);
    EXPECT_EQ(s.k.edges[0].crossed.size(), 1u);
    EXPECT_EQ(s.k.edges[0].weight, Weight(1));
}

TEST(BuildSetup, SingleTerminal) {
    auto s = buildSetup(triangle(), {2});
    EXPECT_TRUE(s.k.edges.empty());
    EXPECT_EQ(s.k.nodeCount(), 1);
    EXPECT_EQ(s.parcels.parcelCount, static_cast<int>(s.faces.faces.size()));
}

TEST(BuildSetup, RejectsNonPlaneAndDisconnected) {
    auto emb = triangle();
    emb.rotation[0] = {2, 0};
    emb.rotation[1] = {0, 1};
    emb.rotation[2] = {1, 2};
    if (traceFaces(emb).genus != 0) {
        EXPECT_THROW(buildSetup(emb, {0}), UnsupportedInput);
    }
    RotationEmbedding two;
    two.graph = WeightedGraph(4);
    two.graph.addEdge(0, 1, 1);
    two.graph.addEdge(2, 3, 1);
    two.rotation = {{0}, {0}, {1}, {1}};
    EXPECT_THROW(buildSetup(two, {0, 2}), UnsupportedInput);
}

TEST(BuildSetup, InvariantsOnRandomPlaneGraphs) {
    std::mt19937_64 rng(17);
    for (int it = 0; it < 150; ++it) {
        PlaneInstanceSpec spec;
        spec.vertices = 2 + it % 10;
        spec.chords = it % 8;
        spec.terminals = 1 + it % 4;
        auto inst = randomPlaneInstance(rng, spec);
        auto s = buildSetup(embeddingOf(inst), inst.pattern.terminals);
        // K is a tree containing every terminal.
        EXPECT_EQ(s.k.nodeCount(), static_cast<int>(s.k.edges.size()) + 1);
        for (int v : inst.pattern.terminals) EXPECT_GE(s.k.nodeOfVertex(v), 0);
        // Each G-edge is crossed at most once per K-edge.
        for (const auto& l : s.k.ledger) {
            auto sorted = l;
            std::sort(sorted.begin(), sorted.end());
            EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
        }
        EXPECT_LE(s.parcels.parcelCount,
                  static_cast<int>(s.faces.faces.size()) + crossings(s) + static_cast<int>(s.k.edges.size()));
        EXPECT_TRUE(validatePlane(s.overlay).ok);
        // Each K-edge walk is a minimum crossed-weight connection between its end nodes' faces.
        for (const auto& w : s.k.edges) {
            Weight sum = Weight::zero();
            for (int e : w.crossed) sum = sum + inst.graph.edges[e].w;
            EXPECT_EQ(sum, w.weight);
            EXPECT_EQ(w.faces.size(), w.crossed.size() + 1);
        }
    }
}

namespace {

// Exhaustive min over trails of bounded length with the given crossing sequence.
Weight bruteTrail(const Setup& s, int p1, int p2, const std::vector<int>& sigma, int maxLen) {
    Weight best = INF;
    std::function<void(int, int, size_t, Weight)> rec = [&](int p, int len, size_t i, Weight w) {
        if (p == p2 && i == sigma.size() && w < best) best = w;
        if (len == maxLen) return;
        for (int ai : s.parcels.incident[p]) {
            const auto& a = s.parcels.adjacencies[ai];
            int q = a.a == p ? a.b : a.a;
            if (q == p) continue;
            if (a.kEdge) {
                if (i < sigma.size() && sigma[i] == a.edge) rec(q, len + 1, i + 1, w);
            } else {
                rec(q, len + 1, i, w + adjacencyWeight(s, a));
            }
        }
    };
    rec(p1, 0, 0, Weight::zero());
    return best;
}

}  // namespace

TEST(MinTrail, BaseCases) {
    auto s = buildSetup(triangle(), {0, 1});
    auto t0 = minTrail(s, 0, 0, {});
    ASSERT_TRUE(t0);
    EXPECT_EQ(t0->weight, Weight::zero());
    EXPECT_EQ(t0->length(), 0);
    for (const auto& a : s.parcels.adjacencies)
        if (a.kEdge && a.a != a.b) {
            auto tr = minTrail(s, a.a, a.b, {a.edge});
            ASSERT_TRUE(tr);
            EXPECT_EQ(tr->weight, Weight::zero());
            EXPECT_EQ(tr->length(), 1);
        }
}

TEST(MinTrail, MatchesExhaustiveEnumeration) {
    RotationEmbedding emb = squareWithPendants();
    for (int e = 0; e < 4; ++e) emb.graph.edges[e].w = Weight(e + 2);
    auto s = buildSetup(emb, {4, 5, 1});
    const int P = s.parcels.parcelCount;
    std::vector<std::vector<int>> sigmas{{}};
    for (int k = 0; k < static_cast<int>(s.k.edges.size()); ++k) {
        sigmas.push_back({k});
        for (int k2 = 0; k2 < static_cast<int>(s.k.edges.size()); ++k2) sigmas.push_back({k, k2});
    }
    for (const auto& sigma : sigmas)
        for (int p1 = 0; p1 < P; ++p1)
            for (int p2 = 0; p2 < P; ++p2) {
                auto tr = minTrail(s, p1, p2, sigma);
                Weight brute = bruteTrail(s, p1, p2, sigma, 8);
                EXPECT_EQ(tr ? tr->weight : INF, brute);
                if (tr) {
                    EXPECT_EQ(tr->crossingSequence(s.parcels), sigma);
                    EXPECT_EQ(tr->parcels.front(), p1);
                    EXPECT_EQ(tr->parcels.back(), p2);
                }
            }
}

namespace {

TreeDecomposition singleBag(int n) {
    TreeDecomposition td;
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    td.bags = {all};
    return td;
}

}  // namespace

TEST(DiscretizedEmbedding, SingleVertex) {
    auto s = buildSetup(triangle(), {0, 1});
    DualTopology c{1, {}};
    auto dd = solveDiscretizedEmbedding(s, c, {}, {}, {}, singleBag(1));
    ASSERT_TRUE(dd);
    EXPECT_EQ(dd->weight, Weight::zero());
    EXPECT_EQ(dd->phi, std::vector<int>({0}));
}

TEST(DiscretizedEmbedding, LoopAcrossKEdge) {
    auto s = buildSetup(squareWithPendants(), {4, 5});
    ASSERT_EQ(s.k.edges.size(), 1u);
    DualTopology c{1, {{0, 0}}};
    auto dd = solveDiscretizedEmbedding(s, c, {}, {}, {{0}}, singleBag(1));
    Weight brute = INF;
    for (int p = 0; p < s.parcels.parcelCount; ++p)
        if (auto tr = minTrail(s, p, p, {0})) brute = std::min(brute, tr->weight);
    ASSERT_TRUE(dd);
    EXPECT_EQ(dd->weight, brute);
    EXPECT_EQ(dd->trails[0].crossingSequence(s.parcels), std::vector<int>({0}));
    // A loop crossing the single K-edge once encloses one pendant: it must cut a G-edge.
    EXPECT_GT(dd->weight, Weight::zero());
}

TEST(DiscretizedEmbedding, TwoVerticesMatchBruteForce) {
    auto s = buildSetup(triangle(), {0, 1});
    ASSERT_LE(s.parcels.parcelCount, 6);
    DualTopology c{2, {{0, 1}}};
    TreeDecomposition td;
    td.bags = {{0, 1}};
    for (std::vector<int> sigma : {std::vector<int>{}, std::vector<int>{0}}) {
        auto dd = solveDiscretizedEmbedding(s, c, {}, {}, {sigma}, td);
        Weight brute = INF;
        for (int p = 0; p < s.parcels.parcelCount; ++p)
            for (int q = 0; q < s.parcels.parcelCount; ++q)
                if (auto tr = minTrail(s, p, q, sigma)) brute = std::min(brute, tr->weight);
        ASSERT_TRUE(dd);
        EXPECT_EQ(dd->weight, brute);
        EXPECT_EQ(dd->trails[0].crossingSequence(s.parcels), sigma);
    }
}

TEST(DiscretizedEmbedding, PinnedVertexFoldsCosts) {
    auto s = buildSetup(squareWithPendants(Weight(3)), {4, 5});
    markSpecialFaces(s, {0});
    int special = -1;
    for (int p = 0; p < s.parcels.parcelCount; ++p)
        if (s.parcels.special[p] && special < 0) special = p;
    ASSERT_GE(special, 0);
    DualTopology c{2, {{0, 1}, {1, 0}}};
    TreeDecomposition td;
    td.bags = {{0}};
    auto dd = solveDiscretizedEmbedding(s, c, {0}, {special}, {{0}, {}}, td);
    Weight brute = INF;
    for (int q = 0; q < s.parcels.parcelCount; ++q) {
        auto a = minTrail(s, special, q, {0});
        auto b = minTrail(s, q, special, {});
        if (a && b) brute = std::min(brute, a->weight + b->weight);
    }
    ASSERT_TRUE(dd);
    EXPECT_EQ(dd->phi[0], special);
    EXPECT_EQ(dd->weight, brute);
    int plain = 0;
    while (plain < s.parcels.parcelCount && s.parcels.special[plain]) ++plain;
    if (plain < s.parcels.parcelCount) {
        EXPECT_THROW(solveDiscretizedEmbedding(s, c, {0}, {plain}, {{0}, {}}, td), InputError);
    }
}

TEST(EdgesCrossed, UnionWithoutDoubleCounting) {
    RotationEmbedding emb = squareWithPendants();
    for (int e = 0; e < 6; ++e) emb.graph.edges[e].w = Weight(10 + e);
    auto s = buildSetup(emb, {4, 5});
    DiscretizedDual empty;
    empty.trails = {Trail{{0}, {}, Weight::zero()}};
    auto [e0, w0] = edgesCrossed(empty, s);
    EXPECT_TRUE(e0.empty());
    EXPECT_EQ(w0, Weight::zero());
    // Trails built from G-adjacencies only.
    std::vector<int> gAdj(emb.graph.edgeCount(), -1);
    for (int i = 0; i < static_cast<int>(s.parcels.adjacencies.size()); ++i)
        if (!s.parcels.adjacencies[i].kEdge) gAdj[s.parcels.adjacencies[i].edge] = i;
    auto trailOver = [&](std::vector<int> es) {
        Trail t;
        t.parcels.push_back(s.parcels.adjacencies[gAdj[es[0]]].a);
        for (int e : es) {
            t.via.push_back(gAdj[e]);
            t.parcels.push_back(0);
        }
        return t;
    };
    DiscretizedDual dd;
    dd.trails = {trailOver({1, 3})};
    auto [e1, w1] = edgesCrossed(dd, s);
    EXPECT_EQ(e1, EdgeSet({1, 3}));
    EXPECT_EQ(w1, Weight(11 + 13));
    dd.trails = {trailOver({1}), trailOver({1, 2})};
    auto [e2, w2] = edgesCrossed(dd, s);
    EXPECT_EQ(e2, EdgeSet({1, 2}));
    EXPECT_EQ(w2, Weight(11 + 12));
}

TEST(MulticutDual, Examples) {
    RotationEmbedding path;
    path.graph = WeightedGraph(3);
    path.graph.addEdge(0, 1, 1);
    path.graph.addEdge(1, 2, 1);
    path.rotation = {{0}, {0, 1}, {1}};
    DemandPattern pat;
    pat.terminals = {0, 2};
    pat.demands = {{0, 2}};
    auto md = dualFromMulticut(path, pat, {0});
    EXPECT_TRUE(md.valid);
    EXPECT_EQ(md.crossedG(), EdgeSet({0}));
    EXPECT_NE(md.faceOfVertex[0], md.faceOfVertex[2]);
    EXPECT_EQ(md.faceOfVertex[1], md.faceOfVertex[2]);
    EXPECT_TRUE(validatePlane(md.augmented).ok);

    auto empty = dualFromMulticut(path, DemandPattern{}, {});
    EXPECT_TRUE(empty.valid);
    EXPECT_TRUE(empty.crossedG().empty());

    RotationEmbedding c4;
    c4.graph = WeightedGraph(4);
    for (int i = 0; i < 4; ++i) c4.graph.addEdge(i, (i + 1) % 4, 1);
    c4.rotation = {{0, 3}, {1, 0}, {2, 1}, {3, 2}};
    DemandPattern diag;
    diag.terminals = {0, 1, 2, 3};
    diag.demands = {{0, 2}, {1, 3}};
    auto md4 = dualFromMulticut(c4, diag, {0, 2});
    EXPECT_TRUE(md4.valid);
    EXPECT_EQ(md4.crossedG(), EdgeSet({0, 2}));
    EXPECT_THROW(dualFromMulticut(c4, diag, {0}), InputError);
}

TEST(MinimizeDual, RemovesRedundantEdge) {
    RotationEmbedding path;
    path.graph = WeightedGraph(3);
    path.graph.addEdge(0, 1, 1);
    path.graph.addEdge(1, 2, 1);
    path.rotation = {{0}, {0, 1}, {1}};
    DemandPattern pat;
    pat.terminals = {0, 1, 2};
    pat.demands = {{0, 2}};
    auto md = dualFromMulticut(path, pat, {0, 1});
    auto mn = minimizeDual(md, pat);
    EXPECT_EQ(mn.crossedG(), EdgeSet({1}));
    EXPECT_LE(mn.faceCount, 3);
    // Already minimal: unchanged.
    auto again = minimizeDual(mn, pat);
    EXPECT_EQ(again.dualEdges, mn.dualEdges);
}

TEST(MulticutDual, RoundTripOnRandomOptima) {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 80; ++it) {
        PlaneInstanceSpec spec;
        spec.vertices = 3 + it % 8;
        spec.chords = it % 7;
        spec.terminals = 2 + it % 3;
        spec.deletions = it % 5 == 0 ? 2 : 0;
        auto inst = randomPlaneInstance(rng, spec);
        auto opt = minMulticutByPartition(inst);
        auto emb = embeddingOf(inst);
        auto md = dualFromMulticut(emb, inst.pattern, opt.cut);
        ASSERT_TRUE(md.valid) << md.message;
        EXPECT_EQ(md.crossedG(), opt.cut);
        EXPECT_TRUE(validatePlane(md.augmented).ok);
        EXPECT_TRUE(isMulticut(inst, md.crossedG()));
        auto mn = minimizeDual(md, inst.pattern);
        EXPECT_LE(mn.faceCount, static_cast<int>(inst.pattern.terminals.size()));
        EXPECT_EQ(cutWeight(inst.graph, mn.crossedG()), opt.weight);
        auto top = suppressDegreeTwo(dualAsGraph(mn));
        std::vector<int> deg(top.vertexCount, 0);
        for (auto [a, b] : top.arcs) {
            ++deg[a];
            ++deg[b];
        }
        for (int d : deg) EXPECT_LE(d, 3);
        EXPECT_LE(top.vertexCount, 2 * mn.faceCount);
    }
}

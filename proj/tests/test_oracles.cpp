#include <gtest/gtest.h>

#include <random>

#include "mcwb/decomposition.hpp"
#include "mcwb/oracles.hpp"
#include "test_support.hpp"

using namespace mcwb;
using mcwb::testing::bruteForceMulticut;
using mcwb::testing::randomInstance;

namespace {

MulticutInstance makeInstance(int n, std::vector<std::array<int, 3>> edges, std::vector<std::pair<int, int>> demands) {
    MulticutInstance inst;
    inst.graph = WeightedGraph(n);
    for (auto [a, b, w] : edges) inst.graph.addEdge(a, b, w);
    for (auto [a, b] : demands) {
        inst.pattern.terminals.push_back(a);
        inst.pattern.terminals.push_back(b);
        inst.pattern.demands.emplace_back(a, b);
    }
    inst.pattern.normalize();
    return inst;
}

WeightedGraph grid(int rows, int cols) {
    WeightedGraph g(rows * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) g.addEdge(r * cols + c, r * cols + c + 1, 1);
            if (r + 1 < rows) g.addEdge(r * cols + c, (r + 1) * cols + c, 1);
        }
    return g;
}

WeightedGraph complete(int n) {
    WeightedGraph g(n);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) g.addEdge(a, b, 1);
    return g;
}

}  // namespace

TEST(PartitionOracle, Examples) {
    auto single = makeInstance(2, {{0, 1, 5}}, {{0, 1}});
    auto s = minMulticutByPartition(single);
    EXPECT_EQ(s.weight, Weight(5));
    EXPECT_EQ(s.cut, EdgeSet({0}));

    auto tri = makeInstance(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}}, {{0, 1}});
    EXPECT_EQ(minMulticutByPartition(tri).weight, Weight(2));
    EXPECT_EQ(minMulticutByPartition(tri).cut, EdgeSet({0, 1}));

    MulticutInstance k4;
    k4.graph = complete(4);
    k4.pattern.terminals = {0, 1, 2, 3};
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) k4.pattern.demands.emplace_back(a, b);
    auto r = minMulticutByPartition(k4);
    EXPECT_EQ(r.weight, Weight(6));
    EXPECT_EQ(r.cut, EdgeSet({0, 1, 2, 3, 4, 5}));
}

TEST(PartitionOracle, RefusesAboveCap) {
    MulticutInstance big;
    big.graph = WeightedGraph(13);
    EXPECT_THROW(minMulticutByPartition(big), CapExceeded);
    EXPECT_NO_THROW(minMulticutByPartition(big, 13));
}

TEST(PartitionOracle, InfEdgeForcesInfOptimum) {
    auto inst = makeInstance(2, {{0, 1, 1}}, {{0, 1}});
    inst.graph.edges[0].w = INF;
    EXPECT_EQ(minMulticutByPartition(inst).weight, INF);
}

TEST(PartitionOracle, MatchesEdgeSubsetBruteForce) {
    std::mt19937_64 rng(20240601);
    for (int it = 0; it < 150; ++it) {
        int n = 2 + static_cast<int>(rng() % 6);
        int m = static_cast<int>(rng() % 11);
        auto inst = randomInstance(rng, n, m, 2 + static_cast<int>(rng() % 3), 5);
        auto bf = bruteForceMulticut(inst);
        auto po = minMulticutByPartition(inst);
        ASSERT_EQ(po.weight, bf.weight) << instanceToJson(inst).dump();
        ASSERT_EQ(po.cut, bf.cut) << instanceToJson(inst).dump();
    }
}

TEST(TreewidthDp, Examples) {
    // Star with three leaves, every leaf pair demanded.
    auto star = makeInstance(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}}, {{1, 2}, {1, 3}, {2, 3}});
    auto td = greedyDecomposition(star.graph);
    auto r = minMulticutByTreewidthDP(star, td);
    EXPECT_EQ(r.weight, Weight(2));
    EXPECT_EQ(r.cut, minMulticutByPartition(star).cut);

    MulticutInstance empty;
    empty.graph = grid(2, 3);
    auto e = minMulticutByTreewidthDP(empty, greedyDecomposition(empty.graph), nullptr, DpMode::CountOptima);
    EXPECT_EQ(e.weight, Weight(0));
    EXPECT_TRUE(e.cut.empty());
    EXPECT_EQ(e.optimaCount, std::optional<std::uint64_t>(1));

    MulticutInstance g3;
    g3.graph = grid(3, 3);
    g3.pattern.terminals = {0, 8};
    g3.pattern.demands = {{0, 8}};
    auto dp = minMulticutByTreewidthDP(g3, greedyDecomposition(g3.graph));
    auto po = minMulticutByPartition(g3);
    EXPECT_EQ(dp.weight, po.weight);
    EXPECT_EQ(dp.weight, Weight(2));
    EXPECT_EQ(dp.cut, po.cut);
}

TEST(TreewidthDp, AgreesWithOraclesAndCounts) {
    std::mt19937_64 rng(777);
    for (int it = 0; it < 200; ++it) {
        int n = 2 + static_cast<int>(rng() % 7);
        int m = static_cast<int>(rng() % 12);
        auto inst = randomInstance(rng, n, m, 2 + static_cast<int>(rng() % 3), 3);
        auto td = greedyDecomposition(inst.graph);
        auto dp = minMulticutByTreewidthDP(inst, td, nullptr, DpMode::CountOptima);
        auto bf = bruteForceMulticut(inst);
        ASSERT_EQ(dp.weight, bf.weight) << instanceToJson(inst).dump();
        ASSERT_EQ(dp.cut, bf.cut) << instanceToJson(inst).dump();
        ASSERT_EQ(*dp.optimaCount, bf.count) << instanceToJson(inst).dump();
        ASSERT_TRUE(isMulticut(inst, dp.cut));
        ASSERT_EQ(cutWeight(inst.graph, dp.cut), dp.weight);
    }
}

TEST(TreewidthDp, RejectsBadDecompositionAndWidth) {
    MulticutInstance inst;
    inst.graph = grid(2, 2);
    TreeDecomposition bad;
    bad.bags = {{0, 1}, {2, 3}};
    bad.treeEdges = {{0, 1}};
    EXPECT_THROW(minMulticutByTreewidthDP(inst, bad), DecompositionError);
    MulticutInstance k6;
    k6.graph = complete(6);
    EXPECT_THROW(minMulticutByTreewidthDP(k6, greedyDecomposition(k6.graph), nullptr, DpMode::Optimize, 3),
                 CapExceeded);
}

TEST(TreewidthDp, CohesiveGroups) {
    // Path 0-1-2-3 with unit weights: groups {0,1} and {2,3}, kept apart and each connected.
    MulticutInstance inst;
    inst.graph = WeightedGraph(4);
    inst.graph.addEdge(0, 1, 1);
    inst.graph.addEdge(1, 2, 1);
    inst.graph.addEdge(2, 3, 1);
    GroupConstraint gc;
    gc.groups = {{0}, {3}};
    gc.forcedAssignments = {{1, 0}, {2, 1}};
    gc.forbiddenMerges = {{0, 1}};
    gc.cohesive = true;
    gc.exhaustive = true;
    auto r = minMulticutByTreewidthDP(inst, greedyDecomposition(inst.graph), &gc, DpMode::CountOptima);
    EXPECT_EQ(r.weight, Weight(1));
    EXPECT_EQ(r.cut, EdgeSet({1}));
    EXPECT_EQ(*r.optimaCount, 1u);
    // Forcing 1 into the far group makes cohesion impossible without crossing: weight from cutting 0-1 only.
    gc.forcedAssignments = {{1, 1}, {2, 1}};
    r = minMulticutByTreewidthDP(inst, greedyDecomposition(inst.graph), &gc);
    EXPECT_EQ(r.cut, EdgeSet({0}));
    // Group split by an absent edge is infeasible.
    MulticutInstance split;
    split.graph = WeightedGraph(3);
    split.graph.addEdge(0, 1, 1);
    GroupConstraint gs;
    gs.groups = {{0, 2}};
    gs.cohesive = true;
    auto s = minMulticutByTreewidthDP(split, greedyDecomposition(split.graph), &gs);
    EXPECT_FALSE(s.feasible);
    EXPECT_EQ(s.weight, INF);
}

TEST(Treewidth, ExactSmallGraphs) {
    WeightedGraph tree(5);
    tree.addEdge(0, 1, 1);
    tree.addEdge(1, 2, 1);
    tree.addEdge(1, 3, 1);
    tree.addEdge(3, 4, 1);
    EXPECT_EQ(exactTreewidth(tree, 10).width, 1);
    EXPECT_EQ(exactTreewidth(complete(4), 10).width, 3);
    WeightedGraph c5(5);
    for (int i = 0; i < 5; ++i) c5.addEdge(i, (i + 1) % 5, 1);
    EXPECT_EQ(exactTreewidth(c5, 10).width, 2);
    auto g5 = grid(5, 5);
    auto r = exactTreewidth(g5, 10);
    EXPECT_EQ(r.width, 5);
    ASSERT_TRUE(r.decomposition);
    EXPECT_NO_THROW(validateDecomposition(g5, *r.decomposition));
    EXPECT_TRUE(exactTreewidth(complete(7), 4).aboveCap);
}

TEST(Treewidth, GreedyIsValid) {
    WeightedGraph p5(5);
    for (int i = 0; i < 4; ++i) p5.addEdge(i, i + 1, 1);
    EXPECT_EQ(greedyDecomposition(p5).width(), 1);
    EXPECT_EQ(greedyDecomposition(complete(4)).width(), 3);
    std::mt19937_64 rng(5);
    for (int it = 0; it < 50; ++it) {
        auto inst = randomInstance(rng, 1 + static_cast<int>(rng() % 10), static_cast<int>(rng() % 20), 0, 1);
        auto td = greedyDecomposition(inst.graph);
        EXPECT_NO_THROW(validateDecomposition(inst.graph, td));
        auto ex = exactTreewidth(inst.graph, 12);
        EXPECT_LE(ex.width, td.width());
        EXPECT_NO_THROW(validateDecomposition(inst.graph, *ex.decomposition));
    }
}

TEST(DecompositionJson, RoundTrip) {
    auto g = grid(3, 3);
    auto td = greedyDecomposition(g);
    auto back = decompositionFromJson(decompositionToJson(td));
    EXPECT_EQ(back.bags, td.bags);
    EXPECT_EQ(back.treeEdges, td.treeEdges);
}

#include <gtest/gtest.h>

#include <random>

#include "mcwb/decomposition.hpp"
#include "mcwb/embedding.hpp"
#include "mcwb/lift.hpp"
#include "mcwb/oracles.hpp"
#include "test_support.hpp"

using namespace mcwb;
using namespace mcwb::testing;

namespace {

Weight optimum(const MulticutInstance& inst) {
    if (inst.graph.vertexCount <= 12) return minMulticutByPartition(inst).weight;
    return minMulticutByTreewidthDP(inst, greedyDecomposition(inst.graph), nullptr, DpMode::Optimize, 14, false)
        .weight;
}

PatternGraph edgePattern() {
    PatternGraph k2(2);
    k2.addEdge(0, 1);
    return k2;
}

}  // namespace

TEST(LiftDelete, Examples) {
    MulticutInstance base;
    base.graph = WeightedGraph(3);
    base.graph.addEdge(0, 1, 4);
    base.graph.addEdge(1, 2, 3);
    base.pattern.terminals = {0, 2};
    base.pattern.demands = {{0, 2}};
    PatternGraph h(3);
    h.addEdge(0, 1);
    auto r = liftDeleteVertex(base, h);
    ASSERT_TRUE(r.output);
    EXPECT_EQ(r.output->graph.vertexCount, 4);
    EXPECT_EQ(r.output->pattern.terminals.size(), 3u);
    EXPECT_EQ(optimum(*r.output), optimum(base));
    EXPECT_EQ(r.sizeRatio.first, r.sizeRatio.second + 1);

    MulticutInstance empty;
    empty.graph = WeightedGraph(2);
    empty.graph.addEdge(0, 1, 1);
    auto r2 = liftDeleteVertex(empty, PatternGraph(1));
    EXPECT_EQ(r2.output->graph.vertexCount, 3);
    EXPECT_EQ(r2.output->pattern.terminals, std::vector<int>({2}));

    EXPECT_THROW(liftDeleteVertex(base, PatternGraph(3)), ReductionMismatch);
}

TEST(LiftIdentify, Examples) {
    // Merged terminal w0 = vertex 0, other terminal x = vertex 1; H = path u0 - x - v0.
    MulticutInstance base;
    base.graph = WeightedGraph(2);
    base.graph.addEdge(0, 1, 5);
    base.pattern.terminals = {0, 1};
    base.pattern.demands = {{0, 1}};
    base.budget = Weight(4);
    PatternGraph h(3);
    h.addEdge(0, 1);
    h.addEdge(1, 2);
    auto r = liftIdentify(base, h);
    ASSERT_TRUE(r.output);
    EXPECT_EQ(optimum(*r.output), Weight(5));
    const long vPrime = 2, ePrime = 1;
    // One hub vertex plus one midpoint and two edges per host edge.
    EXPECT_EQ(r.sizeRatio.first, vPrime + ePrime + 1 + 3 * ePrime);

    base.budget = Weight(5);
    auto s = liftIdentify(base, h);
    EXPECT_FALSE(s.output);
    ASSERT_TRUE(s.shortcutYes);
    EXPECT_TRUE(*s.shortcutYes);

    EXPECT_THROW(liftIdentify(base, completeGraph(3)), ReductionMismatch);
}

TEST(LiftProjection, EmptyWitnessIsIdentity) {
    MulticutInstance base;
    base.graph = WeightedGraph(2);
    base.graph.addEdge(0, 1, 2);
    base.pattern.terminals = {0, 1};
    base.pattern.demands = {{0, 1}};
    auto r = liftProjection(base, edgePattern(), {});
    ASSERT_TRUE(r.output);
    EXPECT_EQ(instanceToJson(*r.output).dump(), instanceToJson(base).dump());
}

TEST(LiftProjection, TriangleToP4) {
    PatternGraph p4(4);
    p4.addEdge(0, 1);
    p4.addEdge(1, 2);
    p4.addEdge(2, 3);
    std::vector<ProjectionStep> w{ProjectionStep::identify(0, 3)};
    std::mt19937_64 rng(99);
    for (int it = 0; it < 20; ++it) {
        auto inst = randomHostFor(rng, completeGraph(3), 6, 9, 4);
        Weight opt = optimum(inst);
        for (std::uint64_t lam : {opt.value() - (opt.value() > 0), opt.value(), opt.value() + 1}) {
            inst.budget = Weight(lam);
            auto r = liftProjection(inst, p4, w);
            bool before = opt <= Weight(lam);
            if (r.shortcutYes) {
                EXPECT_TRUE(before);
                continue;
            }
            EXPECT_EQ(optimum(*r.output) <= Weight(lam), before);
        }
    }
}

TEST(LiftProjection, RandomPairsPreserveDecisions) {
    std::mt19937_64 rng(4242);
    for (int it = 0; it < 30; ++it) {
        auto h = randomPattern(rng, 2 + static_cast<int>(rng() % 4));
        auto w = randomWitness(rng, h, 3);
        auto hp = applyProjection(h, w);
        int n = std::max(hp.n, 2) + static_cast<int>(rng() % 4);
        auto inst = randomHostFor(rng, hp, n, static_cast<int>(rng() % 8), 5);
        Weight opt = optimum(inst);
        for (int delta = -1; delta <= 1; ++delta) {
            if (opt.value() == 0 && delta < 0) continue;
            Weight lam(opt.value() + delta);
            inst.budget = lam;
            auto r = liftProjection(inst, h, w);
            if (r.shortcutYes) {
                EXPECT_TRUE(opt <= lam);
                continue;
            }
            ASSERT_TRUE(r.output);
            EXPECT_TRUE(isomorphic(terminalPattern(*r.output), h));
            EXPECT_EQ(optimum(*r.output) <= lam, opt <= lam);
            EXPECT_EQ(r.output->budget, inst.budget);
        }
    }
}

TEST(LiftProjection, KeepsPlaneRotation) {
    // Plane triangle host with rotation; lift through identify and delete.
    MulticutInstance inst;
    inst.graph = WeightedGraph(3);
    inst.graph.addEdge(0, 1, 3);
    inst.graph.addEdge(1, 2, 2);
    inst.graph.addEdge(0, 2, 4);
    inst.rotation = std::vector<std::vector<int>>{{0, 2}, {1, 0}, {2, 1}};
    inst.pattern.terminals = {0, 1, 2};
    inst.pattern.demands = {{0, 1}, {1, 2}, {0, 2}};
    inst.budget = Weight(6);
    PatternGraph p4plus(5);
    p4plus.addEdge(0, 1);
    p4plus.addEdge(1, 2);
    p4plus.addEdge(2, 3);
    auto r = liftProjection(inst, p4plus, {ProjectionStep::remove(4), ProjectionStep::identify(0, 3)});
    ASSERT_TRUE(r.output);
    ASSERT_TRUE(r.output->rotation);
    auto rep = validatePlane(embeddingOf(*r.output));
    EXPECT_TRUE(rep.ok) << rep.message;
}

TEST(ExpandToUnweighted, Examples) {
    MulticutInstance single;
    single.graph = WeightedGraph(2);
    single.graph.addEdge(0, 1, 3);
    single.pattern.terminals = {0, 1};
    single.pattern.demands = {{0, 1}};
    auto e = expandToUnweighted(single);
    EXPECT_EQ(e.graph.edgeCount(), 6);
    EXPECT_EQ(optimum(e), Weight(3));

    MulticutInstance unit;
    unit.graph = WeightedGraph(3);
    unit.graph.addEdge(0, 1, 1);
    unit.graph.addEdge(1, 2, 1);
    auto u = expandToUnweighted(unit);
    EXPECT_EQ(u.graph.vertexCount, 3);
    EXPECT_EQ(u.graph.edgeCount(), 2);

    MulticutInstance tri;
    tri.graph = WeightedGraph(3);
    tri.graph.addEdge(0, 1, 1);
    tri.graph.addEdge(1, 2, 2);
    tri.graph.addEdge(0, 2, 3);
    tri.pattern.terminals = {0, 1};
    tri.pattern.demands = {{0, 1}};
    tri.rotation = std::vector<std::vector<int>>{{0, 2}, {1, 0}, {2, 1}};
    auto t = expandToUnweighted(tri);
    EXPECT_EQ(optimum(t), optimum(tri));
    EXPECT_TRUE(validatePlane(embeddingOf(t)).ok);

    single.graph.edges[0].w = INF;
    EXPECT_THROW(expandToUnweighted(single), InputError);
    single.graph.edges[0].w = Weight(1000);
    EXPECT_THROW(expandToUnweighted(single, 100), CapExceeded);
}

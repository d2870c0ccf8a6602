#include <gtest/gtest.h>

#include <random>
#include <set>

#include "mcwb/corpus.hpp"
#include "mcwb/oracles.hpp"
#include "mcwb/topology.hpp"

using namespace mcwb;

namespace {

bool hasComponent(const TopologyEnumeration& en, int v, std::vector<std::pair<int, int>> arcs) {
    std::sort(arcs.begin(), arcs.end());
    for (const auto& c : en.components) {
        auto a = c.arcs;
        std::sort(a.begin(), a.end());
        if (c.vertexCount == v && a == arcs) return true;
    }
    return false;
}

// Brute force: edge multisets over vertex pairs, canonicalised by every permutation.
int bruteCubicCount(int n) {
    std::vector<std::pair<int, int>> slots;
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) slots.emplace_back(a, b);
    const int m = 3 * n / 2;
    std::set<std::vector<std::pair<int, int>>> classes;
    std::vector<int> pick;
    std::function<void(int)> rec = [&](int from) {
        if (static_cast<int>(pick.size()) == m) {
            std::vector<int> deg(n, 0);
            WeightedGraph g(n);
            for (int i : pick) {
                deg[slots[i].first]++;
                deg[slots[i].second]++;
                g.addEdge(slots[i].first, slots[i].second, Weight(1));
            }
            for (int d : deg)
                if (d != 3) return;
            if (componentsOf(g, {}).blocks.size() != 1) return;
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            std::vector<std::pair<int, int>> best;
            do {
                std::vector<std::pair<int, int>> es;
                for (int i : pick) {
                    int a = perm[slots[i].first], b = perm[slots[i].second];
                    es.emplace_back(std::min(a, b), std::max(a, b));
                }
                std::sort(es.begin(), es.end());
                if (best.empty() || es < best) best = es;
            } while (std::next_permutation(perm.begin(), perm.end()));
            classes.insert(best);
            return;
        }
        for (int i = from; i < static_cast<int>(slots.size()); ++i) {
            pick.push_back(i);
            rec(i);
            pick.pop_back();
        }
    };
    rec(0);
    return static_cast<int>(classes.size());
}

MulticutInstance pathInstance(std::vector<Weight> w, int s, int t) {
    MulticutInstance inst;
    inst.graph = WeightedGraph(static_cast<int>(w.size()) + 1);
    std::vector<std::vector<int>> rot(w.size() + 1);
    for (size_t i = 0; i < w.size(); ++i) {
        int e = inst.graph.addEdge(static_cast<int>(i), static_cast<int>(i) + 1, w[i]);
        rot[i].push_back(e);
        rot[i + 1].push_back(e);
    }
    inst.rotation = rot;
    inst.pattern.terminals = {s, t};
    inst.pattern.demands = {{s, t}};
    inst.pattern.normalize();
    return inst;
}

MulticutInstance squareWithDiagonalDemands() {
    MulticutInstance inst;
    inst.graph = WeightedGraph(4);
    for (int i = 0; i < 4; ++i) inst.graph.addEdge(i, (i + 1) % 4, 1);
    inst.rotation = std::vector<std::vector<int>>{{0, 3}, {1, 0}, {2, 1}, {3, 2}};
    inst.pattern.terminals = {0, 1, 2, 3};
    inst.pattern.demands = {{0, 2}, {1, 3}};
    return inst;
}

SolverCaps noBypass() {
    SolverCaps c;
    c.allowBypass = false;
    return c;
}

}  // namespace

TEST(EnumerateTopologies, SmallCases) {
    auto t2 = enumerateTopologies(2);
    EXPECT_TRUE(hasComponent(t2, 1, {{0, 0}}));
    EXPECT_EQ(t2.topologies.size(), 1u);
    auto t3 = enumerateTopologies(3);
    EXPECT_TRUE(hasComponent(t3, 2, {{0, 1}, {0, 1}, {0, 1}}));
    for (const auto& top : t3.topologies) EXPECT_LE(t3.faces(top), 3);
    EXPECT_FALSE(t3.truncated);
    EXPECT_TRUE(enumerateTopologies(1).topologies.empty());
}

TEST(EnumerateTopologies, CountsMatchIndependentGenerator) {
    auto en = enumerateTopologies(4);
    for (int n : {2, 4}) {
        int count = 0;
        for (const auto& c : en.components) count += c.vertexCount == n;
        EXPECT_EQ(count, bruteCubicCount(n)) << "n=" << n;
    }
    // Components are cubic or the loop vertex.
    for (const auto& c : en.components) {
        std::vector<int> deg(c.vertexCount, 0);
        for (auto [a, b] : c.arcs) {
            ++deg[a];
            ++deg[b];
        }
        for (int d : deg) EXPECT_EQ(d, c.vertexCount == 1 ? 2 : 3);
    }
}

TEST(EnumerateTopologies, DeterministicAndCapped) {
    auto a = enumerateTopologies(5), b = enumerateTopologies(5);
    EXPECT_EQ(a.topologies, b.topologies);
    SolverCaps caps;
    caps.maxTopologies = 3;
    auto c = enumerateTopologies(5, caps);
    EXPECT_TRUE(c.truncated);
    EXPECT_EQ(c.topologies.size(), 3u);
    caps = {};
    caps.maxDualVertices = 2;
    EXPECT_TRUE(enumerateTopologies(5, caps).truncated);
}

TEST(SolveMulticutPlanar, PathOneDemand) {
    auto inst = pathInstance({5, 3, 7, 2, 9}, 1, 4);
    auto r = solveMulticutPlanar(inst, embeddingOf(inst), noBypass());
    EXPECT_EQ(r.weight, minMulticutByPartition(inst).weight);
    EXPECT_EQ(r.weight, Weight(2));
    EXPECT_TRUE(isMulticut(inst, r.cut));
    EXPECT_TRUE(r.certifiedOptimal);
    EXPECT_EQ(r.strategy, "generic");
}

TEST(SolveMulticutPlanar, SquareBothDiagonals) {
    auto inst = squareWithDiagonalDemands();
    auto r = solveMulticutPlanar(inst, embeddingOf(inst), noBypass());
    EXPECT_EQ(r.weight, minMulticutByPartition(inst).weight);
    EXPECT_TRUE(isMulticut(inst, r.cut));
}

TEST(SolveMulticutPlanar, EmptyDemands) {
    auto inst = pathInstance({1, 1}, 0, 2);
    inst.pattern.demands.clear();
    auto r = solveMulticutPlanar(inst, embeddingOf(inst));
    EXPECT_EQ(r.weight, Weight::zero());
    EXPECT_TRUE(r.cut.empty());
}

TEST(SolveMulticutPlanar, RejectsNonPlane) {
    MulticutInstance k5;
    k5.graph = WeightedGraph(5);
    std::vector<std::vector<int>> rot(5);
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) {
            int e = k5.graph.addEdge(a, b, 1);
            rot[a].push_back(e);
            rot[b].push_back(e);
        }
    k5.rotation = rot;
    k5.pattern.terminals = {0, 1, 2};
    k5.pattern.demands = {{0, 1}, {1, 2}, {0, 2}};
    EXPECT_THROW(solveMulticutPlanar(k5, embeddingOf(k5)), UnsupportedInput);
}

TEST(SolveMulticutPlanar, MatchesOracleOnRandomPlaneInstances) {
    std::mt19937_64 rng(99);
    for (int it = 0; it < 60; ++it) {
        PlaneInstanceSpec spec;
        spec.vertices = 3 + it % 8;
        spec.chords = it % 9;
        spec.terminals = 2 + it % 3;
        spec.deletions = it % 6 == 0 ? 2 : 0;
        auto inst = randomPlaneInstance(rng, spec);
        auto r = solveMulticutPlanar(inst, embeddingOf(inst), noBypass());
        EXPECT_EQ(r.weight, minMulticutByPartition(inst).weight) << "instance " << it;
        EXPECT_TRUE(isMulticut(inst, r.cut));
        EXPECT_EQ(r.weight, cutWeight(inst.graph, r.cut));
        EXPECT_EQ(r.cut, canonicalizeSolution(r.cut));
    }
}

TEST(SolveMulticutPlanar, BypassAndParallelAgree) {
    std::mt19937_64 rng(3);
    for (int it = 0; it < 20; ++it) {
        PlaneInstanceSpec spec;
        spec.vertices = 4 + it % 6;
        spec.chords = 2 + it % 5;
        spec.terminals = 2 + it % 3;
        auto inst = randomPlaneInstance(rng, spec);
        auto emb = embeddingOf(inst);
        auto serial = solveMulticutPlanar(inst, emb, noBypass());
        auto caps = noBypass();
        caps.jobs = 4;
        auto parallel = solveMulticutPlanar(inst, emb, caps);
        EXPECT_EQ(serial.cut, parallel.cut);
        auto bypass = solveMulticutPlanar(inst, emb);
        EXPECT_EQ(bypass.weight, serial.weight);
        if (detail::bicliqueSides(inst)) EXPECT_EQ(bypass.strategy, "extended-biclique");
    }
}

TEST(SolveMulticutPlanar, TightCapIsReported) {
    auto inst = squareWithDiagonalDemands();
    auto caps = noBypass();
    caps.maxTopologies = 1;
    auto r = solveMulticutPlanar(inst, embeddingOf(inst), caps);
    EXPECT_TRUE(r.statistics.truncated);
    EXPECT_FALSE(r.certifiedOptimal);
    EXPECT_TRUE(isMulticut(inst, r.cut));
}

TEST(SolveWithFaceCover, AgreesWithGenericWhenTerminalsShareAFace) {
    std::mt19937_64 rng(8);
    int checked = 0;
    for (int it = 0; it < 80 && checked < 15; ++it) {
        PlaneInstanceSpec spec;
        spec.vertices = 4 + it % 6;
        spec.chords = it % 4;
        spec.terminals = 2 + it % 3;
        auto inst = randomPlaneInstance(rng, spec);
        auto emb = embeddingOf(inst);
        auto a = analyzeInstance(inst, emb);
        if (a.faceCover != 1 || componentsOf(inst.graph, {}).blocks.size() != 1) continue;
        ++checked;
        auto generic = solveMulticutPlanar(inst, emb, noBypass());
        auto fc = solveWithFaceCover(inst, emb, a.coverFaces, noBypass());
        EXPECT_EQ(fc.weight, generic.weight);
        EXPECT_EQ(fc.strategy, "face-cover");
        EXPECT_LT(fc.statistics.candidatePairs, generic.statistics.candidatePairs);
        std::vector<int> all(traceFaces(emb).faces.size());
        std::iota(all.begin(), all.end(), 0);
        EXPECT_EQ(solveWithFaceCover(inst, emb, all, noBypass()).weight, generic.weight);
    }
    EXPECT_GE(checked, 5);
}

TEST(SolveWithFaceCover, RefusesNonCover) {
    auto inst = squareWithDiagonalDemands();
    inst.graph.addEdge(0, 2, 1);
    inst.rotation = std::vector<std::vector<int>>{{0, 4, 3}, {1, 0}, {2, 4, 1}, {3, 2}};
    auto emb = embeddingOf(inst);
    auto ft = traceFaces(emb);
    // A triangle face misses one of 1 and 3.
    int tri = -1;
    for (const auto& f : ft.faces)
        if (f.vertices.size() == 3) tri = f.id;
    ASSERT_GE(tri, 0);
    EXPECT_THROW(solveWithFaceCover(inst, emb, {tri}), InputError);
}

TEST(AnalyzeInstance, Examples) {
    auto sq = squareWithDiagonalDemands();
    sq.pattern.demands = {{0, 1}, {0, 3}, {1, 2}, {2, 3}};  // C4 = K2,2
    auto a = analyzeInstance(sq, embeddingOf(sq));
    EXPECT_EQ(a.mu, 0);
    EXPECT_TRUE(a.bicliqueBypass);
    EXPECT_EQ(a.faceCover, 1);
    EXPECT_EQ(a.betaFromDistance, 3);
    EXPECT_EQ(a.betaFromRoot, 4);
    EXPECT_EQ(a.suggestedBeta, 3);
    auto tri = squareWithDiagonalDemands();
    tri.pattern.terminals = {0, 1, 2};
    tri.pattern.demands = {{0, 1}, {1, 2}, {0, 2}};
    auto b = analyzeInstance(tri, embeddingOf(tri));
    EXPECT_EQ(b.mu, 1);
    EXPECT_FALSE(b.bicliqueBypass);
}

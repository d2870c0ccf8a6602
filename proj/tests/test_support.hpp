#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "mcwb/corpus.hpp"
#include "mcwb/graph.hpp"

namespace mcwb::testing {

// Independent oracle: exhaustive scan of all edge subsets (m <= 20).
struct BruteForce {
    Weight weight = INF;
    EdgeSet cut;
    std::uint64_t count = 0;
};

inline BruteForce bruteForceMulticut(const MulticutInstance& inst) {
    const int m = inst.graph.edgeCount();
    BruteForce best;
    bool found = false;
    bool bestTight = false;
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << m); ++s) {
        EdgeSet cut;
        for (int e = 0; e < m; ++e)
            if (s >> e & 1) cut.push_back(e);
        if (!isMulticut(inst, cut)) continue;
        Weight w = cutWeight(inst.graph, cut);
        // Tie-break only among cuts whose edges all join distinct components.
        auto comp = componentsOf(inst.graph, cut);
        bool tight = true;
        for (int e : cut)
            if (comp.label[inst.graph.edges[e].a] == comp.label[inst.graph.edges[e].b]) tight = false;
        if (!found || w < best.weight) {
            best = {w, tight ? cut : EdgeSet{}, 1};
            bestTight = tight;
            found = true;
        } else if (w == best.weight) {
            ++best.count;
            if (tight && (!bestTight || cut < best.cut)) {
                best.cut = cut;
                bestTight = true;
            }
        }
    }
    return best;
}

inline MulticutInstance randomInstance(std::mt19937_64& rng, int n, int m, int t, int maxW) {
    MulticutInstance inst;
    inst.graph = WeightedGraph(n);
    std::uniform_int_distribution<int> vd(0, n - 1), wd(0, maxW);
    for (int i = 0; i < m; ++i) {
        int a = vd(rng), b = vd(rng);
        inst.graph.addEdge(a, b, wd(rng));
    }
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < t && i < n; ++i) inst.pattern.terminals.push_back(perm[i]);
    for (std::size_t i = 0; i < inst.pattern.terminals.size(); ++i)
        for (std::size_t k = i + 1; k < inst.pattern.terminals.size(); ++k)
            if (rng() % 2) inst.pattern.demands.emplace_back(inst.pattern.terminals[i], inst.pattern.terminals[k]);
    inst.pattern.normalize();
    return inst;
}

}  // namespace mcwb::testing

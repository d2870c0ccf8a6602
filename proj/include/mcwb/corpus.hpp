#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "mcwb/embedding.hpp"
#include "mcwb/graph.hpp"
#include "mcwb/pattern_graph.hpp"

namespace mcwb {

struct PlaneInstanceSpec {
    int vertices = 8;
    int chords = 4;      // edges added inside faces after the spanning tree
    int deletions = 0;   // random edges removed afterwards (may disconnect)
    int terminals = 3;
    int maxWeight = 9;
};

namespace detail {

inline int tailOf(const WeightedGraph& g, const Dart& d) {
    const auto& e = g.edges[d.edge];
    return d.end == 0 ? e.a : e.b;
}

// Index of the rotation slot holding dart d at its tail.
inline int slotOf(const RotationEmbedding& emb, const Dart& d) {
    auto idx = indexRotation(emb);
    return idx.posOfEnd[d.id()];
}

}  // namespace detail

// Random connected plane graph grown as a tree, then chords drawn inside faces.
inline MulticutInstance randomPlaneInstance(std::mt19937_64& rng, const PlaneInstanceSpec& spec) {
    RotationEmbedding emb;
    emb.graph = WeightedGraph(std::max(1, spec.vertices));
    emb.rotation.assign(emb.graph.vertexCount, {});
    std::uniform_int_distribution<int> wd(1, std::max(1, spec.maxWeight));
    for (int v = 1; v < emb.graph.vertexCount; ++v) {
        int u = static_cast<int>(rng() % v);
        int e = emb.graph.addEdge(u, v, Weight(wd(rng)));
        auto& ru = emb.rotation[u];
        ru.insert(ru.begin() + static_cast<long>(rng() % (ru.size() + 1)), e);
        emb.rotation[v].push_back(e);
    }
    for (int c = 0; c < spec.chords && emb.graph.edgeCount() > 0; ++c) {
        auto ft = traceFaces(emb);
        std::vector<int> usable;
        for (const auto& f : ft.faces)
            if (f.vertices.size() >= 2) usable.push_back(f.id);
        if (usable.empty()) break;
        const auto& face = ft.faces[usable[rng() % usable.size()]];
        const int len = static_cast<int>(face.walk.size());
        int i = static_cast<int>(rng() % len), j = static_cast<int>(rng() % len);
        int u = detail::tailOf(emb.graph, face.walk[i]), v = detail::tailOf(emb.graph, face.walk[j]);
        if (u == v) continue;
        // Each new end goes right before the leaving dart of its corner.
        int su = detail::slotOf(emb, face.walk[i]);
        int sv = detail::slotOf(emb, face.walk[j]);
        int e = emb.graph.addEdge(u, v, Weight(wd(rng)));
        emb.rotation[u].insert(emb.rotation[u].begin() + su, e);
        emb.rotation[v].insert(emb.rotation[v].begin() + sv, e);
    }
    for (int d = 0; d < spec.deletions && emb.graph.edgeCount() > 0; ++d) {
        int victim = static_cast<int>(rng() % emb.graph.edgeCount());
        WeightedGraph g(emb.graph.vertexCount);
        std::vector<int> newId(emb.graph.edgeCount(), -1);
        for (int e = 0; e < emb.graph.edgeCount(); ++e)
            if (e != victim) newId[e] = g.addEdge(emb.graph.edges[e].a, emb.graph.edges[e].b, emb.graph.edges[e].w);
        for (auto& rot : emb.rotation) {
            std::vector<int> nr;
            for (int e : rot)
                if (newId[e] >= 0) nr.push_back(newId[e]);
            rot = nr;
        }
        emb.graph = g;
    }
    MulticutInstance inst;
    inst.graph = emb.graph;
    inst.rotation = emb.rotation;
    std::vector<int> perm(emb.graph.vertexCount);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    int t = std::min(spec.terminals, emb.graph.vertexCount);
    inst.pattern.terminals.assign(perm.begin(), perm.begin() + t);
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < t; ++a)
        for (int b = a + 1; b < t; ++b) pairs.emplace_back(inst.pattern.terminals[a], inst.pattern.terminals[b]);
    if (!pairs.empty()) {
        std::uint64_t mask = 0;
        while (mask == 0) mask = rng() & ((std::uint64_t{1} << pairs.size()) - 1);
        for (size_t i = 0; i < pairs.size(); ++i)
            if (mask >> i & 1) inst.pattern.demands.push_back(pairs[i]);
    }
    inst.pattern.normalize();
    return inst;
}

// Some genus-0 rotation system for g, found by exhaustive search over cyclic orders.
inline std::optional<std::vector<std::vector<int>>> findPlaneRotation(const WeightedGraph& g, long budget = 2000000) {
    RotationEmbedding emb;
    emb.graph = g;
    emb.rotation.assign(g.vertexCount, {});
    for (int e = 0; e < g.edgeCount(); ++e) {
        emb.rotation[g.edges[e].a].push_back(e);
        emb.rotation[g.edges[e].b].push_back(e);
    }
    for (auto& r : emb.rotation) std::sort(r.begin(), r.end());
    std::vector<std::vector<int>> base = emb.rotation;
    // Enumerate permutations with the first entry fixed at every vertex.
    std::function<bool(int)> rec = [&](int v) -> bool {
        if (--budget < 0) return false;
        if (v == g.vertexCount) return traceFaces(emb).genus == 0;
        auto& r = emb.rotation[v];
        if (r.size() <= 2) return rec(v + 1);
        r = base[v];
        do {
            if (rec(v + 1)) return true;
        } while (std::next_permutation(r.begin() + 1, r.end()));
        return false;
    };
    if (rec(0)) return emb.rotation;
    return std::nullopt;
}

// All connected simple graphs on n labelled vertices, one per isomorphism class (n <= 6).
inline std::vector<WeightedGraph> connectedGraphsUpToIso(int n) {
    if (n < 1 || n > 6) throw InputError("graph enumeration supports 1..6 vertices");
    std::vector<std::pair<int, int>> slots;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) slots.emplace_back(a, b);
    std::set<std::string> seen;
    std::vector<WeightedGraph> out;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
        PatternGraph h(n);
        WeightedGraph g(n);
        for (size_t i = 0; i < slots.size(); ++i)
            if (mask >> i & 1) {
                h.addEdge(slots[i].first, slots[i].second);
                g.addEdge(slots[i].first, slots[i].second, Weight(1));
            }
        if (componentsOf(g, {}).blocks.size() != 1) continue;
        if (seen.insert(canonicalForm(h)).second) out.push_back(g);
    }
    return out;
}

// Random valid projection steps on h (names are source ids).
inline std::vector<ProjectionStep> randomWitness(std::mt19937_64& rng, const PatternGraph& h, int maxSteps) {
    std::vector<ProjectionStep> steps;
    int count = static_cast<int>(rng() % (maxSteps + 1));
    for (int i = 0; i < count; ++i) {
        std::vector<int> alive;
        PatternGraph cur = applyProjection(h, steps, &alive);
        if (cur.n <= 1) break;
        std::vector<ProjectionStep> options;
        for (int v : alive) options.push_back(ProjectionStep::remove(v));
        for (int a = 0; a < cur.n; ++a)
            for (int b = a + 1; b < cur.n; ++b)
                if (!cur.has(a, b)) options.push_back(ProjectionStep::identify(alive[a], alive[b]));
        steps.push_back(options[rng() % options.size()]);
    }
    return steps;
}

inline PatternGraph randomPattern(std::mt19937_64& rng, int n) {
    PatternGraph h(n);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (rng() % 2) h.addEdge(a, b);
    return h;
}

// Instance on n vertices whose terminals 0..|p|-1 realise pattern p.
inline MulticutInstance randomHostFor(std::mt19937_64& rng, const PatternGraph& p, int n, int m, int maxW) {
    MulticutInstance inst;
    inst.graph = WeightedGraph(n);
    std::uniform_int_distribution<int> vd(0, n - 1), wd(1, maxW);
    for (int i = 0; i < m; ++i) inst.graph.addEdge(vd(rng), vd(rng), wd(rng));
    for (int v = 0; v < p.n; ++v) inst.pattern.terminals.push_back(v);
    for (auto [a, b] : p.edges()) inst.pattern.demands.emplace_back(a, b);
    inst.pattern.normalize();
    return inst;
}

}  // namespace mcwb

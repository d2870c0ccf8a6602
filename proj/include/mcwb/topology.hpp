#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mcwb/decomposition.hpp"
#include "mcwb/dual.hpp"
#include "mcwb/embedding.hpp"
#include "mcwb/graph.hpp"
#include "mcwb/io.hpp"
#include "mcwb/lift.hpp"
#include "mcwb/trichotomy.hpp"

namespace mcwb {

// Zero means "derive from the instance".
struct SolverCaps {
    int maxDualVertices = 0;   // default 2t
    int maxCrossingLen = 0;    // default 2|E(K)|
    long maxTopologies = 200000;
    int treewidthBudget = 0;   // default: unlimited (generic), suggested budget (face cover)
    bool allowBypass = true;   // biclique patterns go to max-flow
    int jobs = 1;

    void validate() const {
        if (maxDualVertices < 0 || maxCrossingLen < 0 || maxTopologies <= 0 || treewidthBudget < 0 || jobs <= 0)
            throw InputError("solver caps must be positive");
    }
    Json toJson() const {
        return Json{{"maxDualVertices", maxDualVertices}, {"maxCrossingLen", maxCrossingLen},
                    {"maxTopologies", maxTopologies},     {"treewidthBudget", treewidthBudget},
                    {"allowBypass", allowBypass},         {"jobs", jobs}};
    }
    static SolverCaps fromJson(const Json& j) {
        SolverCaps c;
        c.maxDualVertices = j.value("maxDualVertices", c.maxDualVertices);
        c.maxCrossingLen = j.value("maxCrossingLen", c.maxCrossingLen);
        c.maxTopologies = j.value("maxTopologies", c.maxTopologies);
        c.treewidthBudget = j.value("treewidthBudget", c.treewidthBudget);
        c.allowBypass = j.value("allowBypass", c.allowBypass);
        c.jobs = j.value("jobs", c.jobs);
        c.validate();
        return c;
    }
};

// ---------------------------------------------------------------------------
// Topology enumeration

struct TopologyEnumeration {
    std::vector<DualTopology> components;      // connected, one per isomorphism class
    std::vector<int> componentFaces;           // E - V + 2 per component
    std::vector<std::vector<int>> topologies;  // sorted multisets of component ids
    bool truncated = false;

    DualTopology assemble(const std::vector<int>& ids) const {
        DualTopology out;
        for (int id : ids) {
            const auto& c = components[id];
            for (auto [a, b] : c.arcs) out.arcs.emplace_back(a + out.vertexCount, b + out.vertexCount);
            out.vertexCount += c.vertexCount;
        }
        return out;
    }
    int faces(const std::vector<int>& ids) const {
        int f = 1;
        for (int id : ids) f += componentFaces[id] - 1;
        return f;
    }
};

namespace detail {

using Multiplicity = std::vector<std::vector<int>>;  // [i][i] counts loops

inline std::vector<long> refinedColours(const Multiplicity& m) {
    const int n = static_cast<int>(m.size());
    std::vector<long> col(n);
    for (int v = 0; v < n; ++v) {
        std::vector<int> mults;
        for (int u = 0; u < n; ++u)
            if (u != v && m[v][u]) mults.push_back(m[v][u]);
        std::sort(mults.begin(), mults.end());
        long h = m[v][v] * 131 + 7;
        for (int x : mults) h = h * 31 + x;
        col[v] = h;
    }
    for (int round = 0; round < 3; ++round) {
        std::vector<long> next(n);
        for (int v = 0; v < n; ++v) {
            std::vector<std::pair<int, long>> nb;
            for (int u = 0; u < n; ++u)
                if (u != v && m[v][u]) nb.emplace_back(m[v][u], col[u]);
            std::sort(nb.begin(), nb.end());
            long h = col[v] * 1000003;
            for (auto [k, c] : nb) h = (h ^ (k * 7919 + c)) * 1099511628211L;
            next[v] = h;
        }
        col = next;
    }
    return col;
}

inline bool isomorphicMultigraphs(const Multiplicity& a, const std::vector<long>& ca, const Multiplicity& b,
                                  const std::vector<long>& cb) {
    const int n = static_cast<int>(a.size());
    std::vector<int> map(n, -1);
    std::vector<char> used(n, 0);
    std::function<bool(int)> rec = [&](int v) -> bool {
        if (v == n) return true;
        for (int w = 0; w < n; ++w) {
            if (used[w] || ca[v] != cb[w] || a[v][v] != b[w][w]) continue;
            bool ok = true;
            for (int u = 0; u < v && ok; ++u) ok = a[v][u] == b[w][map[u]];
            if (!ok) continue;
            map[v] = w;
            used[w] = 1;
            if (rec(v + 1)) return true;
            used[w] = 0;
        }
        map[v] = -1;
        return false;
    };
    return rec(0);
}

inline bool connectedMultigraph(const Multiplicity& m) {
    const int n = static_cast<int>(m.size());
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u = 0; u < n; ++u)
            if (m[v][u] && !seen[u]) {
                seen[u] = 1;
                stack.push_back(u);
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

inline DualTopology topologyOf(const Multiplicity& m) {
    DualTopology t;
    t.vertexCount = static_cast<int>(m.size());
    for (int i = 0; i < t.vertexCount; ++i)
        for (int j = i; j < t.vertexCount; ++j)
            for (int k = 0; k < m[i][j]; ++k) t.arcs.emplace_back(i, j);
    return t;
}

// Connected cubic multigraphs on n vertices (loops count twice), one per isomorphism class.
inline std::vector<DualTopology> generateConnectedCubic(int n) {
    std::vector<DualTopology> out;
    if (n <= 0 || n % 2) return out;
    Multiplicity m(n, std::vector<int>(n, 0));
    std::vector<int> rem(n, 3);
    std::map<std::vector<long>, std::vector<std::pair<Multiplicity, std::vector<long>>>> buckets;
    std::function<void(int, int)> rec = [&](int i, int j) {
        if (i == n) {
            if (!connectedMultigraph(m)) return;
            auto col = refinedColours(m);
            auto key = col;
            std::sort(key.begin(), key.end());
            auto& bucket = buckets[key];
            for (const auto& [rep, rc] : bucket)
                if (isomorphicMultigraphs(m, col, rep, rc)) return;
            bucket.emplace_back(m, col);
            out.push_back(topologyOf(m));
            return;
        }
        if (j == n) {
            if (rem[i] == 0) rec(i + 1, i + 1);
            return;
        }
        if (j == i) {
            for (int loops = std::min(1, rem[i] / 2); loops >= 0; --loops) {
                m[i][i] = loops;
                rem[i] -= 2 * loops;
                rec(i, j + 1);
                rem[i] += 2 * loops;
            }
            m[i][i] = 0;
            return;
        }
        for (int k = std::min(rem[i], rem[j]); k >= 0; --k) {
            m[i][j] = m[j][i] = k;
            rem[i] -= k;
            rem[j] -= k;
            rec(i, j + 1);
            rem[i] += k;
            rem[j] += k;
        }
        m[i][j] = m[j][i] = 0;
    };
    rec(0, 0);
    return out;
}

inline const std::vector<DualTopology>& connectedCubic(int n) {
    static std::mutex lock;
    static std::map<int, std::vector<DualTopology>> cache;
    std::lock_guard<std::mutex> guard(lock);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, generateConnectedCubic(n)).first;
    return it->second;
}

}  // namespace detail

// Candidate dual topologies for t terminals: every component is cubic or a single vertex with a loop,
// the whole graph has at most t faces and at most caps.maxDualVertices vertices.
inline TopologyEnumeration enumerateTopologies(int t, const SolverCaps& caps = {}) {
    caps.validate();
    if (t < 0) throw InputError("terminal count must be non-negative");
    TopologyEnumeration en;
    if (t < 2) return en;
    const int vcap = caps.maxDualVertices > 0 ? caps.maxDualVertices : 2 * t;
    // A connected cubic component with f faces has 2f - 4 vertices.
    const int vneed = 2 * t - 4;
    en.components.push_back(DualTopology{1, {{0, 0}}});
    en.componentFaces.push_back(2);
    for (int n = 2; n <= vneed; n += 2) {
        if (n > vcap) {
            en.truncated = true;
            break;
        }
        for (const auto& c : detail::connectedCubic(n)) {
            en.componentFaces.push_back(static_cast<int>(c.arcs.size()) - n + 2);
            en.components.push_back(c);
        }
    }
    // Multisets in order of total vertex count, then lexicographic.
    const int nc = static_cast<int>(en.components.size());
    std::vector<std::vector<int>> found;
    std::vector<int> cur;
    std::function<void(int, int, int)> rec = [&](int from, int faceBudget, int verts) {
        if (!cur.empty()) found.push_back(cur);
        for (int id = from; id < nc; ++id) {
            int df = en.componentFaces[id] - 1;
            int dv = en.components[id].vertexCount;
            if (df > faceBudget) continue;
            if (verts + dv > vcap) {
                en.truncated = true;
                continue;
            }
            cur.push_back(id);
            rec(id, faceBudget - df, verts + dv);
            cur.pop_back();
        }
    };
    rec(0, t - 1, 0);
    auto vertsOf = [&](const std::vector<int>& ids) {
        int v = 0;
        for (int id : ids) v += en.components[id].vertexCount;
        return v;
    };
    std::stable_sort(found.begin(), found.end(), [&](const auto& a, const auto& b) {
        int va = vertsOf(a), vb = vertsOf(b);
        return va != vb ? va < vb : a < b;
    });
    if (static_cast<long>(found.size()) > caps.maxTopologies) {
        found.resize(caps.maxTopologies);
        en.truncated = true;
    }
    en.topologies = std::move(found);
    return en;
}

// ---------------------------------------------------------------------------
// Solver

struct SolveStatistics {
    long topologies = 0;
    long componentsEvaluated = 0;
    long rotations = 0;
    long twists = 0;
    long vcspCalls = 0;
    long candidatePairs = 0;  // (C, X) pairs enumerated
    long candidatesVerified = 0;
    long parcels = 0;
    long kEdges = 0;
    int crossingCap = 0;
    int treewidthBudget = -1;  // -1: unlimited
    bool truncated = false;
    bool capBinding = false;
    bool pinningUsed = false;
    double seconds = 0;

    void add(const SolveStatistics& o) {
        topologies += o.topologies;
        componentsEvaluated += o.componentsEvaluated;
        rotations += o.rotations;
        twists += o.twists;
        vcspCalls += o.vcspCalls;
        candidatePairs += o.candidatePairs;
        candidatesVerified += o.candidatesVerified;
        parcels += o.parcels;
        kEdges += o.kEdges;
        crossingCap = std::max(crossingCap, o.crossingCap);
        treewidthBudget = std::max(treewidthBudget, o.treewidthBudget);
        truncated = truncated || o.truncated;
        capBinding = capBinding || o.capBinding;
        pinningUsed = pinningUsed || o.pinningUsed;
    }
    Json toJson() const {
        return Json{{"topologies", topologies},
                    {"componentsEvaluated", componentsEvaluated},
                    {"rotations", rotations},
                    {"twists", twists},
                    {"vcspCalls", vcspCalls},
                    {"candidatePairs", candidatePairs},
                    {"candidatesVerified", candidatesVerified},
                    {"parcels", parcels},
                    {"kEdges", kEdges},
                    {"crossingCap", crossingCap},
                    {"treewidthBudget", treewidthBudget},
                    {"truncated", truncated},
                    {"capBinding", capBinding},
                    {"pinningUsed", pinningUsed},
                    {"seconds", seconds}};
    }
};

struct SolveResult {
    Weight weight = Weight::zero();
    EdgeSet cut;
    bool certifiedOptimal = true;
    std::string strategy = "generic";
    SolveStatistics statistics;

    Json toJson() const {
        return Json{{"weight", weightToJson(weight)},
                    {"cut", cut},
                    {"certifiedOptimal", certifiedOptimal},
                    {"strategy", strategy},
                    {"statistics", statistics.toJson()}};
    }
};

namespace detail {

inline void parallelFor(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < std::min(jobs, n); ++w)
        workers.push_back(std::async(std::launch::async, [&] {
            for (int i = next++; i < n; i = next++) fn(i);
        }));
    for (auto& f : workers) f.get();
}

// Cheapest curves between face representatives, split by crossing parity against every terminal path of K.
// Parity bit i-1 counts crossings with the K-path from terminal 0 to terminal i.
struct ParityTrails {
    const Setup* setup = nullptr;
    int faces = 0;
    int masks = 1;
    int cap = 0;
    std::vector<int> rep;
    std::vector<std::uint32_t> kMask;
    std::vector<std::vector<int>> predState;
    std::vector<std::vector<int>> predAdj;
    std::vector<Weight> best;
    std::vector<int> bestState;
    bool capBinding = false;

    int state(int p, std::uint32_t mask, int c) const { return (p * masks + static_cast<int>(mask)) * (cap + 1) + c; }
    size_t cell(int f, int g, std::uint32_t b) const { return (static_cast<size_t>(f) * faces + g) * masks + b; }
    Weight cost(int f, int g, std::uint32_t b) const { return best[cell(f, g, b)]; }

    Trail trail(int f, int g, std::uint32_t b) const {
        Trail tr;
        tr.weight = cost(f, g, b);
        int st = bestState[cell(f, g, b)];
        const int layer = masks * (cap + 1);
        tr.parcels.push_back(st / layer);
        while (predState[f][st] >= 0) {
            tr.via.push_back(predAdj[f][st]);
            st = predState[f][st];
            tr.parcels.push_back(st / layer);
        }
        std::reverse(tr.parcels.begin(), tr.parcels.end());
        std::reverse(tr.via.begin(), tr.via.end());
        return tr;
    }
};

inline std::vector<std::uint32_t> terminalPathMasks(const Setup& s, const std::vector<int>& terms) {
    const auto& k = s.k;
    const int nk = k.nodeCount();
    std::vector<std::vector<std::pair<int, int>>> adj(nk);
    for (int e = 0; e < static_cast<int>(k.edges.size()); ++e) {
        adj[k.edges[e].from].emplace_back(k.edges[e].to, e);
        adj[k.edges[e].to].emplace_back(k.edges[e].from, e);
    }
    std::vector<int> parentEdge(nk, -1), parent(nk, -1), order{k.nodeOfVertex(terms[0])};
    std::vector<char> seen(nk, 0);
    seen[order[0]] = 1;
    for (size_t i = 0; i < order.size(); ++i)
        for (auto [u, e] : adj[order[i]])
            if (!seen[u]) {
                seen[u] = 1;
                parent[u] = order[i];
                parentEdge[u] = e;
                order.push_back(u);
            }
    std::vector<std::uint32_t> mask(k.edges.size(), 0);
    for (size_t i = 1; i < terms.size(); ++i)
        for (int x = k.nodeOfVertex(terms[i]); parent[x] >= 0; x = parent[x]) mask[parentEdge[x]] |= 1u << (i - 1);
    return mask;
}

inline ParityTrails buildParityTrails(const Setup& s, const std::vector<int>& terms, int cap) {
    ParityTrails pt;
    pt.setup = &s;
    pt.faces = static_cast<int>(s.faces.faces.size());
    pt.masks = 1 << (terms.size() - 1);
    pt.cap = cap;
    pt.kMask = terminalPathMasks(s, terms);
    const auto& pg = s.parcels;
    const int P = pg.parcelCount;
    pt.rep.assign(pt.faces, -1);
    for (int p = P - 1; p >= 0; --p) pt.rep[pg.faceOf[p]] = p;
    const int S = P * pt.masks * (cap + 1);
    pt.predState.assign(pt.faces, std::vector<int>(S, -1));
    pt.predAdj.assign(pt.faces, std::vector<int>(S, -1));
    pt.best.assign(static_cast<size_t>(pt.faces) * pt.faces * pt.masks, INF);
    pt.bestState.assign(pt.best.size(), -1);
    using Item = std::pair<Weight, int>;
    for (int f = 0; f < pt.faces; ++f) {
        std::vector<Weight> dist(S, INF);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        int src = pt.state(pt.rep[f], 0, 0);
        dist[src] = Weight::zero();
        pq.emplace(Weight::zero(), src);
        while (!pq.empty()) {
            auto [d, st] = pq.top();
            pq.pop();
            if (d != dist[st]) continue;
            int c = st % (cap + 1);
            int mask = (st / (cap + 1)) % pt.masks;
            int p = st / (cap + 1) / pt.masks;
            for (int ai : pg.incident[p]) {
                const auto& a = pg.adjacencies[ai];
                int q = a.a == p ? a.b : a.a;
                if (q == p) continue;
                int nst;
                Weight nd = d;
                if (a.kEdge) {
                    if (c == cap) continue;
                    nst = pt.state(q, static_cast<std::uint32_t>(mask) ^ pt.kMask[a.edge], c + 1);
                } else {
                    Weight w = s.embedding.graph.edges[a.edge].w;
                    if (w.isInf()) continue;
                    nd = d + w;
                    nst = pt.state(q, static_cast<std::uint32_t>(mask), c);
                }
                if (nd < dist[nst] || (nd == dist[nst] && st < pt.predState[f][nst] && nst != src)) {
                    bool improve = nd < dist[nst];
                    dist[nst] = nd;
                    pt.predState[f][nst] = st;
                    pt.predAdj[f][nst] = ai;
                    if (improve) pq.emplace(nd, nst);
                }
            }
        }
        for (int g = 0; g < pt.faces; ++g)
            for (int b = 0; b < pt.masks; ++b)
                for (int c = 0; c <= cap; ++c) {
                    int st = pt.state(pt.rep[g], static_cast<std::uint32_t>(b), c);
                    auto cl = pt.cell(f, g, static_cast<std::uint32_t>(b));
                    if (dist[st] < pt.best[cl]) {
                        pt.best[cl] = dist[st];
                        pt.bestState[cl] = st;
                    }
                }
        // Same search without the crossing cap.
        const int U = P * pt.masks;
        std::vector<Weight> free(U, INF);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> fq;
        free[pt.rep[f] * pt.masks] = Weight::zero();
        fq.emplace(Weight::zero(), pt.rep[f] * pt.masks);
        while (!fq.empty()) {
            auto [d, st] = fq.top();
            fq.pop();
            if (d != free[st]) continue;
            int p = st / pt.masks, mask = st % pt.masks;
            for (int ai : pg.incident[p]) {
                const auto& a = pg.adjacencies[ai];
                int q = a.a == p ? a.b : a.a;
                if (q == p) continue;
                Weight nd = d;
                int nm = mask;
                if (a.kEdge) nm ^= static_cast<int>(pt.kMask[a.edge]);
                else {
                    Weight w = s.embedding.graph.edges[a.edge].w;
                    if (w.isInf()) continue;
                    nd = d + w;
                }
                int nst = q * pt.masks + nm;
                if (nd < free[nst]) {
                    free[nst] = nd;
                    fq.emplace(nd, nst);
                }
            }
        }
        for (int g = 0; g < pt.faces; ++g)
            for (int b = 0; b < pt.masks; ++b)
                if (free[pt.rep[g] * pt.masks + b] != pt.cost(f, g, static_cast<std::uint32_t>(b)))
                    pt.capBinding = true;
    }
    return pt;
}

struct ComponentOption {
    Weight cost = INF;
    std::vector<std::uint32_t> twist;  // parity label per arc
    std::vector<int> face;             // G-face per vertex
    std::vector<std::uint32_t> shift;  // parity potential per vertex
};

struct ComponentPlan {
    std::map<std::uint32_t, ComponentOption> options;  // keyed by separated terminal pairs
    long rotations = 0;
    long twists = 0;
    long vcspCalls = 0;
    long xCandidates = 0;
    bool needsPin = false;
};

inline std::vector<std::vector<int>> rotationChoices(const DualTopology& c) {
    std::vector<std::vector<int>> inc(c.vertexCount);
    for (int e = 0; e < static_cast<int>(c.arcs.size()); ++e) {
        inc[c.arcs[e].first].push_back(e);
        inc[c.arcs[e].second].push_back(e);
    }
    return inc;
}

// Plane rotation systems of a small multigraph, each rotation fixing its first entry.
inline std::vector<FaceTrace> planeFaceTraces(const DualTopology& c) {
    RotationEmbedding emb;
    emb.graph = c.asGraph();
    emb.rotation = rotationChoices(c);
    std::vector<FaceTrace> out;
    std::function<void(int)> rec = [&](int v) {
        if (v == c.vertexCount) {
            auto ft = traceFaces(emb);
            if (ft.genus == 0) out.push_back(std::move(ft));
            return;
        }
        auto& r = emb.rotation[v];
        if (r.size() <= 2) return rec(v + 1);
        auto base = r;
        std::sort(r.begin() + 1, r.end());
        do rec(v + 1);
        while (std::next_permutation(r.begin() + 1, r.end()));
        r = base;
    };
    rec(0);
    return out;
}

// Subsets X, inclusion-minimal, with tw(C - X) <= beta. beta < 0 means only the empty set.
inline std::vector<std::vector<int>> minimalPinSets(const DualTopology& c, int beta) {
    if (beta < 0) return {{}};
    const int n = c.vertexCount;
    std::vector<std::uint32_t> kept;
    std::vector<std::vector<int>> out;
    std::vector<std::uint32_t> masks(std::size_t{1} << n);
    std::iota(masks.begin(), masks.end(), 0u);
    std::stable_sort(masks.begin(), masks.end(),
                     [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
    for (std::uint32_t x : masks) {
        if (std::any_of(kept.begin(), kept.end(), [&](std::uint32_t k) { return (k & x) == k; })) continue;
        std::vector<int> idx(n, -1);
        int m = 0;
        for (int v = 0; v < n; ++v)
            if (!(x >> v & 1)) idx[v] = m++;
        WeightedGraph h(m);
        for (auto [a, b] : c.arcs)
            if (idx[a] >= 0 && idx[b] >= 0 && a != b) h.addEdge(idx[a], idx[b], Weight(1));
        if (exactTreewidth(h, beta + 1).width <= beta) {
            kept.push_back(x);
            std::vector<int> xs;
            for (int v = 0; v < n; ++v)
                if (x >> v & 1) xs.push_back(v);
            out.push_back(xs);
        }
    }
    return out;
}

inline std::pair<Weight, std::vector<std::pair<int, std::uint32_t>>> solveParityPlacement(
    const DualTopology& c, const std::vector<std::uint32_t>& twist, const ParityTrails& pt,
    const std::vector<int>& pinned, const std::vector<int>& specialFaces) {
    const int n = c.vertexCount;
    std::vector<char> isPinned(n, 0);
    for (int v : pinned) isPinned[v] = 1;
    std::vector<std::vector<std::pair<int, std::uint32_t>>> dom(n);
    for (int v = 0; v < n; ++v) {
        std::vector<int> fs;
        if (isPinned[v]) fs = specialFaces;
        else {
            fs.resize(pt.faces);
            std::iota(fs.begin(), fs.end(), 0);
        }
        // The first vertex fixes the global parity shift.
        int shifts = v == 0 ? 1 : pt.masks;
        for (int f : fs)
            for (int b = 0; b < shifts; ++b) dom[v].emplace_back(f, static_cast<std::uint32_t>(b));
    }
    std::vector<int> domain(n);
    for (int v = 0; v < n; ++v) domain[v] = static_cast<int>(dom[v].size());
    if (std::find(domain.begin(), domain.end(), 0) != domain.end()) return {INF, {}};
    std::vector<Factor> factors;
    for (size_t a = 0; a < c.arcs.size(); ++a) {
        auto [u, v] = c.arcs[a];
        if (u == v) {
            Factor f{{u}, {}};
            for (auto [face, sh] : dom[u]) f.table.push_back(pt.cost(face, face, twist[a]));
            factors.push_back(std::move(f));
            continue;
        }
        int lo = std::min(u, v), hi = std::max(u, v);
        Factor f{{lo, hi}, {}};
        f.table.reserve(dom[lo].size() * dom[hi].size());
        for (auto [fl, sl] : dom[lo])
            for (auto [fh, shh] : dom[hi]) {
                int fu = lo == u ? fl : fh, fv = lo == u ? fh : fl;
                f.table.push_back(pt.cost(fu, fv, twist[a] ^ sl ^ shh));
            }
        factors.push_back(std::move(f));
    }
    auto order = orderFromDecomposition(greedyDecomposition(c.asGraph()), n);
    auto res = eliminate(domain, std::move(factors), order);
    std::vector<std::pair<int, std::uint32_t>> place;
    if (!res.value.isInf())
        for (int v = 0; v < n; ++v) place.push_back(dom[v][res.assignment[v]]);
    return {res.value, place};
}

inline int pairIndex(int i, int j, int t) {
    if (i > j) std::swap(i, j);
    return i * t - i * (i + 1) / 2 + (j - i - 1);
}

// Best placement per separation pattern for one connected topology component.
inline ComponentPlan planComponent(const DualTopology& c, const ParityTrails& pt, int t,
                                   const std::vector<int>& specialFaces, bool pinAll, int beta) {
    ComponentPlan plan;
    const int m = static_cast<int>(c.arcs.size());
    const int bits = t - 1;
    // Spanning tree arcs get parity 0.
    std::vector<char> tree(m, 0), seen(c.vertexCount, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int a = 0; a < m; ++a) {
            auto [x, y] = c.arcs[a];
            int u = x == v ? y : (y == v ? x : -1);
            if (u >= 0 && !seen[u]) {
                seen[u] = 1;
                tree[a] = 1;
                stack.push_back(u);
            }
        }
    }
    std::vector<int> cotree;
    for (int a = 0; a < m; ++a)
        if (!tree[a]) cotree.push_back(a);
    const int k = static_cast<int>(cotree.size());
    // X candidates: every subset in generic mode (all pinnings are free), minimal ones otherwise.
    std::vector<std::vector<int>> pins = pinAll ? std::vector<std::vector<int>>{{}} : minimalPinSets(c, beta);
    plan.xCandidates = pinAll ? (1L << c.vertexCount) : static_cast<long>(pins.size());
    plan.needsPin = !pinAll && !(pins.size() == 1 && pins[0].empty());
    std::map<std::vector<std::uint32_t>, bool> seenTwist;
    for (const auto& ft : planeFaceTraces(c)) {
        ++plan.rotations;
        const int F = static_cast<int>(ft.faces.size());
        if (F > t) continue;
        // Cotree arcs on each face boundary, counted mod 2.
        std::vector<std::uint32_t> faceCotree(F, 0);
        for (int f = 0; f < F; ++f)
            for (const auto& d : ft.faces[f].walk) {
                auto pos = std::find(cotree.begin(), cotree.end(), d.edge);
                if (pos != cotree.end()) faceCotree[f] ^= 1u << (pos - cotree.begin());
            }
        std::vector<int> faceOf(t, 0);
        std::function<void(int)> rec = [&](int i) {
            if (i < t) {
                for (int f = 0; f < F; ++f) {
                    faceOf[i] = f;
                    rec(i + 1);
                }
                return;
            }
            std::vector<char> used(F, 0);
            for (int f : faceOf) used[f] = 1;
            if (std::count(used.begin(), used.end(), 1) != F) return;
            std::vector<std::uint32_t> parity(F, 0);
            for (int i2 = 1; i2 < t; ++i2) {
                parity[faceOf[i2]] ^= 1u << (i2 - 1);
                parity[faceOf[0]] ^= 1u << (i2 - 1);
            }
            std::vector<std::uint32_t> twist(m, 0);
            for (int b = 0; b < bits; ++b) {
                bool solved = false;
                for (std::uint32_t x = 0; x < (1u << k) && !solved; ++x) {
                    bool ok = true;
                    for (int f = 0; f < F && ok; ++f)
                        ok = (std::popcount(faceCotree[f] & x) & 1) == static_cast<int>(parity[f] >> b & 1);
                    if (!ok) continue;
                    solved = true;
                    for (int j = 0; j < k; ++j)
                        if (x >> j & 1) twist[cotree[j]] |= 1u << b;
                }
                if (!solved) return;
            }
            if (!seenTwist.emplace(twist, true).second) return;
            ++plan.twists;
            std::uint32_t sep = 0;
            for (int a = 0; a < t; ++a)
                for (int b = a + 1; b < t; ++b)
                    if (faceOf[a] != faceOf[b]) sep |= 1u << pairIndex(a, b, t);
            for (const auto& x : pins) {
                ++plan.vcspCalls;
                auto [w, place] = solveParityPlacement(c, twist, pt, x, specialFaces);
                auto& opt = plan.options[sep];
                if (w < opt.cost) {
                    opt.cost = w;
                    opt.twist = twist;
                    opt.face.clear();
                    opt.shift.clear();
                    for (auto [f, sh] : place) {
                        opt.face.push_back(f);
                        opt.shift.push_back(sh);
                    }
                }
            }
        };
        rec(0);
    }
    for (auto it = plan.options.begin(); it != plan.options.end();)
        it = it->second.cost.isInf() ? plan.options.erase(it) : std::next(it);
    return plan;
}

inline EdgeSet optionEdges(const DualTopology& c, const ComponentOption& o, const ParityTrails& pt) {
    EdgeSet out;
    for (size_t a = 0; a < c.arcs.size(); ++a) {
        auto [u, v] = c.arcs[a];
        auto tr = pt.trail(o.face[u], o.face[v], o.twist[a] ^ o.shift[u] ^ o.shift[v]);
        for (int e : tr.gEdges(pt.setup->parcels)) out.push_back(e);
    }
    return out;
}

struct ConnectedSolve {
    EdgeSet cut;
    Weight weight = INF;
    SolveStatistics stats;
};

// Connected plane instance with at least one demand; specialFaces empty means generic mode.
inline ConnectedSolve solveConnectedPlane(const MulticutInstance& inst, const RotationEmbedding& emb,
                                          const SolverCaps& caps, const std::vector<int>& specialFaces, int beta) {
    ConnectedSolve out;
    std::vector<int> terms;
    for (auto [a, b] : inst.pattern.demands) {
        terms.push_back(a);
        terms.push_back(b);
    }
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    const int t = static_cast<int>(terms.size());
    if (t > 8) throw CapExceeded("dual solver supports at most 8 demand terminals per component");
    auto setup = buildSetup(emb, terms);
    const int cap = caps.maxCrossingLen > 0 ? caps.maxCrossingLen : 2 * static_cast<int>(setup.k.edges.size());
    auto pt = buildParityTrails(setup, terms, cap);
    out.stats.parcels = setup.parcels.parcelCount;
    out.stats.kEdges = static_cast<long>(setup.k.edges.size());
    out.stats.crossingCap = cap;
    out.stats.capBinding = pt.capBinding;
    out.stats.treewidthBudget = beta;
    std::uint32_t demandMask = 0;
    auto indexOf = [&](int v) {
        return static_cast<int>(std::lower_bound(terms.begin(), terms.end(), v) - terms.begin());
    };
    for (auto [a, b] : inst.pattern.demands) demandMask |= 1u << pairIndex(indexOf(a), indexOf(b), t);

    auto en = enumerateTopologies(t, caps);
    out.stats.truncated = en.truncated;
    out.stats.topologies = static_cast<long>(en.topologies.size());
    const bool generic = specialFaces.empty();
    std::vector<int> special = specialFaces;
    if (generic) {
        special.resize(pt.faces);
        std::iota(special.begin(), special.end(), 0);
    }
    const int nc = static_cast<int>(en.components.size());
    std::vector<ComponentPlan> plans(nc);
    parallelFor(nc, caps.jobs,
                [&](int id) { plans[id] = planComponent(en.components[id], pt, t, special, generic, beta); });
    for (const auto& p : plans) {
        out.stats.componentsEvaluated += 1;
        out.stats.rotations += p.rotations;
        out.stats.twists += p.twists;
        out.stats.vcspCalls += p.vcspCalls;
    }

    out.cut = allEdges(inst.graph);
    out.weight = cutWeight(inst.graph, out.cut);
    for (const auto& top : en.topologies) {
        long pairs = 1;
        for (int id : top) pairs *= plans[id].xCandidates;
        out.stats.candidatePairs += pairs;
        // Cover the demand pairs with one option per component.
        std::map<std::uint32_t, std::pair<Weight, std::vector<std::uint32_t>>> states{{0u, {Weight::zero(), {}}}};
        for (int id : top) {
            std::map<std::uint32_t, std::pair<Weight, std::vector<std::uint32_t>>> next;
            for (const auto& [cov, val] : states)
                for (const auto& [sep, opt] : plans[id].options) {
                    Weight w = val.first + opt.cost;
                    auto [slot, fresh] = next.try_emplace(cov | sep, INF, std::vector<std::uint32_t>{});
                    if (w < slot->second.first) {
                        slot->second.first = w;
                        slot->second.second = val.second;
                        slot->second.second.push_back(sep);
                    }
                }
            states = std::move(next);
        }
        const std::pair<Weight, std::vector<std::uint32_t>>* pick = nullptr;
        for (const auto& [cov, val] : states)
            if ((cov & demandMask) == demandMask && (!pick || val.first < pick->first)) pick = &val;
        if (!pick || pick->second.size() != top.size()) continue;
        EdgeSet cut;
        for (size_t i = 0; i < top.size(); ++i) {
            const auto& c = en.components[top[i]];
            for (int e : optionEdges(c, plans[top[i]].options.at(pick->second[i]), pt)) cut.push_back(e);
        }
        cut = canonicalizeSolution(cut);
        ++out.stats.candidatesVerified;
        if (!isMulticut(inst, cut)) continue;
        Weight w = cutWeight(inst.graph, cut);
        if (w < out.weight || (w == out.weight && cut < out.cut)) {
            out.weight = w;
            out.cut = cut;
        }
    }
    for (const auto& p : plans) out.stats.pinningUsed = out.stats.pinningUsed || p.needsPin;
    return out;
}

struct Restriction {
    MulticutInstance inst;
    RotationEmbedding emb;
    std::vector<int> edgeBack;
    std::vector<int> vertexOf;  // old -> new, -1 outside
};

inline Restriction restrictTo(const MulticutInstance& inst, const RotationEmbedding& emb,
                              const std::vector<int>& verts) {
    Restriction r;
    r.vertexOf.assign(inst.graph.vertexCount, -1);
    for (size_t i = 0; i < verts.size(); ++i) r.vertexOf[verts[i]] = static_cast<int>(i);
    r.inst.graph = WeightedGraph(static_cast<int>(verts.size()));
    std::vector<int> edgeTo(inst.graph.edgeCount(), -1);
    for (int e = 0; e < inst.graph.edgeCount(); ++e) {
        const auto& ed = inst.graph.edges[e];
        if (r.vertexOf[ed.a] < 0) continue;
        edgeTo[e] = r.inst.graph.addEdge(r.vertexOf[ed.a], r.vertexOf[ed.b], ed.w);
        r.edgeBack.push_back(e);
    }
    std::vector<std::vector<int>> rot(verts.size());
    for (size_t i = 0; i < verts.size(); ++i)
        for (int e : emb.rotation[verts[i]]) rot[i].push_back(edgeTo[e]);
    for (int v : inst.pattern.terminals)
        if (r.vertexOf[v] >= 0) r.inst.pattern.terminals.push_back(r.vertexOf[v]);
    for (auto [a, b] : inst.pattern.demands)
        if (r.vertexOf[a] >= 0 && r.vertexOf[b] >= 0) r.inst.pattern.demands.emplace_back(r.vertexOf[a], r.vertexOf[b]);
    r.inst.pattern.normalize();
    r.inst.rotation = rot;
    r.emb = {r.inst.graph, rot};
    return r;
}

inline void checkEmbeddingMatches(const MulticutInstance& inst, const RotationEmbedding& emb) {
    const auto& g = inst.graph;
    if (emb.graph.vertexCount != g.vertexCount || emb.graph.edgeCount() != g.edgeCount())
        throw InputError("embedding does not describe the instance graph");
    for (int e = 0; e < g.edgeCount(); ++e)
        if (emb.graph.edges[e].a != g.edges[e].a || emb.graph.edges[e].b != g.edges[e].b)
            throw InputError("embedding does not describe the instance graph");
    auto rep = validatePlane(emb);
    if (!rep.ok) throw UnsupportedInput("embedding is not plane: " + rep.message);
}

// Minimum edge set separating every vertex of A from every vertex of B.
inline EdgeSet minCutBetweenSets(const WeightedGraph& g, const std::vector<int>& a, const std::vector<int>& b) {
    const int n = g.vertexCount + 2, s = n - 2, t = n - 1;
    std::uint64_t finite = 1;
    for (const auto& e : g.edges)
        if (!e.w.isInf()) finite += e.w.value();
    const std::uint64_t big = finite;
    struct Arc {
        int to;
        std::uint64_t cap;
    };
    std::vector<Arc> arcs;
    std::vector<std::vector<int>> adj(n);
    auto add = [&](int x, int y, std::uint64_t c1, std::uint64_t c2) {
        adj[x].push_back(static_cast<int>(arcs.size()));
        arcs.push_back({y, c1});
        adj[y].push_back(static_cast<int>(arcs.size()));
        arcs.push_back({x, c2});
    };
    for (const auto& e : g.edges) {
        std::uint64_t c = e.w.isInf() ? big : e.w.value();
        if (e.a != e.b) add(e.a, e.b, c, c);
    }
    for (int v : a) add(s, v, big, 0);
    for (int v : b) add(v, t, big, 0);
    std::vector<int> level(n), it(n);
    auto bfs = [&] {
        std::fill(level.begin(), level.end(), -1);
        std::queue<int> q;
        level[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (int id : adj[v])
                if (arcs[id].cap > 0 && level[arcs[id].to] < 0) {
                    level[arcs[id].to] = level[v] + 1;
                    q.push(arcs[id].to);
                }
        }
        return level[t] >= 0;
    };
    std::function<std::uint64_t(int, std::uint64_t)> dfs = [&](int v, std::uint64_t f) -> std::uint64_t {
        if (v == t) return f;
        for (int& i = it[v]; i < static_cast<int>(adj[v].size()); ++i) {
            int id = adj[v][i];
            auto& arc = arcs[id];
            if (arc.cap == 0 || level[arc.to] != level[v] + 1) continue;
            std::uint64_t got = dfs(arc.to, std::min(f, arc.cap));
            if (got) {
                arc.cap -= got;
                arcs[id ^ 1].cap += got;
                return got;
            }
        }
        return 0;
    };
    while (bfs()) {
        std::fill(it.begin(), it.end(), 0);
        while (dfs(s, UINT64_MAX)) {
        }
    }
    std::vector<int> side(g.vertexCount, 0);
    for (int v = 0; v < g.vertexCount; ++v) side[v] = level[v] >= 0 ? 0 : 1;
    return crossEdges(g, side);
}

inline std::optional<std::pair<std::vector<int>, std::vector<int>>> bicliqueSides(const MulticutInstance& inst) {
    auto h = terminalPattern(inst);
    auto core = nonIsolated(h);
    auto bc = asBiclique(h, core);
    if (!bc || bc->first.empty() || bc->second.empty()) return std::nullopt;
    std::pair<std::vector<int>, std::vector<int>> out;
    for (int i : bc->first) out.first.push_back(inst.pattern.terminals[i]);
    for (int i : bc->second) out.second.push_back(inst.pattern.terminals[i]);
    return out;
}

inline SolveResult solvePerComponent(const MulticutInstance& inst, const RotationEmbedding& emb, const SolverCaps& caps,
                                     const std::vector<int>* faceSet, int beta) {
    SolveResult res;
    auto comps = componentsOf(inst.graph, {});
    FaceTrace whole;
    if (faceSet) whole = traceFaces(emb);
    for (const auto& block : comps.blocks) {
        auto r = restrictTo(inst, emb, block);
        if (r.inst.pattern.demands.empty()) continue;
        std::vector<int> special;
        if (faceSet) {
            auto ft = traceFaces(r.emb);
            std::vector<char> in(ft.faces.size(), 0);
            for (int e = 0; e < r.inst.graph.edgeCount(); ++e)
                for (int end = 0; end < 2; ++end)
                    if (std::binary_search(faceSet->begin(), faceSet->end(), whole.faceOfDart[2 * r.edgeBack[e] + end]))
                        in[ft.faceOfDart[2 * e + end]] = 1;
            for (int f = 0; f < static_cast<int>(in.size()); ++f)
                if (in[f]) special.push_back(f);
        }
        auto cs = solveConnectedPlane(r.inst, r.emb, caps, special, beta);
        res.statistics.add(cs.stats);
        for (int e : cs.cut) res.cut.push_back(r.edgeBack[e]);
    }
    res.cut = canonicalizeSolution(res.cut);
    res.weight = cutWeight(inst.graph, res.cut);
    res.certifiedOptimal = !res.statistics.truncated && !res.statistics.capBinding && !res.statistics.pinningUsed;
    return res;
}

}  // namespace detail

// Optimum multicut of a plane instance via dual topologies and parity-class placements.
inline SolveResult solveMulticutPlanar(const MulticutInstance& inst, const RotationEmbedding& emb,
                                       const SolverCaps& caps = {}) {
    auto start = std::chrono::steady_clock::now();
    inst.validate();
    caps.validate();
    detail::checkEmbeddingMatches(inst, emb);
    SolveResult res;
    if (inst.pattern.demands.empty()) return res;
    if (caps.allowBypass) {
        if (auto sides = detail::bicliqueSides(inst)) {
            res.cut = detail::minCutBetweenSets(inst.graph, sides->first, sides->second);
            res.weight = cutWeight(inst.graph, res.cut);
            res.strategy = "extended-biclique";
            res.statistics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return res;
        }
    }
    res = detail::solvePerComponent(inst, emb, caps, nullptr, caps.treewidthBudget > 0 ? caps.treewidthBudget : -1);
    res.statistics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

struct InstanceAnalysis {
    int terminals = 0;  // terminals with at least one demand
    int mu = 0;
    bool muExact = true;
    int faceCover = 0;
    std::vector<int> coverFaces;
    bool coverExact = true;
    int betaFromDistance = 0;  // calibration: 2*mu + 3
    int betaFromRoot = 0;      // calibration: ceil(2*sqrt(t))
    int suggestedBeta = 0;
    bool bicliqueBypass = false;
    std::string note;

    Json toJson() const {
        return Json{{"terminals", terminals},
                    {"mu", mu},
                    {"muExact", muExact},
                    {"faceCover", faceCover},
                    {"coverFaces", coverFaces},
                    {"coverExact", coverExact},
                    {"betaFromDistance", betaFromDistance},
                    {"betaFromRoot", betaFromRoot},
                    {"suggestedBeta", suggestedBeta},
                    {"calibrations", Json::array({"betaFromDistance", "betaFromRoot"})},
                    {"bicliqueBypass", bicliqueBypass},
                    {"note", note}};
    }
};

inline InstanceAnalysis analyzeInstance(const MulticutInstance& inst, const RotationEmbedding& emb) {
    inst.validate();
    InstanceAnalysis a;
    auto h = terminalPattern(inst);
    auto core = nonIsolated(h);
    a.terminals = static_cast<int>(core.size());
    auto dist = extendedBicliqueDistance(h);
    a.mu = dist.mu;
    a.muExact = dist.exact;
    std::vector<int> terms;
    for (int i : core) terms.push_back(inst.pattern.terminals[i]);
    auto fc = minFaceCover(emb, traceFaces(emb), terms);
    a.faceCover = static_cast<int>(fc.faces.size());
    a.coverFaces = fc.faces;
    a.coverExact = fc.exact;
    a.betaFromDistance = 2 * a.mu + 3;
    a.betaFromRoot = static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(a.terminals))));
    a.suggestedBeta = std::min(a.betaFromDistance, a.betaFromRoot);
    a.bicliqueBypass = detail::bicliqueSides(inst).has_value();
    if (a.bicliqueBypass) a.note = "pattern is a biclique: solved as a two-set separation by max-flow";
    else if (core.empty()) a.note = "no demands: empty cut";
    else a.note = "generic dual-topology search";
    return a;
}

// Dual-topology search where pinned dual vertices sit on the given faces and tw(C - X) is bounded.
inline SolveResult solveWithFaceCover(const MulticutInstance& inst, const RotationEmbedding& emb,
                                      std::vector<int> faceSet, const SolverCaps& caps = {}) {
    auto start = std::chrono::steady_clock::now();
    inst.validate();
    caps.validate();
    detail::checkEmbeddingMatches(inst, emb);
    auto ft = traceFaces(emb);
    std::sort(faceSet.begin(), faceSet.end());
    faceSet.erase(std::unique(faceSet.begin(), faceSet.end()), faceSet.end());
    for (int f : faceSet)
        if (f < 0 || f >= static_cast<int>(ft.faces.size())) throw InputError("face id out of range");
    std::vector<char> covered(inst.graph.vertexCount, 0);
    for (int f : faceSet)
        for (int v : ft.faces[f].vertices) covered[v] = 1;
    for (auto [a, b] : inst.pattern.demands)
        for (int v : {a, b})
            if (!covered[v]) throw InputError("face set does not cover terminal " + std::to_string(v));
    SolveResult res;
    res.strategy = "face-cover";
    if (inst.pattern.demands.empty()) return res;
    int beta = caps.treewidthBudget > 0 ? caps.treewidthBudget : analyzeInstance(inst, emb).suggestedBeta;
    res = detail::solvePerComponent(inst, emb, caps, &faceSet, beta);
    res.strategy = "face-cover";
    res.statistics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace mcwb

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mcwb/decomposition.hpp"
#include "mcwb/embedding.hpp"
#include "mcwb/graph.hpp"
#include "mcwb/io.hpp"

namespace mcwb {

struct UnsupportedInput : InputError {
    using InputError::InputError;
};

// A curve through faces of G: faces[i] and faces[i+1] are separated by G-edge crossed[i].
struct DualWalk {
    int from = 0;  // K-node ids
    int to = 0;
    std::vector<int> faces;
    std::vector<int> crossed;
    Weight weight = Weight::zero();
};

struct CutGraphK {
    std::vector<int> nodeVertex;  // G-vertex of a terminal node, -1 for a junction
    std::vector<int> nodeFace;    // face hosting a junction node, -1 for a terminal
    std::vector<DualWalk> edges;
    std::vector<std::vector<int>> ledger;  // per G-edge: crossing K-edges in order from endpoint a

    int nodeCount() const { return static_cast<int>(nodeVertex.size()); }
    int nodeOfVertex(int v) const {
        for (int i = 0; i < nodeCount(); ++i)
            if (nodeVertex[i] == v) return i;
        return -1;
    }
};

struct ParcelAdjacency {
    int a = 0;
    int b = 0;
    bool kEdge = false;
    int edge = 0;  // G-edge id or K-edge id
};

struct ParcelGraph {
    int parcelCount = 0;
    std::vector<int> faceOf;  // G-face containing each parcel
    std::vector<ParcelAdjacency> adjacencies;
    std::vector<std::vector<int>> incident;  // adjacency ids per parcel
    std::vector<char> special;
};

struct OverlayTag {
    bool kEdge = false;
    int edge = 0;
};

struct Setup {
    RotationEmbedding embedding;
    FaceTrace faces;
    std::vector<int> terminals;
    CutGraphK k;
    RotationEmbedding overlay;
    std::vector<OverlayTag> overlayTag;
    ParcelGraph parcels;
};

namespace detail {

// Vertex-face incidence graph with dual edges: face nodes 0..F-1, terminal nodes F..F+t-1.
struct RadialEdge {
    int u = 0;
    int v = 0;
    Weight w = Weight::zero();
    int gEdge = -1;   // dual step across this G-edge, or -1 for a corner step
    int corner = -1;  // walk position of the corner inside face min(u,v) for corner steps
};

struct RadialGraph {
    int faceCount = 0;
    std::vector<RadialEdge> edges;
    std::vector<std::vector<int>> incident;
};

inline RadialGraph radialGraph(const RotationEmbedding& emb, const FaceTrace& ft, const std::vector<int>& terminals) {
    RadialGraph r;
    r.faceCount = static_cast<int>(ft.faces.size());
    const int nodes = r.faceCount + static_cast<int>(terminals.size());
    std::map<std::pair<int, int>, int> best;  // collapse parallels: keep the cheapest, then the first
    auto offer = [&](RadialEdge e) {
        auto key = std::minmax(e.u, e.v);
        auto it = best.find(key);
        if (it == best.end()) {
            best[key] = static_cast<int>(r.edges.size());
            r.edges.push_back(e);
        } else if (e.w < r.edges[it->second].w) {
            r.edges[it->second] = e;
        }
    };
    std::vector<int> terminalIndex(emb.graph.vertexCount, -1);
    for (int ti = 0; ti < static_cast<int>(terminals.size()); ++ti) terminalIndex[terminals[ti]] = ti;
    for (const auto& f : ft.faces)
        for (int i = 0; i < static_cast<int>(f.walk.size()); ++i) {
            int d = f.walk[i].id();
            const auto& e = emb.graph.edges[d / 2];
            int ti = terminalIndex[d % 2 == 0 ? e.a : e.b];
            if (ti >= 0) offer({f.id, r.faceCount + ti, Weight::zero(), -1, i});
        }
    for (int e = 0; e < emb.graph.edgeCount(); ++e) {
        int f = ft.faceOfDart[2 * e], g = ft.faceOfDart[2 * e + 1];
        if (f != g) offer({std::min(f, g), std::max(f, g), emb.graph.edges[e].w, e, -1});
    }
    r.incident.assign(nodes, {});
    for (int i = 0; i < static_cast<int>(r.edges.size()); ++i) {
        r.incident[r.edges[i].u].push_back(i);
        r.incident[r.edges[i].v].push_back(i);
    }
    return r;
}

// Multi-source shortest paths keyed by (weight, node sequence), lexicographic on ties.
inline std::vector<std::vector<int>> lexShortestPaths(const RadialGraph& r, const std::vector<int>& sources,
                                                      std::vector<Weight>& dist) {
    const int n = static_cast<int>(r.incident.size());
    using Key = std::pair<Weight, std::vector<int>>;
    std::vector<std::optional<Key>> best(n);
    std::vector<char> done(n, 0), isSource(n, 0);
    for (int s : sources) {
        best[s] = Key{Weight::zero(), {s}};
        isSource[s] = 1;
    }
    for (;;) {
        int u = -1;
        for (int v = 0; v < n; ++v)
            if (!done[v] && best[v] && (u < 0 || *best[v] < *best[u])) u = v;
        if (u < 0) break;
        done[u] = 1;
        for (int ei : r.incident[u]) {
            const auto& e = r.edges[ei];
            int v = e.u == u ? e.v : e.u;
            if (done[v] || isSource[v]) continue;
            Key cand{best[u]->first + e.w, best[u]->second};
            cand.second.push_back(v);
            if (!best[v] || cand < *best[v]) best[v] = std::move(cand);
        }
    }
    dist.assign(n, INF);
    std::vector<std::vector<int>> paths(n);
    for (int v = 0; v < n; ++v)
        if (best[v]) {
            dist[v] = best[v]->first;
            paths[v] = best[v]->second;
        }
    return paths;
}

inline int radialEdgeBetween(const RadialGraph& r, int u, int v) {
    for (int ei : r.incident[u]) {
        const auto& e = r.edges[ei];
        if ((e.u == u && e.v == v) || (e.u == v && e.v == u)) return ei;
    }
    return -1;
}

}  // namespace detail

// Greedy nearest-terminal tree in the vertex-face incidence graph; suppressing degree-2 face
// nodes turns its paths into K-edges. The tree is drawn without self-crossings by construction.
inline Setup buildSetup(const RotationEmbedding& emb, std::vector<int> terminals) {
    Setup s;
    s.embedding = emb;
    s.faces = traceFaces(emb);
    if (s.faces.genus != 0) throw UnsupportedInput("setup requires a plane embedding");
    if (componentsOf(emb.graph, {}).blocks.size() > 1) throw UnsupportedInput("setup requires a connected graph");
    std::sort(terminals.begin(), terminals.end());
    terminals.erase(std::unique(terminals.begin(), terminals.end()), terminals.end());
    for (int v : terminals)
        if (v < 0 || v >= emb.graph.vertexCount) throw InputError("terminal out of range");
    s.terminals = terminals;
    const int m = emb.graph.edgeCount();
    const int F = static_cast<int>(s.faces.faces.size());
    const int t = static_cast<int>(terminals.size());
    s.k.ledger.assign(m, {});

    auto r = detail::radialGraph(emb, s.faces, terminals);
    const int nodes = F + t;
    std::vector<char> inTree(nodes, 0);
    std::vector<int> treeEdges;
    if (t > 0 && emb.graph.edgeCount() > 0) {
        inTree[F] = 1;
        for (;;) {
            std::vector<int> sources;
            for (int v = 0; v < nodes; ++v)
                if (inTree[v]) sources.push_back(v);
            std::vector<Weight> dist;
            auto paths = detail::lexShortestPaths(r, sources, dist);
            int pick = -1;
            for (int ti = 0; ti < t; ++ti) {
                int v = F + ti;
                if (inTree[v] || dist[v].isInf()) continue;
                if (pick < 0 || std::tie(dist[v], paths[v]) < std::tie(dist[pick], paths[pick])) pick = v;
            }
            if (pick < 0) break;
            const auto& p = paths[pick];
            for (size_t i = 0; i + 1 < p.size(); ++i) treeEdges.push_back(detail::radialEdgeBetween(r, p[i], p[i + 1]));
            for (int v : p) inTree[v] = 1;
        }
    }

    // K-nodes: terminals and face nodes of tree degree >= 3.
    std::vector<std::vector<int>> treeInc(nodes);
    for (int ei : treeEdges) {
        treeInc[r.edges[ei].u].push_back(ei);
        treeInc[r.edges[ei].v].push_back(ei);
    }
    std::vector<int> kNode(nodes, -1);
    for (int ti = 0; ti < t; ++ti) {
        kNode[F + ti] = s.k.nodeCount();
        s.k.nodeVertex.push_back(terminals[ti]);
        s.k.nodeFace.push_back(-1);
    }
    for (int f = 0; f < F; ++f)
        if (treeInc[f].size() >= 3) {
            kNode[f] = s.k.nodeCount();
            s.k.nodeVertex.push_back(-1);
            s.k.nodeFace.push_back(f);
        }
    // Walk each maximal path between K-nodes.
    std::vector<char> used(r.edges.size(), 0);
    std::vector<int> kEdgeOfRadial(r.edges.size(), -1);
    for (int start = 0; start < nodes; ++start) {
        if (kNode[start] < 0) continue;
        for (int first : treeInc[start]) {
            if (used[first]) continue;
            DualWalk w;
            w.from = kNode[start];
            int kid = static_cast<int>(s.k.edges.size());
            int cur = start, ei = first;
            if (start < F) w.faces.push_back(start);
            for (;;) {
                used[ei] = 1;
                kEdgeOfRadial[ei] = kid;
                const auto& e = r.edges[ei];
                int nxt = e.u == cur ? e.v : e.u;
                if (e.gEdge >= 0) {
                    w.crossed.push_back(e.gEdge);
                    w.weight = w.weight + e.w;
                }
                if (nxt < F) w.faces.push_back(nxt);
                cur = nxt;
                if (kNode[cur] >= 0) break;
                ei = treeInc[cur][0] == ei ? treeInc[cur][1] : treeInc[cur][0];
            }
            w.to = kNode[cur];
            for (int ge : w.crossed) s.k.ledger[ge].push_back(kid);
            s.k.edges.push_back(std::move(w));
        }
    }

    // Overlay: G with crossed edges subdivided, plus the tree drawn through face centres.
    auto& O = s.overlay.graph;
    O = WeightedGraph(emb.graph.vertexCount);
    std::vector<int> crossPoint(m, -1), halfA(m, -1), halfB(m, -1);
    for (int e = 0; e < m; ++e)
        if (!s.k.ledger[e].empty()) crossPoint[e] = O.addVertex();
    std::vector<int> centre(F, -1);
    for (int f = 0; f < F; ++f)
        if (inTree[f]) centre[f] = O.addVertex();
    for (int e = 0; e < m; ++e) {
        const auto& ed = emb.graph.edges[e];
        if (crossPoint[e] < 0) {
            halfA[e] = O.addEdge(ed.a, ed.b, ed.w);
            s.overlayTag.push_back({false, e});
        } else {
            halfA[e] = O.addEdge(ed.a, crossPoint[e], ed.w);
            s.overlayTag.push_back({false, e});
            halfB[e] = O.addEdge(crossPoint[e], ed.b, ed.w);
            s.overlayTag.push_back({false, e});
        }
    }
    auto& rot = s.overlay.rotation;
    rot.assign(O.vertexCount, {});
    // Rotation keys inside a face: corner i -> 2i, crossing of walk dart j -> 2j+1.
    std::vector<std::vector<std::pair<int, int>>> centreSlots(F);
    std::vector<std::vector<std::pair<int, int>>> cornerInsert(emb.graph.vertexCount);  // (leaving dart, overlay edge)
    std::vector<int> crossToFace0(m, -1), crossToFace1(m, -1);
    for (int ei : treeEdges) {
        const auto& e = r.edges[ei];
        int kid = kEdgeOfRadial[ei];
        if (e.gEdge < 0) {
            int f = e.u < F ? e.u : e.v;
            int v = terminals[(e.u < F ? e.v : e.u) - F];
            int oe = O.addEdge(v, centre[f], Weight::zero());
            s.overlayTag.push_back({true, kid});
            cornerInsert[v].push_back({s.faces.faces[f].walk[e.corner].id(), oe});
            centreSlots[f].push_back({2 * e.corner, oe});
        } else {
            int ge = e.gEdge;
            for (int end = 0; end < 2; ++end) {
                int d = 2 * ge + end;
                int f = s.faces.faceOfDart[d];
                int oe = O.addEdge(centre[f], crossPoint[ge], Weight::zero());
                s.overlayTag.push_back({true, kid});
                (end == 0 ? crossToFace0 : crossToFace1)[ge] = oe;
                const auto& walk = s.faces.faces[f].walk;
                int j = 0;
                while (walk[j].id() != d) ++j;
                centreSlots[f].push_back({2 * j + 1, oe});
            }
        }
    }
    // G-vertices: the G rotation with halves substituted, corner edges placed before their leaving dart.
    auto overlayEdgeOfDart = [&](int d) {
        int e = d / 2;
        return (d % 2 == 0 || halfB[e] < 0) ? halfA[e] : halfB[e];
    };
    auto gIdx = detail::indexRotation(emb);
    for (int v = 0; v < emb.graph.vertexCount; ++v) {
        const auto& gr = emb.rotation[v];
        for (int pos = 0; pos < static_cast<int>(gr.size()); ++pos) {
            int e = gr[pos];
            int d = (gIdx.vertexOfEnd[2 * e] == v && gIdx.posOfEnd[2 * e] == pos) ? 2 * e : 2 * e + 1;
            for (auto [leave, oe] : cornerInsert[v])
                if (leave == d) rot[v].push_back(oe);
            rot[v].push_back(overlayEdgeOfDart(d));
        }
    }
    for (int e = 0; e < m; ++e) {
        int x = crossPoint[e];
        if (x < 0) continue;
        rot[x] = {halfA[e], crossToFace0[e], halfB[e], crossToFace1[e]};
    }
    for (int f = 0; f < F; ++f) {
        if (centre[f] < 0) continue;
        auto slots = centreSlots[f];
        std::sort(slots.begin(), slots.end(), [](auto a, auto b) { return a.first > b.first; });
        for (auto [key, oe] : slots) rot[centre[f]].push_back(oe);
    }

    auto oft = traceFaces(s.overlay);
    if (oft.genus != 0) throw EmbeddingError("overlay synthesis produced a non-plane rotation");
    auto& P = s.parcels;
    P.parcelCount = static_cast<int>(oft.faces.size());
    P.faceOf.assign(P.parcelCount, -1);
    P.special.assign(P.parcelCount, 0);
    P.incident.assign(P.parcelCount, {});
    std::vector<int> centreFace(O.vertexCount, -1);
    for (int f = 0; f < F; ++f)
        if (centre[f] >= 0) centreFace[centre[f]] = f;
    // G-face of each overlay dart.
    for (int oe = 0; oe < O.edgeCount(); ++oe) {
        for (int end = 0; end < 2; ++end) {
            int parcel = oft.faceOfDart[2 * oe + end];
            int gface;
            const auto& tag = s.overlayTag[oe];
            if (!tag.kEdge) {
                int ge = tag.edge;
                bool forward = (oe == halfA[ge] || oe == halfB[ge]) && end == 0;
                gface = s.faces.faceOfDart[2 * ge + (forward ? 0 : 1)];
            } else {
                int c = centreFace[O.edges[oe].a] >= 0 ? O.edges[oe].a : O.edges[oe].b;
                gface = centreFace[c];
            }
            if (P.faceOf[parcel] < 0) P.faceOf[parcel] = gface;
            else if (P.faceOf[parcel] != gface) throw EmbeddingError("parcel straddles two faces");
        }
        int pa = oft.faceOfDart[2 * oe], pb = oft.faceOfDart[2 * oe + 1];
        int id = static_cast<int>(P.adjacencies.size());
        P.adjacencies.push_back({pa, pb, s.overlayTag[oe].kEdge, s.overlayTag[oe].edge});
        P.incident[pa].push_back(id);
        if (pb != pa) P.incident[pb].push_back(id);
    }
    return s;
}

inline void markSpecialFaces(Setup& s, const std::vector<int>& faceSet) {
    std::vector<char> in(s.faces.faces.size(), 0);
    for (int f : faceSet) in.at(f) = 1;
    for (int p = 0; p < s.parcels.parcelCount; ++p) s.parcels.special[p] = in[s.parcels.faceOf[p]];
}

inline Json parcelsToJson(const Setup& s) {
    Json j;
    j["parcels"] = s.parcels.parcelCount;
    j["faceOf"] = s.parcels.faceOf;
    Json adj = Json::array();
    for (const auto& a : s.parcels.adjacencies)
        adj.push_back({{"a", a.a}, {"b", a.b}, {"kind", a.kEdge ? "K" : "G"}, {"edge", a.edge}});
    j["adjacencies"] = adj;
    Json ks = Json::array();
    for (const auto& w : s.k.edges)
        ks.push_back({{"from", w.from}, {"to", w.to}, {"faces", w.faces}, {"crossed", w.crossed},
                      {"weight", weightToJson(w.weight)}});
    j["kEdges"] = ks;
    return j;
}


// Alternating parcel/edge sequence; via[i] is the adjacency crossed from parcels[i] to parcels[i+1].
struct Trail {
    std::vector<int> parcels;
    std::vector<int> via;
    Weight weight = Weight::zero();

    int length() const { return static_cast<int>(via.size()); }
    std::vector<int> crossingSequence(const ParcelGraph& pg) const {
        std::vector<int> seq;
        for (int a : via)
            if (pg.adjacencies[a].kEdge) seq.push_back(pg.adjacencies[a].edge);
        return seq;
    }
    EdgeSet gEdges(const ParcelGraph& pg) const {
        EdgeSet out;
        for (int a : via)
            if (!pg.adjacencies[a].kEdge) out.push_back(pg.adjacencies[a].edge);
        return canonicalizeSolution(out);
    }
};

inline Weight adjacencyWeight(const Setup& s, const ParcelAdjacency& a) {
    return a.kEdge ? Weight::zero() : s.embedding.graph.edges[a.edge].w;
}

// Minimum-weight trails from p1 with crossing sequence exactly sigma, to every parcel.
// Table z[i][j][p]: prefix length i of sigma, trail length at most j.
inline std::vector<std::optional<Trail>> minTrailsFrom(const Setup& s, int p1, const std::vector<int>& sigma) {
    const auto& pg = s.parcels;
    const int P = pg.parcelCount, g = static_cast<int>(sigma.size());
    const int L = (g + 1) * P;
    auto at = [&](int i, int j, int p) { return (static_cast<size_t>(i) * (L + 1) + j) * P + p; };
    std::vector<Weight> z(static_cast<size_t>(g + 1) * (L + 1) * P, INF);
    std::vector<int> from(z.size(), -1);  // -2 for stay, else adjacency id
    z[at(0, 0, p1)] = Weight::zero();
    for (int j = 1; j <= L; ++j)
        for (int i = 0; i <= g; ++i)
            for (int p = 0; p < P; ++p) {
                Weight best = z[at(i, j - 1, p)];
                int how = best.isInf() ? -1 : -2;
                for (int ai : pg.incident[p]) {
                    const auto& a = pg.adjacencies[ai];
                    int q = a.a == p ? a.b : a.a;
                    if (q == p) continue;
                    Weight cand = INF;
                    if (!a.kEdge) cand = z[at(i, j - 1, q)] + adjacencyWeight(s, a);
                    else if (i > 0 && sigma[i - 1] == a.edge) cand = z[at(i - 1, j - 1, q)];
                    if (cand < best) {
                        best = cand;
                        how = ai;
                    }
                }
                z[at(i, j, p)] = best;
                from[at(i, j, p)] = how;
            }
    std::vector<std::optional<Trail>> out(P);
    for (int p2 = 0; p2 < P; ++p2) {
        if (z[at(g, L, p2)].isInf()) continue;
        Trail tr;
        tr.weight = z[at(g, L, p2)];
        int i = g, j = L, p = p2;
        tr.parcels.push_back(p);
        while (j > 0) {
            int how = from[at(i, j, p)];
            if (how == -2) {
                --j;
                continue;
            }
            const auto& a = pg.adjacencies[how];
            int q = a.a == p ? a.b : a.a;
            if (a.kEdge) --i;
            tr.via.push_back(how);
            tr.parcels.push_back(q);
            p = q;
            --j;
        }
        std::reverse(tr.parcels.begin(), tr.parcels.end());
        std::reverse(tr.via.begin(), tr.via.end());
        out[p2] = std::move(tr);
    }
    return out;
}

inline std::optional<Trail> minTrail(const Setup& s, int p1, int p2, const std::vector<int>& sigma) {
    if (p1 < 0 || p2 < 0 || p1 >= s.parcels.parcelCount || p2 >= s.parcels.parcelCount)
        throw InputError("parcel out of range");
    return minTrailsFrom(s, p1, sigma)[p2];
}

struct DualTopology {
    int vertexCount = 0;
    std::vector<std::pair<int, int>> arcs;  // oriented tail -> head; loops allowed

    WeightedGraph asGraph() const {
        WeightedGraph g(vertexCount);
        for (auto [a, b] : arcs) g.addEdge(a, b, Weight(1));
        return g;
    }
};

struct DiscretizedDual {
    DualTopology topology;
    std::vector<int> phi;                 // parcel per vertex
    std::vector<Trail> trails;            // one per arc
    std::vector<std::vector<int>> sigma;  // crossing sequence per arc
    Weight weight = Weight::zero();       // sum of trail weights
};

inline std::pair<EdgeSet, Weight> edgesCrossed(const DiscretizedDual& dd, const Setup& s) {
    EdgeSet all;
    for (const auto& tr : dd.trails)
        for (int e : tr.gEdges(s.parcels)) all.push_back(e);
    all = canonicalizeSolution(all);
    return {all, cutWeight(s.embedding.graph, all)};
}

namespace detail {

// Min-sum constraint network solved by variable elimination.
struct Factor {
    std::vector<int> scope;  // sorted variable ids
    std::vector<Weight> table;
};

struct EliminationResult {
    Weight value = INF;
    std::vector<int> assignment;
};

inline EliminationResult eliminate(const std::vector<int>& domain, std::vector<Factor> factors,
                                   const std::vector<int>& order) {
    const int n = static_cast<int>(domain.size());
    struct Record {
        int var;
        std::vector<int> scope;
        std::vector<int> argmin;
    };
    std::vector<Record> records;
    for (int x : order) {
        std::vector<Factor> bucket, rest;
        for (auto& f : factors)
            (std::find(f.scope.begin(), f.scope.end(), x) != f.scope.end() ? bucket : rest).push_back(std::move(f));
        std::vector<int> scope;
        for (const auto& f : bucket)
            for (int v : f.scope)
                if (v != x) scope.push_back(v);
        std::sort(scope.begin(), scope.end());
        scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
        size_t cells = 1;
        for (int v : scope) cells *= static_cast<size_t>(domain[v]);
        Factor out{scope, std::vector<Weight>(cells, INF)};
        Record rec{x, scope, std::vector<int>(cells, 0)};
        // Strides of every bucket factor for the new scope and for x.
        const int k = static_cast<int>(scope.size());
        std::vector<std::vector<size_t>> stride(bucket.size(), std::vector<size_t>(k, 0));
        std::vector<size_t> strideX(bucket.size(), 0);
        for (size_t fi = 0; fi < bucket.size(); ++fi) {
            size_t st = 1;
            for (int pos = static_cast<int>(bucket[fi].scope.size()) - 1; pos >= 0; --pos) {
                int v = bucket[fi].scope[pos];
                if (v == x) strideX[fi] = st;
                else stride[fi][std::lower_bound(scope.begin(), scope.end(), v) - scope.begin()] = st;
                st *= static_cast<size_t>(domain[v]);
            }
        }
        std::vector<int> val(k, 0);
        std::vector<size_t> base(bucket.size(), 0);
        for (size_t cell = 0; cell < cells; ++cell) {
            Weight best = INF;
            int arg = 0;
            for (int xv = 0; xv < domain[x]; ++xv) {
                Weight sum = Weight::zero();
                for (size_t fi = 0; fi < bucket.size() && !sum.isInf(); ++fi)
                    sum = sum + bucket[fi].table[base[fi] + strideX[fi] * xv];
                if (sum < best) {
                    best = sum;
                    arg = xv;
                }
            }
            out.table[cell] = best;
            rec.argmin[cell] = arg;
            // Odometer over the scope, last variable fastest.
            for (int pos = k - 1; pos >= 0; --pos) {
                int v = scope[pos];
                for (size_t fi = 0; fi < bucket.size(); ++fi) base[fi] += stride[fi][pos];
                if (++val[pos] < domain[v]) break;
                for (size_t fi = 0; fi < bucket.size(); ++fi) base[fi] -= stride[fi][pos] * domain[v];
                val[pos] = 0;
            }
        }
        rest.push_back(std::move(out));
        records.push_back(std::move(rec));
        factors = std::move(rest);
    }
    EliminationResult res;
    res.value = Weight::zero();
    for (const auto& f : factors) res.value = res.value + f.table.at(0);
    if (res.value.isInf()) return res;
    res.assignment.assign(n, 0);
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        size_t cell = 0;
        for (int v : it->scope) cell = cell * domain[v] + res.assignment[v];
        res.assignment[it->var] = it->argmin[cell];
    }
    return res;
}

// Leaf-first elimination order read off a tree decomposition.
inline std::vector<int> orderFromDecomposition(const TreeDecomposition& td, int n) {
    const int b = static_cast<int>(td.bags.size());
    std::vector<std::vector<int>> adj(b);
    for (auto [x, y] : td.treeEdges) {
        adj[x].push_back(y);
        adj[y].push_back(x);
    }
    std::vector<int> deg(b), order;
    std::vector<char> gone(b, 0), placed(n, 0);
    for (int i = 0; i < b; ++i) deg[i] = static_cast<int>(adj[i].size());
    for (int round = 0; round < b; ++round) {
        int leaf = -1;
        for (int i = 0; i < b && leaf < 0; ++i)
            if (!gone[i] && deg[i] <= 1) leaf = i;
        if (leaf < 0) break;
        gone[leaf] = 1;
        int parent = -1;
        for (int y : adj[leaf])
            if (!gone[y]) parent = y;
        std::vector<int> priv;
        for (int v : td.bags[leaf])
            if (!placed[v] && (parent < 0 || !std::binary_search(td.bags[parent].begin(), td.bags[parent].end(), v)))
                priv.push_back(v);
        std::sort(priv.begin(), priv.end());
        for (int v : priv) {
            placed[v] = 1;
            order.push_back(v);
        }
        if (parent >= 0) --deg[parent];
    }
    for (int v = 0; v < n; ++v)
        if (!placed[v]) order.push_back(v);
    return order;
}

}  // namespace detail

// Cheapest placement of C into parcels with arc trails following the given crossing plan.
// X is pinned by psi; td decomposes C - X with vertices renumbered in increasing id order.
inline std::optional<DiscretizedDual> solveDiscretizedEmbedding(const Setup& s, const DualTopology& c,
                                                                const std::vector<int>& x,
                                                                const std::vector<int>& psi,
                                                                const std::vector<std::vector<int>>& plan,
                                                                const TreeDecomposition& td) {
    const int P = s.parcels.parcelCount, n = c.vertexCount;
    if (plan.size() != c.arcs.size()) throw InputError("crossing plan must list one sequence per arc");
    if (psi.size() != x.size()) throw InputError("pinning must map every pinned vertex");
    std::vector<int> pinned(n, -1);
    for (size_t i = 0; i < x.size(); ++i) {
        if (psi[i] < 0 || psi[i] >= P || !s.parcels.special[psi[i]])
            throw InputError("pinned vertices must map to special parcels");
        pinned.at(x[i]) = psi[i];
    }
    std::vector<int> freeId(n, -1), freeVars;
    for (int v = 0; v < n; ++v)
        if (pinned[v] < 0) {
            freeId[v] = static_cast<int>(freeVars.size());
            freeVars.push_back(v);
        }
    const int nf = static_cast<int>(freeVars.size());
    {
        WeightedGraph rest(nf);
        for (auto [a, b] : c.arcs)
            if (freeId[a] >= 0 && freeId[b] >= 0) rest.addEdge(freeId[a], freeId[b], Weight(1));
        validateDecomposition(rest, td);
    }
    // Cost tables per arc from per-source trail runs.
    std::vector<std::vector<std::vector<std::optional<Trail>>>> trails(c.arcs.size());
    for (size_t ai = 0; ai < c.arcs.size(); ++ai) {
        trails[ai].resize(P);
        for (int p = 0; p < P; ++p) trails[ai][p] = minTrailsFrom(s, p, plan[ai]);
    }
    auto cost = [&](size_t ai, int p, int q) { return trails[ai][p][q] ? trails[ai][p][q]->weight : INF; };
    std::vector<int> domain(nf, P);
    std::vector<detail::Factor> factors;
    Weight fixed = Weight::zero();  // arcs between pinned vertices
    std::vector<std::vector<Weight>> unary(nf, std::vector<Weight>(P, Weight::zero()));  // arcs touching X
    for (size_t ai = 0; ai < c.arcs.size(); ++ai) {
        auto [a, b] = c.arcs[ai];
        if (pinned[a] >= 0 && pinned[b] >= 0) {
            fixed = fixed + cost(ai, pinned[a], pinned[b]);
        } else if (pinned[a] >= 0 || pinned[b] >= 0 || a == b) {
            int v = pinned[a] >= 0 ? b : a;
            for (int p = 0; p < P; ++p)
                unary[freeId[v]][p] = unary[freeId[v]][p] + (a == b ? cost(ai, p, p)
                                                              : pinned[a] >= 0 ? cost(ai, pinned[a], p)
                                                                               : cost(ai, p, pinned[b]));
        } else {
            detail::Factor f;
            int u = freeId[a], w = freeId[b];
            f.scope = {std::min(u, w), std::max(u, w)};
            f.table.resize(static_cast<size_t>(P) * P);
            for (int p = 0; p < P; ++p)
                for (int q = 0; q < P; ++q)
                    f.table[static_cast<size_t>(p) * P + q] = u < w ? cost(ai, p, q) : cost(ai, q, p);
            factors.push_back(std::move(f));
        }
    }
    for (int i = 0; i < nf; ++i) factors.push_back({{i}, unary[i]});
    if (fixed.isInf()) return std::nullopt;
    auto res = detail::eliminate(domain, std::move(factors), detail::orderFromDecomposition(td, nf));
    if (res.value.isInf()) return std::nullopt;
    DiscretizedDual dd;
    dd.topology = c;
    dd.phi.assign(n, 0);
    for (int v = 0; v < n; ++v) dd.phi[v] = pinned[v] >= 0 ? pinned[v] : res.assignment[freeId[v]];
    for (size_t ai = 0; ai < c.arcs.size(); ++ai) {
        dd.trails.push_back(*trails[ai][dd.phi[c.arcs[ai].first]][dd.phi[c.arcs[ai].second]]);
        dd.sigma.push_back(plan[ai]);
        dd.weight = dd.weight + dd.trails.back().weight;
    }
    return dd;
}


// A multicut dual inside a triangulated supergraph N of G. Its faces are the components of
// N minus the dual edges; added edges always belong to the dual.
struct MulticutDual {
    RotationEmbedding augmented;
    int originalEdges = 0;        // ids below this are G-edges
    EdgeSet dualEdges;            // ids in the augmented graph
    std::vector<int> faceOfVertex;
    int faceCount = 0;
    bool valid = false;
    std::string message;

    EdgeSet crossedG() const {
        EdgeSet out;
        for (int e : dualEdges)
            if (e < originalEdges) out.push_back(e);
        return out;
    }
};

namespace detail {

inline void insertBefore(std::vector<int>& rot, int slot, int e) {
    rot.insert(rot.begin() + slot, e);
}

// Connect components, then split every face longer than three by chords.
inline RotationEmbedding triangulate(RotationEmbedding emb) {
    auto comps = componentsOf(emb.graph, {});
    for (size_t c = 1; c < comps.blocks.size(); ++c) {
        int u = comps.blocks[c - 1].front(), v = comps.blocks[c].front();
        int e = emb.graph.addEdge(u, v, Weight::zero());
        emb.rotation[u].push_back(e);
        emb.rotation[v].push_back(e);
    }
    for (;;) {
        auto ft = traceFaces(emb);
        const Face* big = nullptr;
        for (const auto& f : ft.faces)
            if (f.walk.size() >= 4) {
                big = &f;
                break;
            }
        if (!big) break;
        auto idx = indexRotation(emb);
        Dart d0 = big->walk[0], d2 = big->walk[2];
        auto tail = [&](Dart d) { return idx.vertexOfEnd[d.id()]; };
        int u = tail(d0), w = tail(d2);
        int su = idx.posOfEnd[d0.id()], sw = idx.posOfEnd[d2.id()];
        int e = emb.graph.addEdge(u, w, Weight::zero());
        if (u == w) {
            // Insert the later slot first so the earlier index stays valid.
            insertBefore(emb.rotation[u], std::max(su, sw), e);
            insertBefore(emb.rotation[u], std::min(su, sw), e);
        } else {
            insertBefore(emb.rotation[u], su, e);
            insertBefore(emb.rotation[w], sw, e);
        }
    }
    return emb;
}

inline void evaluateDual(MulticutDual& md, const DemandPattern& pattern) {
    auto comps = componentsOf(md.augmented.graph, md.dualEdges);
    md.faceOfVertex = comps.label;
    md.faceCount = static_cast<int>(comps.blocks.size());
    md.valid = true;
    md.message.clear();
    for (auto [a, b] : pattern.demands)
        if (comps.label[a] == comps.label[b]) {
            md.valid = false;
            md.message = "terminals " + std::to_string(a) + " and " + std::to_string(b) + " share a face";
            return;
        }
}

}  // namespace detail

inline MulticutDual dualFromMulticut(const RotationEmbedding& emb, const DemandPattern& pattern, const EdgeSet& cut) {
    MulticutInstance probe;
    probe.graph = emb.graph;
    probe.pattern = pattern;
    if (!isMulticut(probe, cut)) throw InputError("edge set is not a multicut");
    if (traceFaces(emb).genus != 0) throw UnsupportedInput("multicut duals are built for plane embeddings");
    MulticutDual md;
    md.originalEdges = emb.graph.edgeCount();
    md.augmented = detail::triangulate(emb);
    md.dualEdges = canonicalizeSolution(cut);
    for (int e = md.originalEdges; e < md.augmented.graph.edgeCount(); ++e) md.dualEdges.push_back(e);
    detail::evaluateDual(md, pattern);
    return md;
}

// Drop dual edges in ascending id while the dual stays valid.
inline MulticutDual minimizeDual(const MulticutDual& in, const DemandPattern& pattern) {
    MulticutDual md = in;
    if (!md.valid) throw InputError("only valid duals can be minimized");
    for (int e : in.dualEdges) {
        MulticutDual trial = md;
        trial.dualEdges.erase(std::find(trial.dualEdges.begin(), trial.dualEdges.end(), e));
        detail::evaluateDual(trial, pattern);
        if (trial.valid) md = std::move(trial);
    }
    std::vector<char> hasTerminal(md.faceCount, 0);
    for (int v : pattern.terminals) hasTerminal[md.faceOfVertex[v]] = 1;
    for (int f = 0; f < md.faceCount; ++f)
        if (!hasTerminal[f]) throw std::logic_error("minimized dual has a face without terminals");
    return md;
}

// The dual as an abstract graph on the faces of the augmented embedding it touches.
inline WeightedGraph dualAsGraph(const MulticutDual& md) {
    auto ft = traceFaces(md.augmented);
    std::vector<int> id(ft.faces.size(), -1);
    WeightedGraph c;
    for (int e : md.dualEdges) {
        int f = ft.faceOfDart[2 * e], g = ft.faceOfDart[2 * e + 1];
        for (int x : {f, g})
            if (id[x] < 0) id[x] = c.addVertex();
        c.addEdge(id[f], id[g], md.augmented.graph.edges[e].w);
    }
    return c;
}

// Contract degree-2 vertices into their arcs; a pure cycle becomes one vertex with a loop.
inline DualTopology suppressDegreeTwo(const WeightedGraph& g) {
    const int n = g.vertexCount;
    auto inc = g.incidence();
    std::vector<int> deg(n, 0);
    for (const auto& e : g.edges) {
        ++deg[e.a];
        ++deg[e.b];
    }
    std::vector<char> keep(n, 0);
    for (int v = 0; v < n; ++v) keep[v] = deg[v] != 2;
    // Every cycle made only of degree-2 vertices keeps its smallest vertex.
    std::vector<char> seen(n, 0);
    for (int v = 0; v < n; ++v) {
        if (deg[v] != 2 || seen[v]) continue;
        std::vector<int> stack{v}, comp;
        bool anchored = false;
        seen[v] = 1;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            comp.push_back(x);
            for (int ei : inc[x]) {
                int y = g.edges[ei].a == x ? g.edges[ei].b : g.edges[ei].a;
                if (deg[y] != 2) anchored = true;
                else if (!seen[y]) {
                    seen[y] = 1;
                    stack.push_back(y);
                }
            }
        }
        if (!anchored) keep[*std::min_element(comp.begin(), comp.end())] = 1;
    }
    std::vector<int> newId(n, -1);
    DualTopology t;
    for (int v = 0; v < n; ++v)
        if (keep[v] && deg[v] > 0) newId[v] = t.vertexCount++;
    std::vector<char> used(g.edgeCount(), 0);
    for (int v = 0; v < n; ++v) {
        if (newId[v] < 0) continue;
        for (int start : inc[v]) {
            if (used[start]) continue;
            int x = v, ei = start;
            for (;;) {
                used[ei] = 1;
                const auto& e = g.edges[ei];
                int y = e.a == x ? e.b : e.a;
                if (newId[y] >= 0) {
                    t.arcs.emplace_back(newId[v], newId[y]);
                    break;
                }
                ei = inc[y][0] == ei ? inc[y][1] : inc[y][0];
                x = y;
            }
        }
    }
    return t;
}

}  // namespace mcwb

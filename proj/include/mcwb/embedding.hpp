#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "mcwb/graph.hpp"

namespace mcwb {

struct EmbeddingError : InputError {
    using InputError::InputError;
};

struct RotationEmbedding {
    WeightedGraph graph;
    std::vector<std::vector<int>> rotation;  // cyclic edge order per vertex; loops listed twice
};

inline RotationEmbedding embeddingOf(const MulticutInstance& inst) {
    if (!inst.rotation) throw EmbeddingError("instance carries no rotation system");
    return {inst.graph, *inst.rotation};
}

// A dart is an edge traversed away from one of its ends: id = 2*edge + end.
// End 0 sits at endpoint a, end 1 at endpoint b; for a loop, its first listing is end 0.
struct Dart {
    int edge = 0;
    int end = 0;
    int id() const { return 2 * edge + end; }
};

struct Face {
    int id = 0;
    std::vector<Dart> walk;     // empty for the face of an isolated vertex
    std::vector<int> vertices;  // distinct boundary vertices, sorted
};

struct FaceTrace {
    std::vector<Face> faces;
    std::vector<int> faceOfDart;      // indexed by dart id
    std::vector<int> component;       // component id per vertex
    std::vector<int> componentGenus;  // Euler genus per component
    int genus = 0;                    // sum over components
};

namespace detail {

struct RotationIndex {
    std::vector<int> vertexOfEnd;  // indexed by dart id: vertex where that end sits
    std::vector<int> posOfEnd;     // index inside that vertex's rotation
};

inline RotationIndex indexRotation(const RotationEmbedding& emb) {
    const auto& g = emb.graph;
    if (static_cast<int>(emb.rotation.size()) != g.vertexCount)
        throw EmbeddingError("rotation must list every vertex");
    RotationIndex idx;
    idx.vertexOfEnd.assign(2 * g.edgeCount(), -1);
    idx.posOfEnd.assign(2 * g.edgeCount(), -1);
    for (int v = 0; v < g.vertexCount; ++v) {
        const auto& rot = emb.rotation[v];
        for (int i = 0; i < static_cast<int>(rot.size()); ++i) {
            int e = rot[i];
            if (e < 0 || e >= g.edgeCount()) throw EmbeddingError("rotation names unknown edge " + std::to_string(e));
            const auto& ed = g.edges[e];
            int end;
            if (ed.a == ed.b) {
                if (v != ed.a) throw EmbeddingError("loop " + std::to_string(e) + " listed at a foreign vertex");
                end = idx.vertexOfEnd[2 * e] < 0 ? 0 : 1;
            } else if (v == ed.a) {
                end = 0;
            } else if (v == ed.b) {
                end = 1;
            } else {
                throw EmbeddingError("edge " + std::to_string(e) + " listed at a non-incident vertex");
            }
            if (idx.vertexOfEnd[2 * e + end] >= 0)
                throw EmbeddingError("edge " + std::to_string(e) + " listed too often at vertex " + std::to_string(v));
            idx.vertexOfEnd[2 * e + end] = v;
            idx.posOfEnd[2 * e + end] = i;
        }
    }
    for (int d = 0; d < 2 * g.edgeCount(); ++d)
        if (idx.vertexOfEnd[d] < 0) throw EmbeddingError("edge " + std::to_string(d / 2) + " missing from rotation");
    return idx;
}

}  // namespace detail

inline FaceTrace traceFaces(const RotationEmbedding& emb) {
    const auto& g = emb.graph;
    auto idx = detail::indexRotation(emb);
    FaceTrace ft;
    const int darts = 2 * g.edgeCount();
    ft.faceOfDart.assign(darts, -1);
    // Next dart: arrive at the far end of d, leave by the successor of that end.
    auto nextDart = [&](int d) {
        int far = d ^ 1;
        int v = idx.vertexOfEnd[far];
        const auto& rot = emb.rotation[v];
        int nextPos = (idx.posOfEnd[far] + 1) % static_cast<int>(rot.size());
        int e = rot[nextPos];
        // Which end of e sits at that rotation slot.
        int end = (idx.vertexOfEnd[2 * e] == v && idx.posOfEnd[2 * e] == nextPos) ? 0 : 1;
        return 2 * e + end;
    };
    for (int d0 = 0; d0 < darts; ++d0) {
        if (ft.faceOfDart[d0] >= 0) continue;
        Face f;
        f.id = static_cast<int>(ft.faces.size());
        int d = d0;
        do {
            ft.faceOfDart[d] = f.id;
            f.walk.push_back({d / 2, d % 2});
            f.vertices.push_back(idx.vertexOfEnd[d]);
            d = nextDart(d);
        } while (d != d0);
        std::sort(f.vertices.begin(), f.vertices.end());
        f.vertices.erase(std::unique(f.vertices.begin(), f.vertices.end()), f.vertices.end());
        ft.faces.push_back(std::move(f));
    }
    auto comps = componentsOf(g, {});
    ft.component = comps.label;
    for (int v = 0; v < g.vertexCount; ++v)
        if (emb.rotation[v].empty()) {
            Face f;
            f.id = static_cast<int>(ft.faces.size());
            f.vertices = {v};
            ft.faces.push_back(std::move(f));
        }
    const int nc = static_cast<int>(comps.blocks.size());
    std::vector<long> vc(nc, 0), ec(nc, 0), fc(nc, 0);
    for (int v = 0; v < g.vertexCount; ++v) ++vc[comps.label[v]];
    for (const auto& e : g.edges) ++ec[comps.label[e.a]];
    for (const auto& f : ft.faces) ++fc[comps.label[f.vertices.front()]];
    ft.componentGenus.resize(nc);
    for (int c = 0; c < nc; ++c) {
        long gen = 2 - vc[c] + ec[c] - fc[c];
        if (gen < 0) throw EmbeddingError("Euler characteristic exceeds 2: rotation is inconsistent");
        ft.componentGenus[c] = static_cast<int>(gen);
        ft.genus += static_cast<int>(gen);
    }
    return ft;
}

// One dual vertex per face, one dual edge per primal edge with the same weight and id.
inline WeightedGraph dualGraph(const RotationEmbedding& emb, const FaceTrace& ft) {
    WeightedGraph d(static_cast<int>(ft.faces.size()));
    for (int e = 0; e < emb.graph.edgeCount(); ++e)
        d.addEdge(ft.faceOfDart[2 * e], ft.faceOfDart[2 * e + 1], emb.graph.edges[e].w);
    return d;
}

inline WeightedGraph dualGraph(const RotationEmbedding& emb) { return dualGraph(emb, traceFaces(emb)); }

// Dual with the rotation induced by face boundary order.
inline RotationEmbedding dualEmbedding(const RotationEmbedding& emb) {
    auto ft = traceFaces(emb);
    RotationEmbedding d;
    d.graph = dualGraph(emb, ft);
    d.rotation.assign(ft.faces.size(), {});
    for (const auto& f : ft.faces)
        for (const auto& dart : f.walk) d.rotation[f.id].push_back(dart.edge);
    return d;
}

struct PlaneReport {
    bool ok = true;
    int genus = 0;
    std::vector<int> componentGenus;
    std::string message;
};

inline PlaneReport validatePlane(const RotationEmbedding& emb) {
    PlaneReport r;
    try {
        auto ft = traceFaces(emb);
        r.genus = ft.genus;
        r.componentGenus = ft.componentGenus;
        r.ok = ft.genus == 0;
        if (!r.ok) r.message = "Euler genus " + std::to_string(ft.genus);
    } catch (const EmbeddingError& e) {
        r.ok = false;
        r.genus = -1;
        r.message = e.what();
    }
    return r;
}

struct FaceCover {
    std::vector<int> faces;
    bool exact = true;
};

// Fewest faces whose boundaries contain every terminal; exhaustive up to `cap` faces, greedy beyond.
inline FaceCover minFaceCover(const RotationEmbedding& emb, const FaceTrace& ft, const std::vector<int>& terminals,
                              int cap = 20) {
    FaceCover fc;
    if (terminals.empty()) return fc;
    const int nf = static_cast<int>(ft.faces.size());
    std::vector<std::vector<int>> faceTerms(nf);
    std::vector<char> isTerm(emb.graph.vertexCount, 0);
    for (int t : terminals) isTerm[t] = 1;
    for (int f = 0; f < nf; ++f)
        for (int v : ft.faces[f].vertices)
            if (isTerm[v]) faceTerms[f].push_back(v);
    auto covers = [&](const std::vector<int>& fs) {
        std::vector<char> hit(emb.graph.vertexCount, 0);
        for (int f : fs)
            for (int v : faceTerms[f]) hit[v] = 1;
        for (int t : terminals)
            if (!hit[t]) return false;
        return true;
    };
    if (nf <= cap) {
        for (int k = 1; k <= nf; ++k) {
            std::vector<int> idx(k);
            for (int i = 0; i < k; ++i) idx[i] = i;
            while (true) {
                if (covers(idx)) {
                    fc.faces = idx;
                    return fc;
                }
                int i = k - 1;
                while (i >= 0 && idx[i] == nf - k + i) --i;
                if (i < 0) break;
                ++idx[i];
                for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
        throw EmbeddingError("a terminal lies on no face");
    }
    fc.exact = false;
    std::vector<char> hit(emb.graph.vertexCount, 0);
    std::size_t left = 0;
    for (int t : terminals) left += !hit[t]++;
    std::fill(hit.begin(), hit.end(), 0);
    while (left > 0) {
        int best = -1, gain = 0;
        for (int f = 0; f < nf; ++f) {
            int cnt = 0;
            for (int v : faceTerms[f]) cnt += !hit[v];
            if (cnt > gain) { gain = cnt; best = f; }
        }
        if (best < 0) throw EmbeddingError("a terminal lies on no face");
        for (int v : faceTerms[best])
            if (!hit[v]) { hit[v] = 1; --left; }
        fc.faces.push_back(best);
    }
    std::sort(fc.faces.begin(), fc.faces.end());
    return fc;
}

}  // namespace mcwb

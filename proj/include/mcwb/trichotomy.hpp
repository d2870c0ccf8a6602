#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mcwb/pattern_graph.hpp"

namespace mcwb {

inline std::vector<int> nonIsolated(const PatternGraph& h) {
    std::vector<int> keep;
    for (int v = 0; v < h.n; ++v)
        if (h.degree(v) > 0) keep.push_back(v);
    return keep;
}

// Connected components restricted to `verts` (sorted); components ordered by smallest member.
inline std::vector<std::vector<int>> patternComponents(const PatternGraph& h, const std::vector<int>& verts) {
    std::vector<char> in(h.n, 0), seen(h.n, 0);
    for (int v : verts) in[v] = 1;
    std::vector<std::vector<int>> comps;
    for (int s : verts) {
        if (seen[s]) continue;
        std::vector<int> comp{s}, stack{s};
        seen[s] = 1;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int y = 0; y < h.n; ++y)
                if (in[y] && !seen[y] && h.has(x, y)) {
                    seen[y] = 1;
                    comp.push_back(y);
                    stack.push_back(y);
                }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(comp);
    }
    return comps;
}

// Bipartition (A, B) of `verts` if H[verts] is complete bipartite with A containing the smallest vertex.
inline std::optional<std::pair<std::vector<int>, std::vector<int>>> asBiclique(const PatternGraph& h,
                                                                              const std::vector<int>& verts) {
    if (verts.empty()) return std::pair<std::vector<int>, std::vector<int>>{};
    std::vector<int> a, b;
    int s = verts[0];
    for (int v : verts) (v == s || !h.has(s, v) ? a : b).push_back(v);
    for (int x : a)
        for (int y : a)
            if (x != y && h.has(x, y)) return std::nullopt;
    for (int x : b)
        for (int y : b)
            if (x != y && h.has(x, y)) return std::nullopt;
    for (int x : a)
        for (int y : b)
            if (!h.has(x, y)) return std::nullopt;
    return std::make_pair(a, b);
}

inline bool isTrivialPattern(const PatternGraph& h) {
    if (h.edgeCount() <= 2) return true;
    auto core = nonIsolated(h);
    auto bc = asBiclique(h, core);
    return bc && !bc->first.empty() && !bc->second.empty();
}

using P4 = std::array<int, 4>;
using Triangle = std::array<int, 3>;

// Induced paths v1v2v3v4 with v1 < v4 among `allowed` vertices, in lexicographic tuple order.
inline std::optional<P4> firstInducedP4(const PatternGraph& h, const std::vector<char>& allowed) {
    for (int a = 0; a < h.n; ++a) {
        if (!allowed[a]) continue;
        for (int b = 0; b < h.n; ++b) {
            if (!allowed[b] || !h.has(a, b)) continue;
            for (int c = 0; c < h.n; ++c) {
                if (!allowed[c] || c == a || !h.has(b, c) || h.has(a, c)) continue;
                for (int d = a + 1; d < h.n; ++d) {
                    if (!allowed[d] || d == b || !h.has(c, d) || h.has(a, d) || h.has(b, d)) continue;
                    return P4{a, b, c, d};
                }
            }
        }
    }
    return std::nullopt;
}

inline std::optional<Triangle> firstTriangle(const PatternGraph& h, const std::vector<char>& allowed) {
    for (int a = 0; a < h.n; ++a)
        for (int b = a + 1; b < h.n; ++b)
            for (int c = b + 1; c < h.n; ++c)
                if (allowed[a] && allowed[b] && allowed[c] && h.has(a, b) && h.has(b, c) && h.has(a, c))
                    return Triangle{a, b, c};
    return std::nullopt;
}

struct CographReport {
    bool isCograph = true;
    std::optional<P4> inducedP4;
    std::vector<P4> maximalP4Packing;
    std::vector<Triangle> maximalTrianglePacking;
};

inline CographReport cographAnalysis(const PatternGraph& h) {
    CographReport r;
    std::vector<char> allowed(h.n, 1);
    r.inducedP4 = firstInducedP4(h, allowed);
    r.isCograph = !r.inducedP4;
    while (auto p = firstInducedP4(h, allowed)) {
        r.maximalP4Packing.push_back(*p);
        for (int v : *p) allowed[v] = 0;
    }
    std::fill(allowed.begin(), allowed.end(), 1);
    while (auto t = firstTriangle(h, allowed)) {
        r.maximalTrianglePacking.push_back(*t);
        for (int v : *t) allowed[v] = 0;
    }
    return r;
}

struct BicliqueComponent {
    bool isolated = false;
    std::vector<int> sideA;  // holds the smallest vertex; the isolated vertex when isolated
    std::vector<int> sideB;
};

struct StructureViolation {
    std::optional<P4> inducedP4;
    std::optional<Triangle> triangle;
};

using BipartiteCographResult = std::variant<std::vector<BicliqueComponent>, StructureViolation>;

inline BipartiteCographResult bipartiteCographStructure(const PatternGraph& h) {
    std::vector<char> allowed(h.n, 1);
    if (auto p = firstInducedP4(h, allowed)) return StructureViolation{p, std::nullopt};
    if (auto t = firstTriangle(h, allowed)) return StructureViolation{std::nullopt, t};
    std::vector<int> all(h.n);
    for (int v = 0; v < h.n; ++v) all[v] = v;
    std::vector<BicliqueComponent> out;
    for (auto& comp : patternComponents(h, all)) {
        if (comp.size() == 1) {
            out.push_back({true, comp, {}});
            continue;
        }
        auto bc = asBiclique(h, comp);
        if (!bc) throw std::logic_error("bipartite cograph component is not a biclique");
        out.push_back({false, bc->first, bc->second});
    }
    return out;
}

struct ExtendedBicliquePartition {
    std::vector<int> b1, b2, isolated, deleted;
    int mu() const { return static_cast<int>(deleted.size()); }
};

inline bool isExtendedBicliquePartition(const PatternGraph& h, const ExtendedBicliquePartition& p) {
    std::vector<int> tag(h.n, -1);
    auto mark = [&](const std::vector<int>& s, int t) {
        for (int v : s) {
            if (v < 0 || v >= h.n || tag[v] >= 0) return false;
            tag[v] = t;
        }
        return true;
    };
    if (!mark(p.b1, 1) || !mark(p.b2, 2) || !mark(p.isolated, 3) || !mark(p.deleted, 4)) return false;
    for (int v = 0; v < h.n; ++v)
        if (tag[v] < 0) return false;
    for (int a = 0; a < h.n; ++a)
        for (int b = a + 1; b < h.n; ++b) {
            if (tag[a] == 4 || tag[b] == 4) continue;
            bool cross = (tag[a] == 1 && tag[b] == 2) || (tag[a] == 2 && tag[b] == 1);
            if (h.has(a, b) != cross) return false;
        }
    return true;
}

// Partition of H - deleted if it is an extended biclique; edgeless graphs qualify.
inline std::optional<ExtendedBicliquePartition> extendedBicliqueOf(const PatternGraph& h,
                                                                   const std::vector<int>& deleted) {
    std::vector<char> gone(h.n, 0);
    for (int v : deleted) gone[v] = 1;
    ExtendedBicliquePartition p;
    p.deleted = deleted;
    std::vector<int> core;
    for (int v = 0; v < h.n; ++v) {
        if (gone[v]) continue;
        bool any = false;
        for (int u = 0; u < h.n; ++u)
            if (!gone[u] && h.has(u, v)) any = true;
        (any ? core : p.isolated).push_back(v);
    }
    auto bc = asBiclique(h, core);
    if (!bc) return std::nullopt;
    p.b1 = bc->first;
    p.b2 = bc->second;
    return p;
}

struct ExtendedBicliqueDistance {
    int mu = 0;
    ExtendedBicliquePartition partition;
    bool exact = true;  // false: certified upper bound only
};

inline ExtendedBicliqueDistance extendedBicliqueDistance(const PatternGraph& h, int exactCap = 16) {
    ExtendedBicliqueDistance r;
    if (h.n <= exactCap) {
        // Deletion sets by increasing size, each size in lexicographic order.
        for (int k = 0; k <= h.n; ++k) {
            std::vector<int> idx(k);
            for (int i = 0; i < k; ++i) idx[i] = i;
            while (true) {
                if (auto p = extendedBicliqueOf(h, idx)) {
                    r.mu = k;
                    r.partition = *p;
                    return r;
                }
                int i = k - 1;
                while (i >= 0 && idx[i] == h.n - k + i) --i;
                if (i < 0) break;
                ++idx[i];
                for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
    }
    // Bound: drop a P4 packing, then a triangle packing, then the smaller side of every biclique but the largest.
    r.exact = false;
    auto rep = cographAnalysis(h);
    std::vector<char> gone(h.n, 0);
    for (auto& p : rep.maximalP4Packing)
        for (int v : p) gone[v] = 1;
    while (true) {
        auto t = firstTriangle(h, [&] {
            std::vector<char> a(h.n);
            for (int v = 0; v < h.n; ++v) a[v] = !gone[v];
            return a;
        }());
        if (!t) break;
        for (int v : *t) gone[v] = 1;
    }
    std::vector<int> rest;
    for (int v = 0; v < h.n; ++v)
        if (!gone[v]) rest.push_back(v);
    std::vector<std::vector<int>> smaller;
    for (auto& comp : patternComponents(h, rest)) {
        if (comp.size() < 2) continue;
        auto bc = asBiclique(h, comp);
        if (!bc) throw std::logic_error("residual component is not a biclique");
        smaller.push_back(bc->first.size() <= bc->second.size() ? bc->first : bc->second);
    }
    std::size_t keepIdx = 0;
    for (std::size_t i = 0; i < smaller.size(); ++i)
        if (smaller[i].size() > smaller[keepIdx].size()) keepIdx = i;
    for (std::size_t i = 0; i < smaller.size(); ++i)
        if (i != keepIdx)
            for (int v : smaller[i]) gone[v] = 1;
    std::vector<int> del;
    for (int v = 0; v < h.n; ++v)
        if (gone[v]) del.push_back(v);
    auto p = extendedBicliqueOf(h, del);
    if (!p) throw std::logic_error("bound pipeline did not yield an extended biclique");
    r.mu = static_cast<int>(del.size());
    r.partition = *p;
    return r;
}

namespace detail {

inline ProjectionWitness witnessOn(const PatternGraph& h, const std::vector<int>& support,
                                   const std::vector<std::pair<int, int>>& merges) {
    ProjectionWitness w;
    w.source = h;
    std::vector<char> keep(h.n, 0);
    for (int v : support) keep[v] = 1;
    for (int v = 0; v < h.n; ++v)
        if (!keep[v]) w.steps.push_back(ProjectionStep::remove(v));
    for (auto [a, b] : merges) w.steps.push_back(ProjectionStep::identify(a, b));
    w.target = completeGraph(3);
    return w;
}

inline std::pair<int, int> firstEdgeIn(const PatternGraph& h, const std::vector<int>& comp) {
    for (int a : comp)
        for (int b : comp)
            if (a < b && h.has(a, b)) return {a, b};
    throw std::logic_error("component has no edge");
}

// Path u1 u2 u3 inside a component with at least three vertices.
inline std::array<int, 3> firstPath3In(const PatternGraph& h, const std::vector<int>& comp) {
    for (int m : comp)
        for (int a : comp)
            for (int b : comp)
                if (a < b && a != m && b != m && h.has(a, m) && h.has(m, b)) return {a, m, b};
    throw std::logic_error("component has no path on three vertices");
}

}  // namespace detail

// Constructive triangle projection following the case analysis for nontrivial patterns.
inline std::optional<ProjectionWitness> triangleWitness(const PatternGraph& h) {
    if (isTrivialPattern(h)) return std::nullopt;
    std::vector<char> all(h.n, 1);
    if (auto p = firstInducedP4(h, all)) {
        auto [v1, v2, v3, v4] = *p;
        return detail::witnessOn(h, {v1, v2, v3, v4}, {{v1, v4}});
    }
    if (auto t = firstTriangle(h, all)) return detail::witnessOn(h, {(*t)[0], (*t)[1], (*t)[2]}, {});
    std::vector<std::vector<int>> nontrivial;
    for (auto& c : patternComponents(h, nonIsolated(h))) nontrivial.push_back(c);
    if (nontrivial.size() >= 3) {
        auto [u1, v1] = detail::firstEdgeIn(h, nontrivial[0]);
        auto [u2, v2] = detail::firstEdgeIn(h, nontrivial[1]);
        auto [u3, v3] = detail::firstEdgeIn(h, nontrivial[2]);
        return detail::witnessOn(h, {u1, v1, u2, v2, u3, v3}, {{u1, v2}, {v1, u3}, {u2, v3}});
    }
    if (nontrivial.size() == 2) {
        auto big = nontrivial[0].size() >= 3 ? nontrivial[0] : nontrivial[1];
        auto other = nontrivial[0].size() >= 3 ? nontrivial[1] : nontrivial[0];
        if (big.size() >= 3) {
            auto [u1, u2, u3] = detail::firstPath3In(h, big);
            auto [w1, w2] = detail::firstEdgeIn(h, other);
            return detail::witnessOn(h, {u1, u2, u3, w1, w2}, {{u1, w1}, {u3, w2}});
        }
    }
    throw std::logic_error("nontrivial pattern fell through every case");
}

// Up to t triangle projections on pairwise disjoint vertex sets, or none if fewer are found.
inline std::optional<std::vector<ProjectionWitness>> disjointTriangleWitnesses(const PatternGraph& h, int t) {
    std::vector<ProjectionWitness> out;
    auto done = [&] { return static_cast<int>(out.size()) >= t; };
    auto finish = [&]() -> std::optional<std::vector<ProjectionWitness>> {
        if (!done()) return std::nullopt;
        out.resize(t);
        return out;
    };
    std::vector<char> allowed(h.n, 1);
    while (!done()) {
        auto p = firstInducedP4(h, allowed);
        if (!p) break;
        for (int v : *p) allowed[v] = 0;
        out.push_back(detail::witnessOn(h, {(*p)[0], (*p)[1], (*p)[2], (*p)[3]}, {{(*p)[0], (*p)[3]}}));
    }
    while (!done()) {
        auto tr = firstTriangle(h, allowed);
        if (!tr) break;
        for (int v : *tr) allowed[v] = 0;
        out.push_back(detail::witnessOn(h, {(*tr)[0], (*tr)[1], (*tr)[2]}, {}));
    }
    if (done()) return finish();
    std::vector<int> rest;
    for (int v = 0; v < h.n; ++v)
        if (allowed[v]) rest.push_back(v);
    std::vector<std::vector<int>> comps;
    for (auto& c : patternComponents(h, rest))
        if (c.size() >= 2) comps.push_back(c);
    std::size_t used = 0;
    // Three nonsingular components per triangle.
    while (!done() && comps.size() - used >= 3) {
        auto [u1, v1] = detail::firstEdgeIn(h, comps[used]);
        auto [u2, v2] = detail::firstEdgeIn(h, comps[used + 1]);
        auto [u3, v3] = detail::firstEdgeIn(h, comps[used + 2]);
        out.push_back(detail::witnessOn(h, {u1, v1, u2, v2, u3, v3}, {{u1, v2}, {v1, u3}, {u2, v3}}));
        used += 3;
    }
    // Two bicliques: five-vertex subpatterns {x1^(2i-1), x1^(2i), x2^i, x3^i, x4^i}.
    if (!done() && comps.size() - used == 2) {
        auto c1 = asBiclique(h, comps[used]);
        auto c2 = asBiclique(h, comps[used + 1]);
        if (c1 && c2) {
            std::vector<std::array<std::vector<int>, 4>> choices;
            for (int s1 = 0; s1 < 2; ++s1)
                for (int first = 0; first < 2; ++first) {
                    auto left = first == 0 ? *c1 : *c2;
                    auto right = first == 0 ? *c2 : *c1;
                    auto x1 = s1 == 0 ? left.first : left.second;
                    auto x2 = s1 == 0 ? left.second : left.first;
                    choices.push_back({x1, x2, right.first, right.second});
                }
            auto capacity = [](const std::array<std::vector<int>, 4>& x) {
                return std::min({x[0].size() / 2, x[1].size(), x[2].size(), x[3].size()});
            };
            auto best = *std::max_element(choices.begin(), choices.end(), [&](const auto& a, const auto& b) {
                return capacity(a) < capacity(b);
            });
            for (std::size_t i = 0; i < capacity(best) && !done(); ++i) {
                int a = best[0][2 * i], b = best[0][2 * i + 1];
                int m = best[1][i], c = best[2][i], d = best[3][i];
                out.push_back(detail::witnessOn(h, {a, b, m, c, d}, {{a, c}, {b, d}}));
            }
        }
    }
    return finish();
}

struct TrichotomyVerdict {
    enum class Outcome { CliqueProjection, TripartiteProjection, BoundedDistance, Inconclusive };
    Outcome outcome = Outcome::BoundedDistance;
    int t = 0;
    std::optional<ProjectionWitness> witness;
    std::optional<ExtendedBicliqueDistance> distance;
    std::string note;
};

namespace detail {

// Searches for an independent-set quotient of an induced subgraph equal to `target`, whose
// vertices are grouped into interchangeable parts (classes inside a part are pairwise nonadjacent).
// Returns class index per vertex (-1 dropped), or nullopt; sets `exhausted` when the node budget runs out.
inline std::optional<std::vector<int>> findQuotient(const PatternGraph& h, const std::vector<int>& partOfClass,
                                                     long budget, bool& exhausted) {
    const int k = static_cast<int>(partOfClass.size());
    PatternGraph target(k);
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b)
            if (partOfClass[a] != partOfClass[b]) target.addEdge(a, b);
    exhausted = false;
    if (h.edgeCount() < target.edgeCount()) return std::nullopt;
    std::vector<int> verts = nonIsolated(h);
    const int nv = static_cast<int>(verts.size());
    if (nv < k) return std::nullopt;
    std::vector<int> cls(h.n, -1);
    std::vector<int> size(k, 0);
    // satisfied[a][b]: an edge already joins classes a and b.
    std::vector<std::vector<int>> linked(k, std::vector<int>(k, 0));
    int unsatisfied = target.edgeCount();
    std::vector<int> firstOfPart;
    for (int c = 0; c < k; ++c)
        if (c == 0 || partOfClass[c] != partOfClass[c - 1]) firstOfPart.push_back(c);
    // Edges with an endpoint at position >= i.
    std::vector<int> edgesFrom(nv + 1, 0);
    for (int i = nv - 1; i >= 0; --i) {
        int back = 0;
        for (int j = 0; j < i; ++j)
            if (h.has(verts[i], verts[j])) ++back;
        edgesFrom[i] = edgesFrom[i + 1] + back;
    }
    long nodes = 0;
    int empty = k;
    auto rec = [&](auto&& self, int i) -> bool {
        if (++nodes > budget) {
            exhausted = true;
            return false;
        }
        if (unsatisfied == 0 && empty == 0) return true;
        if (i == nv) return false;
        if (nv - i < empty || unsatisfied > edgesFrom[i]) return false;
        int v = verts[i];
        for (int c = 0; c < k && !exhausted; ++c) {
            // Symmetry breaking: a class opens only after its predecessor in the same part,
            // and the first class of a part only after the previous part opened.
            if (size[c] == 0 && c > 0) {
                if (partOfClass[c] == partOfClass[c - 1]) {
                    if (size[c - 1] == 0) continue;
                } else {
                    int prevFirst = firstOfPart[partOfClass[c] - 1];
                    if (size[prevFirst] == 0) continue;
                }
            }
            bool ok = true;
            for (int j = 0; j < i && ok; ++j) {
                int u = verts[j];
                if (cls[u] < 0 || !h.has(u, v)) continue;
                if (cls[u] == c || !target.has(cls[u], c)) ok = false;
            }
            if (!ok) continue;
            std::vector<std::pair<int, int>> newly;
            for (int j = 0; j < i; ++j) {
                int u = verts[j];
                if (cls[u] < 0 || !h.has(u, v)) continue;
                int a = std::min(cls[u], c), b = std::max(cls[u], c);
                if (!linked[a][b]) {
                    linked[a][b] = 1;
                    newly.emplace_back(a, b);
                }
            }
            unsatisfied -= static_cast<int>(newly.size());
            if (size[c]++ == 0) --empty;
            cls[v] = c;
            if (self(self, i + 1)) return true;
            cls[v] = -1;
            if (--size[c] == 0) ++empty;
            unsatisfied += static_cast<int>(newly.size());
            for (auto [a, b] : newly) linked[a][b] = 0;
        }
        if (exhausted) return false;
        return self(self, i + 1);
    };
    if (!rec(rec, 0)) return std::nullopt;
    return cls;
}

inline ProjectionWitness quotientWitness(const PatternGraph& h, const std::vector<int>& cls, PatternGraph target) {
    ProjectionWitness w;
    w.source = h;
    std::vector<int> rep(target.n, -1);
    for (int v = 0; v < h.n; ++v)
        if (cls[v] < 0) w.steps.push_back(ProjectionStep::remove(v));
    for (int v = 0; v < h.n; ++v) {
        if (cls[v] < 0) continue;
        if (rep[cls[v]] < 0) rep[cls[v]] = v;
        else w.steps.push_back(ProjectionStep::identify(rep[cls[v]], v));
    }
    w.target = std::move(target);
    return w;
}

}  // namespace detail

// Classification at fixed t: small distance (mu < t) first, then K_{t,t,t}, then K_t, else the distance.
inline TrichotomyVerdict classifyPattern(const PatternGraph& h, int t, long searchBudget = 20'000'000) {
    if (t < 1 || t > 4) throw CapExceeded("classifyPattern supports 1 <= t <= 4");
    if (h.n > 16) throw CapExceeded("classifyPattern supports at most 16 vertices");
    TrichotomyVerdict v;
    v.t = t;
    auto dist = extendedBicliqueDistance(h);
    if (dist.mu < t) {
        v.outcome = TrichotomyVerdict::Outcome::BoundedDistance;
        v.distance = dist;
        return v;
    }
    bool capped = false;
    std::vector<int> tri;
    for (int p = 0; p < 3; ++p)
        for (int i = 0; i < t; ++i) tri.push_back(p);
    bool ex = false;
    if (auto cls = detail::findQuotient(h, tri, searchBudget, ex)) {
        v.outcome = TrichotomyVerdict::Outcome::TripartiteProjection;
        v.witness = detail::quotientWitness(h, *cls, completeMultipartite({t, t, t}));
        return v;
    }
    capped |= ex;
    std::vector<int> clique(t);
    for (int i = 0; i < t; ++i) clique[i] = i;
    if (auto cls = detail::findQuotient(h, clique, searchBudget, ex)) {
        v.outcome = TrichotomyVerdict::Outcome::CliqueProjection;
        v.witness = detail::quotientWitness(h, *cls, completeGraph(t));
        return v;
    }
    capped |= ex;
    v.distance = dist;
    if (capped) {
        v.outcome = TrichotomyVerdict::Outcome::Inconclusive;
        v.note = "projection search budget exhausted; distance reported as partial verdict";
    } else {
        v.outcome = TrichotomyVerdict::Outcome::BoundedDistance;
    }
    return v;
}

inline const char* outcomeName(TrichotomyVerdict::Outcome o) {
    switch (o) {
        case TrichotomyVerdict::Outcome::CliqueProjection: return "clique-projection";
        case TrichotomyVerdict::Outcome::TripartiteProjection: return "tripartite-projection";
        case TrichotomyVerdict::Outcome::BoundedDistance: return "bounded-distance";
        case TrichotomyVerdict::Outcome::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

inline Json witnessToJson(const ProjectionWitness& w) {
    return {{"source", patternToJson(w.source)}, {"steps", stepsToJson(w.steps)}, {"target", patternToJson(w.target)}};
}

inline Json partitionToJson(const ExtendedBicliquePartition& p) {
    return {{"b1", p.b1}, {"b2", p.b2}, {"isolated", p.isolated}, {"deleted", p.deleted}};
}

inline Json verdictToJson(const TrichotomyVerdict& v) {
    Json j{{"outcome", outcomeName(v.outcome)}, {"t", v.t}};
    if (v.witness) j["witness"] = witnessToJson(*v.witness);
    if (v.distance)
        j["distance"] = {{"mu", v.distance->mu}, {"exact", v.distance->exact},
                         {"partition", partitionToJson(v.distance->partition)}};
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

}  // namespace mcwb

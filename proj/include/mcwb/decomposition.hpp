#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mcwb/graph.hpp"
#include "mcwb/io.hpp"

namespace mcwb {

struct TreeDecomposition {
    std::vector<std::vector<int>> bags;
    std::vector<std::pair<int, int>> treeEdges;

    int width() const {
        int w = -1;
        for (const auto& b : bags) w = std::max(w, static_cast<int>(b.size()) - 1);
        return w;
    }
};

struct DecompositionError : InputError {
    using InputError::InputError;
};

// Throws DecompositionError naming the first violated property.
inline void validateDecomposition(const WeightedGraph& g, const TreeDecomposition& td) {
    const int nb = static_cast<int>(td.bags.size());
    if (nb == 0) {
        if (g.vertexCount == 0) return;
        throw DecompositionError("decomposition has no bags");
    }
    if (static_cast<int>(td.treeEdges.size()) != nb - 1)
        throw DecompositionError("tree must have exactly |bags|-1 edges");
    UnionFind uf(nb);
    std::vector<std::vector<int>> adj(nb);
    for (auto [a, b] : td.treeEdges) {
        if (a < 0 || b < 0 || a >= nb || b >= nb) throw DecompositionError("tree edge references unknown bag");
        if (!uf.unite(a, b)) throw DecompositionError("tree edges contain a cycle");
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<std::vector<int>> holders(g.vertexCount);
    for (int i = 0; i < nb; ++i) {
        auto bag = td.bags[i];
        std::sort(bag.begin(), bag.end());
        if (std::adjacent_find(bag.begin(), bag.end()) != bag.end())
            throw DecompositionError("bag " + std::to_string(i) + " repeats a vertex");
        for (int v : bag) {
            if (v < 0 || v >= g.vertexCount) throw DecompositionError("bag references unknown vertex");
            holders[v].push_back(i);
        }
    }
    std::vector<char> inBag(nb, 0);
    for (int v = 0; v < g.vertexCount; ++v) {
        if (holders[v].empty()) throw DecompositionError("vertex " + std::to_string(v) + " is in no bag");
        for (int b : holders[v]) inBag[b] = 1;
        // Bags holding v must induce a connected subtree.
        std::vector<int> stack{holders[v][0]};
        std::vector<char> seen(nb, 0);
        seen[holders[v][0]] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int y : adj[x])
                if (inBag[y] && !seen[y]) {
                    seen[y] = 1;
                    ++reached;
                    stack.push_back(y);
                }
        }
        for (int b : holders[v]) inBag[b] = 0;
        if (reached != holders[v].size())
            throw DecompositionError("bags containing vertex " + std::to_string(v) + " are not connected");
    }
    for (int e = 0; e < g.edgeCount(); ++e) {
        const auto& ed = g.edges[e];
        bool covered = false;
        for (int b : holders[ed.a]) {
            const auto& bag = td.bags[b];
            if (std::find(bag.begin(), bag.end(), ed.b) != bag.end()) {
                covered = true;
                break;
            }
        }
        if (!covered) throw DecompositionError("edge " + std::to_string(e) + " is in no bag");
    }
}

inline Json decompositionToJson(const TreeDecomposition& td) {
    Json j;
    j["bags"] = td.bags;
    Json te = Json::array();
    for (auto [a, b] : td.treeEdges) te.push_back(Json::array({a, b}));
    j["treeEdges"] = te;
    j["width"] = td.width();
    return j;
}

inline TreeDecomposition decompositionFromJson(const Json& j) {
    TreeDecomposition td;
    try {
        td.bags = j.at("bags").get<std::vector<std::vector<int>>>();
        for (const auto& e : j.at("treeEdges")) td.treeEdges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    } catch (const nlohmann::json::exception& ex) {
        throw DecompositionError(std::string("malformed decomposition: ") + ex.what());
    }
    return td;
}

namespace detail {

// Simple adjacency as bitsets of up to 64 vertices is too small for gadgets; use sorted vectors.
inline std::vector<std::vector<int>> simpleAdjacency(const WeightedGraph& g) {
    std::vector<std::vector<int>> adj(g.vertexCount);
    for (const auto& e : g.edges)
        if (e.a != e.b) {
            adj[e.a].push_back(e.b);
            adj[e.b].push_back(e.a);
        }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

// Bags from an elimination order: bag(v) = {v} plus its later neighbours in the fill graph.
inline TreeDecomposition decompositionFromOrder(int n, std::vector<std::vector<int>> adj,
                                                const std::vector<int>& order) {
    TreeDecomposition td;
    if (n == 0) return td;
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[order[i]] = i;
    std::vector<std::vector<char>> mat(n, std::vector<char>(n, 0));
    for (int v = 0; v < n; ++v)
        for (int u : adj[v]) mat[v][u] = 1;
    std::vector<int> bagOf(n);
    std::vector<std::vector<int>> later(n);
    for (int i = 0; i < n; ++i) {
        int v = order[i];
        for (int u = 0; u < n; ++u)
            if (mat[v][u] && pos[u] > i) later[v].push_back(u);
        for (int a : later[v])
            for (int b : later[v])
                if (a != b) mat[a][b] = 1;
        std::vector<int> bag = later[v];
        bag.push_back(v);
        std::sort(bag.begin(), bag.end());
        bagOf[v] = i;
        td.bags.push_back(bag);
    }
    // Parent of bag(v) is bag of its earliest-eliminated later neighbour; forest roots chained.
    int prevRoot = -1;
    for (int i = 0; i < n; ++i) {
        int v = order[i];
        if (later[v].empty()) {
            if (prevRoot >= 0) td.treeEdges.emplace_back(prevRoot, i);
            prevRoot = i;
            continue;
        }
        int best = *std::min_element(later[v].begin(), later[v].end(),
                                     [&](int a, int b) { return pos[a] < pos[b]; });
        td.treeEdges.emplace_back(i, bagOf[best]);
    }
    return td;
}

}  // namespace detail

// Min-fill elimination, ties by min degree then smallest id.
inline TreeDecomposition greedyDecomposition(const WeightedGraph& g) {
    const int n = g.vertexCount;
    auto adj = detail::simpleAdjacency(g);
    std::vector<std::unordered_set<int>> cur(n);
    for (int v = 0; v < n; ++v) cur[v].insert(adj[v].begin(), adj[v].end());
    std::vector<char> done(n, 0);
    std::vector<int> order;
    for (int step = 0; step < n; ++step) {
        int best = -1;
        long bestFill = 0;
        std::size_t bestDeg = 0;
        for (int v = 0; v < n; ++v) {
            if (done[v]) continue;
            std::vector<int> nb(cur[v].begin(), cur[v].end());
            long fill = 0;
            for (std::size_t i = 0; i < nb.size(); ++i)
                for (std::size_t k = i + 1; k < nb.size(); ++k)
                    if (!cur[nb[i]].count(nb[k])) ++fill;
            if (best < 0 || fill < bestFill || (fill == bestFill && nb.size() < bestDeg)) {
                best = v;
                bestFill = fill;
                bestDeg = nb.size();
            }
        }
        std::vector<int> nb(cur[best].begin(), cur[best].end());
        for (int a : nb)
            for (int b : nb)
                if (a != b) cur[a].insert(b);
        for (int a : nb) cur[a].erase(best);
        done[best] = 1;
        order.push_back(best);
    }
    return detail::decompositionFromOrder(n, adj, order);
}

struct TreewidthResult {
    bool aboveCap = false;
    int width = -1;                               // exact when !aboveCap
    std::optional<TreeDecomposition> decomposition;
};

// Exact treewidth by memoised search over elimination prefixes. Up to 32 vertices.
inline TreewidthResult exactTreewidth(const WeightedGraph& g, int cap) {
    const int n = g.vertexCount;
    if (n > 32) throw CapExceeded("exactTreewidth supports at most 32 vertices");
    auto adj = detail::simpleAdjacency(g);
    TreewidthResult res;
    if (n == 0) {
        res.width = -1;
        res.decomposition = TreeDecomposition{};
        return res;
    }
    using Mask = std::uint32_t;
    const Mask all = n == 32 ? ~Mask{0} : ((Mask{1} << n) - 1);
    std::vector<Mask> nbr(n, 0);
    for (int v = 0; v < n; ++v)
        for (int u : adj[v]) nbr[v] |= Mask{1} << u;

    // Neighbours of v in the graph after eliminating `gone`: reachable through eliminated vertices.
    auto elimNeighbours = [&](Mask gone, int v) {
        Mask seen = Mask{1} << v, frontier = Mask{1} << v, out = 0;
        while (frontier) {
            int x = std::countr_zero(frontier);
            frontier &= frontier - 1;
            Mask nx = nbr[x] & ~seen;
            seen |= nx;
            out |= nx & ~gone;
            frontier |= nx & gone;
        }
        return out;
    };

    TreeDecomposition greedy = greedyDecomposition(g);
    int upper = greedy.width();
    int lower = 0;
    for (int v = 0; v < n; ++v)
        if (!adj[v].empty()) lower = 1;
    // Degeneracy lower bound.
    {
        Mask left = all;
        int degen = 0;
        while (left) {
            int bv = -1, bd = 1 << 30;
            for (Mask m = left; m; m &= m - 1) {
                int v = std::countr_zero(m);
                int d = std::popcount(nbr[v] & left);
                if (d < bd) { bd = d; bv = v; }
            }
            degen = std::max(degen, bd);
            left &= ~(Mask{1} << bv);
        }
        lower = std::max(lower, degen);
    }

    std::vector<int> order;
    auto decide = [&](int k) {
        std::unordered_set<Mask> failed;
        order.clear();
        std::function<bool(Mask)> dfs = [&](Mask gone) -> bool {
            int remaining = std::popcount(all & ~gone);
            if (remaining <= k + 1) {
                for (Mask m = all & ~gone; m; m &= m - 1) order.push_back(std::countr_zero(m));
                return true;
            }
            if (failed.count(gone)) return false;
            // A simplicial vertex of small degree can always be eliminated first.
            for (Mask m = all & ~gone; m; m &= m - 1) {
                int v = std::countr_zero(m);
                Mask nb = elimNeighbours(gone, v);
                if (std::popcount(nb) > k) continue;
                bool clique = true;
                for (Mask r = nb; r && clique; r &= r - 1) {
                    int u = std::countr_zero(r);
                    if ((elimNeighbours(gone, u) | (Mask{1} << u)) != ((elimNeighbours(gone, u) | (Mask{1} << u)) | nb))
                        clique = false;
                }
                if (clique) {
                    order.push_back(v);
                    if (dfs(gone | (Mask{1} << v))) return true;
                    order.pop_back();
                    failed.insert(gone);
                    return false;
                }
            }
            for (Mask m = all & ~gone; m; m &= m - 1) {
                int v = std::countr_zero(m);
                if (std::popcount(elimNeighbours(gone, v)) > k) continue;
                order.push_back(v);
                if (dfs(gone | (Mask{1} << v))) return true;
                order.pop_back();
            }
            failed.insert(gone);
            return false;
        };
        return dfs(0);
    };

    int limit = std::min(upper, cap);
    for (int k = lower; k <= limit; ++k) {
        if (k == upper) {
            res.width = upper;
            res.decomposition = greedy;
            return res;
        }
        if (decide(k)) {
            res.width = k;
            res.decomposition = detail::decompositionFromOrder(n, adj, order);
            return res;
        }
    }
    res.aboveCap = true;
    return res;
}

}  // namespace mcwb

#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcwb/weight.hpp"

namespace mcwb {

using EdgeSet = std::vector<int>;  // edge ids; canonical form is strictly increasing

struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when an input exceeds a configured search cap.
struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Edge {
    int a = 0;
    int b = 0;
    Weight w{};
};

// Undirected multigraph; loops and parallel edges allowed. Edge ids are indices.
struct WeightedGraph {
    int vertexCount = 0;
    std::vector<Edge> edges;

    WeightedGraph() = default;
    explicit WeightedGraph(int n) : vertexCount(n) {
        if (n < 0) throw InputError("negative vertex count");
    }

    int addVertex() { return vertexCount++; }
    int addEdge(int a, int b, Weight w) {
        if (a < 0 || b < 0 || a >= vertexCount || b >= vertexCount)
            throw InputError("edge endpoint out of range");
        edges.push_back({a, b, w});
        return static_cast<int>(edges.size()) - 1;
    }
    int edgeCount() const { return static_cast<int>(edges.size()); }

    // Incident edge ids per vertex; a loop is listed twice.
    std::vector<std::vector<int>> incidence() const {
        std::vector<std::vector<int>> inc(vertexCount);
        for (int e = 0; e < edgeCount(); ++e) {
            inc[edges[e].a].push_back(e);
            inc[edges[e].b].push_back(e);
        }
        return inc;
    }

    void validate() const {
        if (vertexCount < 0) throw InputError("negative vertex count");
        for (const auto& e : edges)
            if (e.a < 0 || e.b < 0 || e.a >= vertexCount || e.b >= vertexCount)
                throw InputError("edge endpoint out of range");
    }
};

struct DemandPattern {
    std::vector<int> terminals;                 // sorted, distinct
    std::vector<std::pair<int, int>> demands;   // each pair (a, b) with a < b

    void normalize() {
        std::sort(terminals.begin(), terminals.end());
        terminals.erase(std::unique(terminals.begin(), terminals.end()), terminals.end());
        for (auto& d : demands)
            if (d.first > d.second) std::swap(d.first, d.second);
        std::sort(demands.begin(), demands.end());
        demands.erase(std::unique(demands.begin(), demands.end()), demands.end());
    }

    bool isTerminal(int v) const {
        return std::binary_search(terminals.begin(), terminals.end(), v);
    }
};

struct MulticutInstance {
    WeightedGraph graph;
    DemandPattern pattern;
    std::optional<Weight> budget;
    // Per-vertex cyclic order of incident edge ids (rotation system), if embedded.
    std::optional<std::vector<std::vector<int>>> rotation;

    void validate() const {
        graph.validate();
        for (int t : pattern.terminals)
            if (t < 0 || t >= graph.vertexCount) throw InputError("terminal out of range");
        for (auto [a, b] : pattern.demands) {
            if (a == b) throw InputError("demand joins a terminal to itself");
            if (!pattern.isTerminal(a) || !pattern.isTerminal(b))
                throw InputError("demand endpoint is not a terminal");
        }
    }
};

// Vertex partition: label[v] is the block index; blocks are ordered by smallest member.
struct Partition {
    std::vector<int> label;
    std::vector<std::vector<int>> blocks;
};

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (a > b) std::swap(a, b);
        parent_[b] = a;
        return true;
    }

private:
    std::vector<int> parent_;
};

inline EdgeSet canonicalizeSolution(EdgeSet s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

inline Partition partitionFromLabels(const std::vector<int>& rawLabel) {
    Partition p;
    p.label.assign(rawLabel.size(), -1);
    std::vector<int> remap;
    std::vector<int> seen;
    for (std::size_t v = 0; v < rawLabel.size(); ++v) {
        int r = rawLabel[v];
        if (r >= static_cast<int>(seen.size())) seen.resize(r + 1, -1);
        if (seen[r] < 0) {
            seen[r] = static_cast<int>(p.blocks.size());
            p.blocks.emplace_back();
        }
        p.label[v] = seen[r];
        p.blocks[seen[r]].push_back(static_cast<int>(v));
    }
    return p;
}

inline Partition componentsOf(const WeightedGraph& g, const EdgeSet& removed) {
    std::vector<char> gone(g.edgeCount(), 0);
    for (int e : removed) {
        if (e < 0 || e >= g.edgeCount()) throw InputError("unknown edge id " + std::to_string(e));
        gone[e] = 1;
    }
    UnionFind uf(g.vertexCount);
    for (int e = 0; e < g.edgeCount(); ++e)
        if (!gone[e]) uf.unite(g.edges[e].a, g.edges[e].b);
    std::vector<int> root(g.vertexCount);
    for (int v = 0; v < g.vertexCount; ++v) root[v] = uf.find(v);
    return partitionFromLabels(root);
}

inline bool isMulticut(const MulticutInstance& inst, const EdgeSet& s) {
    Partition p = componentsOf(inst.graph, s);
    for (auto [a, b] : inst.pattern.demands)
        if (p.label[a] == p.label[b]) return false;
    return true;
}

inline Weight cutWeight(const WeightedGraph& g, const EdgeSet& s) {
    Weight total;
    for (int e : canonicalizeSolution(s)) {
        if (e < 0 || e >= g.edgeCount()) throw InputError("unknown edge id " + std::to_string(e));
        total += g.edges[e].w;
    }
    return total;
}

// Edges whose endpoints carry different labels.
inline EdgeSet crossEdges(const WeightedGraph& g, const std::vector<int>& label) {
    EdgeSet s;
    for (int e = 0; e < g.edgeCount(); ++e)
        if (label[g.edges[e].a] != label[g.edges[e].b]) s.push_back(e);
    return s;
}

inline EdgeSet allEdges(const WeightedGraph& g) {
    EdgeSet s(g.edgeCount());
    std::iota(s.begin(), s.end(), 0);
    return s;
}

}  // namespace mcwb

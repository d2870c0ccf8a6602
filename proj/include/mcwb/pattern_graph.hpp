#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcwb/graph.hpp"
#include "mcwb/io.hpp"

namespace mcwb {

// Simple undirected graph used for demand patterns.
struct PatternGraph {
    int n = 0;
    std::vector<std::vector<char>> adj;

    PatternGraph() = default;
    explicit PatternGraph(int vertices) : n(vertices), adj(vertices, std::vector<char>(vertices, 0)) {}

    void addEdge(int a, int b) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw InputError("pattern edge out of range");
        if (a == b) throw InputError("pattern graphs have no loops");
        adj[a][b] = adj[b][a] = 1;
    }
    bool has(int a, int b) const { return adj[a][b] != 0; }
    int degree(int v) const { return static_cast<int>(std::count(adj[v].begin(), adj[v].end(), 1)); }
    int edgeCount() const {
        int m = 0;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) m += adj[a][b];
        return m;
    }
    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> es;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (adj[a][b]) es.emplace_back(a, b);
        return es;
    }
    PatternGraph induced(const std::vector<int>& keep) const {
        PatternGraph h(static_cast<int>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i)
            for (std::size_t k = 0; k < keep.size(); ++k) h.adj[i][k] = adj[keep[i]][keep[k]];
        return h;
    }
    bool operator==(const PatternGraph& o) const { return n == o.n && adj == o.adj; }
};

inline PatternGraph completeGraph(int t) {
    PatternGraph h(t);
    for (int a = 0; a < t; ++a)
        for (int b = a + 1; b < t; ++b) h.addEdge(a, b);
    return h;
}

inline PatternGraph completeMultipartite(const std::vector<int>& parts) {
    int n = 0;
    std::vector<int> part;
    for (std::size_t p = 0; p < parts.size(); ++p)
        for (int i = 0; i < parts[p]; ++i, ++n) part.push_back(static_cast<int>(p));
    PatternGraph h(n);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (part[a] != part[b]) h.addEdge(a, b);
    return h;
}

// Demand graph of an instance: vertices are the host vertex ids 0..n-1.
inline PatternGraph patternFromInstance(const MulticutInstance& inst) {
    PatternGraph h(inst.graph.vertexCount);
    for (auto [a, b] : inst.pattern.demands) h.addEdge(a, b);
    return h;
}

// Pattern files reuse the instance format; edge weights are ignored.
inline PatternGraph patternFromJson(const Json& j) {
    PatternGraph h;
    try {
        h = PatternGraph(j.at("n").get<int>());
        for (const auto& e : j.at("edges")) h.addEdge(e.at(0).get<int>(), e.at(1).get<int>());
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(std::string("malformed pattern: ") + ex.what());
    }
    return h;
}

inline Json patternToJson(const PatternGraph& h) {
    Json j;
    j["n"] = h.n;
    Json es = Json::array();
    for (auto [a, b] : h.edges()) es.push_back(Json::array({a, b, 1}));
    j["edges"] = es;
    return j;
}

// Steps name vertices by their id in the source graph. Identify(u, v) keeps u.
struct ProjectionStep {
    enum class Kind { Delete, Identify };
    Kind kind = Kind::Delete;
    int u = -1;
    int v = -1;

    static ProjectionStep remove(int v) { return {Kind::Delete, -1, v}; }
    static ProjectionStep identify(int u, int v) { return {Kind::Identify, u, v}; }
    bool operator==(const ProjectionStep&) const = default;
};

struct ProjectionWitness {
    PatternGraph source;
    std::vector<ProjectionStep> steps;
    PatternGraph target;
};

struct ProjectionError : InputError {
    int stepIndex;
    ProjectionError(int index, const std::string& what)
        : InputError("step " + std::to_string(index) + ": " + what), stepIndex(index) {}
};

// Replays steps; surviving vertices are renumbered in increasing source-id order.
inline PatternGraph applyProjection(const PatternGraph& h, const std::vector<ProjectionStep>& steps,
                                    std::vector<int>* survivors = nullptr) {
    PatternGraph g = h;
    std::vector<char> alive(h.n, 1);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        int idx = static_cast<int>(i);
        auto check = [&](int v) {
            if (v < 0 || v >= h.n || !alive[v]) throw ProjectionError(idx, "vertex " + std::to_string(v) + " absent");
        };
        if (s.kind == ProjectionStep::Kind::Delete) {
            check(s.v);
            alive[s.v] = 0;
            for (int x = 0; x < h.n; ++x) g.adj[s.v][x] = g.adj[x][s.v] = 0;
        } else {
            check(s.u);
            check(s.v);
            if (s.u == s.v) throw ProjectionError(idx, "cannot identify a vertex with itself");
            if (g.has(s.u, s.v)) throw ProjectionError(idx, "cannot identify adjacent vertices");
            for (int x = 0; x < h.n; ++x)
                if (g.adj[s.v][x]) {
                    g.adj[s.u][x] = g.adj[x][s.u] = 1;
                    g.adj[s.v][x] = g.adj[x][s.v] = 0;
                }
            alive[s.v] = 0;
        }
    }
    std::vector<int> keep;
    for (int v = 0; v < h.n; ++v)
        if (alive[v]) keep.push_back(v);
    if (survivors) *survivors = keep;
    return g.induced(keep);
}

// Isomorphism a -> b by backtracking with degree filtering; mapping[i] is the image of a's vertex i.
inline std::optional<std::vector<int>> findIsomorphism(const PatternGraph& a, const PatternGraph& b) {
    if (a.n != b.n || a.edgeCount() != b.edgeCount()) return std::nullopt;
    std::vector<int> da(a.n), db(b.n);
    for (int v = 0; v < a.n; ++v) da[v] = a.degree(v);
    for (int v = 0; v < b.n; ++v) db[v] = b.degree(v);
    {
        auto sa = da, sb = db;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) return std::nullopt;
    }
    std::vector<int> map(a.n, -1);
    std::vector<char> used(b.n, 0);
    auto rec = [&](auto&& self, int v) -> bool {
        if (v == a.n) return true;
        for (int w = 0; w < b.n; ++w) {
            if (used[w] || db[w] != da[v]) continue;
            bool ok = true;
            for (int u = 0; u < v && ok; ++u)
                if (a.adj[v][u] != b.adj[w][map[u]]) ok = false;
            if (!ok) continue;
            map[v] = w;
            used[w] = 1;
            if (self(self, v + 1)) return true;
            used[w] = 0;
        }
        map[v] = -1;
        return false;
    };
    if (!rec(rec, 0)) return std::nullopt;
    return map;
}

// Minimum lower-triangle adjacency code over all vertex orders; rows are compared one at a time.
inline std::string canonicalForm(const PatternGraph& h, int cap = 10) {
    if (h.n > cap) throw CapExceeded("canonical form supports at most " + std::to_string(cap) + " vertices");
    const int n = h.n;
    std::string best;
    bool have = false;
    std::vector<int> order;
    std::vector<char> used(n, 0);
    std::string cur;
    auto rec = [&](auto&& self, bool tied) -> void {
        int k = static_cast<int>(order.size());
        if (k == n) {
            if (!have || cur < best) {
                best = cur;
                have = true;
            }
            return;
        }
        // Rows this position could produce; only the smallest survive.
        std::vector<std::pair<std::string, int>> options;
        for (int v = 0; v < n; ++v) {
            if (used[v]) continue;
            std::string row;
            for (int u : order) row.push_back(h.adj[v][u] ? '1' : '0');
            options.emplace_back(row, v);
        }
        std::string minRow = std::min_element(options.begin(), options.end())->first;
        if (have && tied) {
            std::string bestRow = best.substr(cur.size(), minRow.size());
            if (minRow > bestRow) return;
            if (minRow < bestRow) tied = false;
        }
        std::vector<int> tried;
        auto twins = [&](int v, int w) {
            for (int x = 0; x < n; ++x)
                if (x != v && x != w && h.adj[v][x] != h.adj[w][x]) return false;
            return true;
        };
        for (auto& [row, v] : options) {
            if (row != minRow) continue;
            // A vertex twin to one already tried yields the same codes.
            bool twin = false;
            for (int w : tried)
                if (twins(v, w)) twin = true;
            if (twin) continue;
            tried.push_back(v);
            order.push_back(v);
            used[v] = 1;
            std::size_t len = cur.size();
            cur += row;
            self(self, tied);
            cur.resize(len);
            used[v] = 0;
            order.pop_back();
        }
    };
    rec(rec, true);
    return std::to_string(n) + ":" + best;
}

inline bool isomorphic(const PatternGraph& a, const PatternGraph& b) { return findIsomorphism(a, b).has_value(); }

inline bool verifyWitness(const ProjectionWitness& w) {
    try {
        return isomorphic(applyProjection(w.source, w.steps), w.target);
    } catch (const ProjectionError&) {
        return false;
    }
}

// Breadth-first search over projections of `source`, deduplicated by canonical form.
inline std::optional<ProjectionWitness> isProjection(const PatternGraph& target, const PatternGraph& source,
                                                     int cap = 10) {
    if (source.n > cap) throw CapExceeded("projection search supports at most " + std::to_string(cap) + " vertices");
    if (target.n > source.n || target.edgeCount() > source.edgeCount()) return std::nullopt;
    const std::string goal = canonicalForm(target, cap);
    struct Node {
        PatternGraph g;
        std::vector<int> names;  // source id of each current vertex
        std::vector<ProjectionStep> steps;
    };
    std::deque<Node> queue;
    std::map<std::string, bool> seen;
    std::vector<int> ids(source.n);
    for (int i = 0; i < source.n; ++i) ids[i] = i;
    queue.push_back({source, ids, {}});
    seen[canonicalForm(source, cap)] = true;
    const int targetEdges = target.edgeCount();
    while (!queue.empty()) {
        Node cur = std::move(queue.front());
        queue.pop_front();
        if (cur.g.n == target.n) {
            if (canonicalForm(cur.g, cap) == goal) return ProjectionWitness{source, cur.steps, target};
            continue;
        }
        auto push = [&](PatternGraph g, std::vector<int> names, ProjectionStep step) {
            if (g.edgeCount() < targetEdges) return;
            auto key = canonicalForm(g, cap);
            if (seen.count(key)) return;
            seen[key] = true;
            auto steps = cur.steps;
            steps.push_back(step);
            queue.push_back({std::move(g), std::move(names), std::move(steps)});
        };
        for (int v = 0; v < cur.g.n; ++v) {
            std::vector<int> keep;
            for (int x = 0; x < cur.g.n; ++x)
                if (x != v) keep.push_back(x);
            std::vector<int> names;
            for (int x : keep) names.push_back(cur.names[x]);
            push(cur.g.induced(keep), names, ProjectionStep::remove(cur.names[v]));
        }
        for (int u = 0; u < cur.g.n; ++u)
            for (int v = u + 1; v < cur.g.n; ++v) {
                if (cur.g.has(u, v)) continue;
                PatternGraph g = cur.g;
                for (int x = 0; x < g.n; ++x)
                    if (g.adj[v][x]) g.adj[u][x] = g.adj[x][u] = 1;
                std::vector<int> keep;
                for (int x = 0; x < g.n; ++x)
                    if (x != v) keep.push_back(x);
                std::vector<int> names;
                for (int x : keep) names.push_back(cur.names[x]);
                push(g.induced(keep), names, ProjectionStep::identify(cur.names[u], cur.names[v]));
            }
    }
    return std::nullopt;
}

inline Json stepsToJson(const std::vector<ProjectionStep>& steps) {
    Json arr = Json::array();
    for (const auto& s : steps) {
        if (s.kind == ProjectionStep::Kind::Delete) arr.push_back({{"op", "delete"}, {"v", s.v}});
        else arr.push_back({{"op", "identify"}, {"u", s.u}, {"v", s.v}});
    }
    return arr;
}

inline std::vector<ProjectionStep> stepsFromJson(const Json& j) {
    std::vector<ProjectionStep> steps;
    if (!j.is_array()) throw InputError("witness must be a JSON array of steps");
    for (const auto& s : j) {
        try {
            auto op = s.at("op").get<std::string>();
            if (op == "delete") steps.push_back(ProjectionStep::remove(s.at("v").get<int>()));
            else if (op == "identify")
                steps.push_back(ProjectionStep::identify(s.at("u").get<int>(), s.at("v").get<int>()));
            else throw InputError("unknown step op " + op);
        } catch (const nlohmann::json::exception& ex) {
            throw InputError(std::string("malformed step: ") + ex.what());
        }
    }
    return steps;
}

}  // namespace mcwb

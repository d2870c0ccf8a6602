#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcwb/decomposition.hpp"
#include "mcwb/graph.hpp"

namespace mcwb {

struct MulticutSolution {
    Weight weight;
    EdgeSet cut;                             // canonical
    std::optional<std::uint64_t> optimaCount;
    bool feasible = true;                    // false when no edge set meets the constraint
};

struct OracleCaps {
    int partitionMaxVertices = 12;
    int dpMaxWidth = 14;
};

// Exact optimum by enumerating vertex partitions; ties go to the lexicographically smallest cut.
inline MulticutSolution minMulticutByPartition(const MulticutInstance& inst, int cap = 12) {
    inst.validate();
    const auto& g = inst.graph;
    const int n = g.vertexCount;
    if (n > cap)
        throw CapExceeded("partition oracle refuses " + std::to_string(n) + " vertices (cap " +
                          std::to_string(cap) + ")");
    // Edges and demands grouped by their later endpoint for incremental evaluation.
    std::vector<std::vector<int>> edgesBack(n);
    for (int e = 0; e < g.edgeCount(); ++e) {
        int hi = std::max(g.edges[e].a, g.edges[e].b);
        if (g.edges[e].a != g.edges[e].b) edgesBack[hi].push_back(e);
    }
    std::vector<std::vector<int>> demandsBack(n);
    for (auto [a, b] : inst.pattern.demands) demandsBack[std::max(a, b)].push_back(std::min(a, b));

    std::vector<int> label(n, 0);
    MulticutSolution best;
    best.weight = INF;
    bool found = false;

    auto recurse = [&](auto&& self, int v, int blocks, Weight acc) -> void {
        if (found && acc > best.weight) return;
        if (v == n) {
            EdgeSet cut = crossEdges(g, label);
            if (!found || acc < best.weight || cut < best.cut) {
                best.weight = acc;
                best.cut = std::move(cut);
                found = true;
            }
            return;
        }
        for (int b = 0; b <= blocks; ++b) {
            bool ok = true;
            for (int u : demandsBack[v])
                if (label[u] == b) { ok = false; break; }
            if (!ok) continue;
            label[v] = b;
            Weight add = acc;
            for (int e : edgesBack[v]) {
                int u = g.edges[e].a == v ? g.edges[e].b : g.edges[e].a;
                if (label[u] != b) add += g.edges[e].w;
            }
            self(self, v + 1, std::max(blocks, b + 1), add);
        }
    };
    if (n == 0) {
        best.weight = Weight(0);
        return best;
    }
    recurse(recurse, 0, 0, Weight(0));
    return best;
}

// Separation / cohesion requirements beyond the instance demands.
//  groups: disjoint vertex sets; vertices of groups in forbiddenMerges never share a component.
//  forcedAssignments: vertex -> group index, extending that group.
//  cohesive: each group lies inside a single component.
//  exhaustive: every component meets some group or demand terminal.
struct GroupConstraint {
    std::vector<std::vector<int>> groups;
    std::vector<std::pair<int, int>> forbiddenMerges;
    std::map<int, int> forcedAssignments;
    bool cohesive = false;
    bool exhaustive = false;
};

enum class DpMode { Optimize, CountOptima };

// Per-edge forcing used by tie-breaking: -1 free, 0 must keep, 1 must cut.
using EdgeForcing = std::vector<signed char>;

namespace detail {

struct DpKeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& k) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (auto x : k) {
            h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0xff51afd7ed558ccdULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

struct DpValue {
    Weight w;
    std::uint64_t count = 0;
};

inline std::uint64_t satAdd(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = a + b;
    return r < a ? UINT64_MAX : r;
}
inline std::uint64_t satMul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > UINT64_MAX / b) return UINT64_MAX;
    return a * b;
}

using DpTable = std::unordered_map<std::vector<std::uint64_t>, DpValue, DpKeyHash>;

inline void relax(DpTable& t, std::vector<std::uint64_t>&& key, DpValue v) {
    auto [it, inserted] = t.try_emplace(std::move(key), v);
    if (inserted) return;
    if (v.w < it->second.w) it->second = v;
    else if (v.w == it->second.w) it->second.count = satAdd(it->second.count, v.count);
}

// Decoded state: block label per bag position, class mask per block, classes in closed components.
struct DpState {
    std::vector<int> label;
    std::vector<std::uint64_t> mask;
    std::uint64_t closed = 0;
};

inline std::vector<std::uint64_t> encode(const DpState& s) {
    std::vector<int> remap(s.mask.size(), -1);
    std::vector<std::uint64_t> key(2, 0);
    key[1] = s.closed;
    int next = 0;
    for (std::size_t p = 0; p < s.label.size(); ++p) {
        int l = s.label[p];
        if (remap[l] < 0) {
            remap[l] = next++;
            key.push_back(s.mask[l]);
        }
        key[0] |= static_cast<std::uint64_t>(remap[l]) << (4 * p);
    }
    return key;
}

inline DpState decode(const std::vector<std::uint64_t>& key, std::size_t bagSize) {
    DpState s;
    s.closed = key[1];
    s.label.resize(bagSize);
    for (std::size_t p = 0; p < bagSize; ++p) s.label[p] = static_cast<int>((key[0] >> (4 * p)) & 15);
    s.mask.assign(key.begin() + 2, key.end());
    return s;
}

class TreewidthDp {
public:
    TreewidthDp(const MulticutInstance& inst, const TreeDecomposition& td, const GroupConstraint* gc,
                const EdgeForcing* forcing, const std::vector<std::pair<int, int>>* separate)
        : g_(inst.graph), td_(td), forcing_(forcing) {
        const int n = g_.vertexCount;
        classMask_.assign(n, 0);
        std::vector<int> groupOf(n, -1);
        int classes = 0;
        auto bit = [](int c) { return std::uint64_t{1} << c; };
        if (gc) {
            for (std::size_t i = 0; i < gc->groups.size(); ++i)
                for (int v : gc->groups[i]) {
                    if (v < 0 || v >= n) throw InputError("group vertex out of range");
                    if (groupOf[v] >= 0) throw InputError("groups are not disjoint");
                    groupOf[v] = static_cast<int>(i);
                }
            for (auto [v, grp] : gc->forcedAssignments) {
                if (v < 0 || v >= n || grp < 0 || grp >= static_cast<int>(gc->groups.size()))
                    throw InputError("forced assignment out of range");
                if (groupOf[v] >= 0 && groupOf[v] != grp) throw InputError("forced assignment contradicts groups");
                groupOf[v] = grp;
            }
            classes = static_cast<int>(gc->groups.size());
            if (classes > 64) throw CapExceeded("more than 64 separation classes");
            for (int c = 0; c < classes; ++c) groupBits_ |= bit(c);
            cohesive_ = gc->cohesive;
            exhaustive_ = gc->exhaustive;
        }
        std::vector<int> classOf = groupOf;
        for (int t : inst.pattern.terminals)
            if (classOf[t] < 0) classOf[t] = classes++;
        if (classes > 64) throw CapExceeded("more than 64 separation classes");
        for (int v = 0; v < n; ++v)
            if (classOf[v] >= 0) classMask_[v] = bit(classOf[v]);
        for (int c = 0; c < classes; ++c) baseBits_ |= bit(c);
        conflict_.assign(64, 0);
        auto addConflict = [&](int a, int b) {
            if (a == b) {
                infeasible_ = true;
                return;
            }
            conflict_[a] |= bit(b);
            conflict_[b] |= bit(a);
        };
        if (gc)
            for (auto [a, b] : gc->forbiddenMerges) {
                if (a < 0 || b < 0 || a >= static_cast<int>(gc->groups.size()) ||
                    b >= static_cast<int>(gc->groups.size()))
                    throw InputError("forbidden merge references unknown group");
                addConflict(a, b);
            }
        for (auto [a, b] : inst.pattern.demands) addConflict(classOf[a], classOf[b]);
        // Vertex-level separations get one private token class per endpoint.
        if (separate) {
            std::vector<int> token(n, -1);
            for (auto [a, b] : *separate) {
                if (a == b) {
                    infeasible_ = true;
                    continue;
                }
                for (int v : {a, b})
                    if (token[v] < 0) {
                        if (classes >= 64) throw CapExceeded("more than 64 separation classes");
                        token[v] = classes++;
                        classMask_[v] |= bit(token[v]);
                    }
                addConflict(token[a], token[b]);
            }
        }
        inc_ = g_.incidence();
        introduced_.assign(g_.edgeCount(), 0);
    }

    // Returns (weight, count); weight INF with count 0 when nothing is feasible.
    DpValue run() {
        if (infeasible_) return {INF, 0};
        if (td_.bags.empty()) return {Weight(0), 1};
        adj_.assign(td_.bags.size(), {});
        for (auto [a, b] : td_.treeEdges) {
            adj_[a].push_back(b);
            adj_[b].push_back(a);
        }
        std::vector<int> bag;
        DpTable t = solve(0, -1, bag);
        while (!bag.empty()) forget(t, bag, bag.back());
        DpValue best{INF, 0};
        bool any = false;
        for (auto& [k, v] : t) {
            if (!any || v.w < best.w) {
                best = v;
                any = true;
            } else if (v.w == best.w) {
                best.count = satAdd(best.count, v.count);
            }
        }
        if (!any) return {INF, 0};
        return best;
    }

private:
    bool conflicted(std::uint64_t m) const {
        for (std::uint64_t r = m; r; r &= r - 1)
            if (conflict_[std::countr_zero(r)] & m) return true;
        return false;
    }

    DpTable solve(int node, int parent, std::vector<int>& bag) {
        std::vector<int> target = td_.bags[node];
        std::sort(target.begin(), target.end());
        DpTable acc;
        bool have = false;
        for (int c : adj_[node]) {
            if (c == parent) continue;
            std::vector<int> cb;
            DpTable t = solve(c, node, cb);
            std::vector<int> drop;
            for (int v : cb)
                if (!std::binary_search(target.begin(), target.end(), v)) drop.push_back(v);
            for (int v : drop) forget(t, cb, v);
            for (int v : target)
                if (!std::binary_search(cb.begin(), cb.end(), v)) introduce(t, cb, v);
            if (!have) {
                acc = std::move(t);
                have = true;
            } else {
                acc = join(acc, t, target.size());
            }
        }
        if (!have) {
            acc.clear();
            DpState empty;
            acc.emplace(encode(empty), DpValue{Weight(0), 1});
            bag.clear();
            for (int v : target) introduce(acc, bag, v);
        }
        bag = target;
        return acc;
    }

    void introduce(DpTable& t, std::vector<int>& bag, int v) {
        auto pos = static_cast<std::size_t>(std::lower_bound(bag.begin(), bag.end(), v) - bag.begin());
        std::uint64_t bit = classMask_[v];
        DpTable out;
        for (auto& [k, val] : t) {
            DpState s = decode(k, bag.size());
            if (cohesive_ && (s.closed & bit & groupBits_)) continue;
            s.label.insert(s.label.begin() + static_cast<long>(pos), static_cast<int>(s.mask.size()));
            s.mask.push_back(bit);
            relax(out, encode(s), val);
        }
        bag.insert(bag.begin() + static_cast<long>(pos), v);
        t = std::move(out);
    }

    void introduceEdge(DpTable& t, const std::vector<int>& bag, int e) {
        const auto& ed = g_.edges[e];
        int pa = static_cast<int>(std::lower_bound(bag.begin(), bag.end(), ed.a) - bag.begin());
        int pb = static_cast<int>(std::lower_bound(bag.begin(), bag.end(), ed.b) - bag.begin());
        signed char f = forcing_ ? (*forcing_)[e] : -1;
        DpTable out;
        for (auto& [k, val] : t) {
            if (f != 0) {
                auto key = k;
                relax(out, std::move(key), DpValue{val.w + ed.w, val.count});
            }
            if (f != 1) {
                DpState s = decode(k, bag.size());
                int la = s.label[pa], lb = s.label[pb];
                if (la != lb) {
                    std::uint64_t m = s.mask[la] | s.mask[lb];
                    if (conflicted(m)) continue;
                    for (auto& l : s.label)
                        if (l == lb) l = la;
                    s.mask[la] = m;
                }
                relax(out, encode(s), val);
            }
        }
        t = std::move(out);
    }

    void forget(DpTable& t, std::vector<int>& bag, int v) {
        for (int e : inc_[v]) {
            if (introduced_[e]) continue;
            int u = g_.edges[e].a == v ? g_.edges[e].b : g_.edges[e].a;
            if (!std::binary_search(bag.begin(), bag.end(), u)) continue;
            introduced_[e] = 1;
            introduceEdge(t, bag, e);
        }
        auto pos = static_cast<std::size_t>(std::lower_bound(bag.begin(), bag.end(), v) - bag.begin());
        DpTable out;
        for (auto& [k, val] : t) {
            DpState s = decode(k, bag.size());
            int l = s.label[pos];
            bool alone = true;
            for (std::size_t p = 0; p < s.label.size(); ++p)
                if (p != pos && s.label[p] == l) alone = false;
            if (alone) {
                std::uint64_t m = s.mask[l];
                if (exhaustive_ && (m & baseBits_) == 0) continue;
                m &= groupBits_;
                if (cohesive_ && m) {
                    bool clash = false;
                    for (std::size_t p = 0; p < s.label.size(); ++p)
                        if (s.label[p] != l && (s.mask[s.label[p]] & m)) clash = true;
                    if (clash) continue;
                    s.closed |= m;
                }
            }
            s.label.erase(s.label.begin() + static_cast<long>(pos));
            relax(out, encode(s), val);
        }
        bag.erase(bag.begin() + static_cast<long>(pos));
        t = std::move(out);
    }

    DpTable join(const DpTable& a, const DpTable& b, std::size_t bagSize) {
        DpTable out;
        std::vector<DpState> bs;
        std::vector<DpValue> bv;
        for (auto& [k, v] : b) {
            bs.push_back(decode(k, bagSize));
            bv.push_back(v);
        }
        for (auto& [ka, va] : a) {
            DpState sa = decode(ka, bagSize);
            for (std::size_t i = 0; i < bs.size(); ++i) {
                const DpState& sb = bs[i];
                if (cohesive_) {
                    std::uint64_t openA = 0, openB = 0;
                    for (auto m : sa.mask) openA |= m & groupBits_;
                    for (auto m : sb.mask) openB |= m & groupBits_;
                    if ((sa.closed & (openB | sb.closed)) || (sb.closed & openA)) continue;
                }
                // Union the two partitions over bag positions.
                std::size_t nbA = sa.mask.size();
                UnionFind uf(static_cast<int>(nbA + sb.mask.size()));
                for (std::size_t p = 0; p < bagSize; ++p)
                    uf.unite(sa.label[p], static_cast<int>(nbA) + sb.label[p]);
                DpState s;
                s.closed = sa.closed | sb.closed;
                s.label.resize(bagSize);
                s.mask.assign(nbA + sb.mask.size(), 0);
                for (std::size_t l = 0; l < nbA; ++l) s.mask[uf.find(static_cast<int>(l))] |= sa.mask[l];
                for (std::size_t l = 0; l < sb.mask.size(); ++l)
                    s.mask[uf.find(static_cast<int>(nbA + l))] |= sb.mask[l];
                bool bad = false;
                for (std::size_t p = 0; p < bagSize; ++p) {
                    s.label[p] = uf.find(sa.label[p]);
                }
                for (std::size_t p = 0; p < bagSize && !bad; ++p)
                    if (conflicted(s.mask[s.label[p]])) bad = true;
                if (bad) continue;
                relax(out, encode(s), DpValue{va.w + bv[i].w, satMul(va.count, bv[i].count)});
            }
        }
        return out;
    }

    const WeightedGraph& g_;
    const TreeDecomposition& td_;
    const EdgeForcing* forcing_;
    std::vector<std::uint64_t> classMask_;
    std::uint64_t groupBits_ = 0;
    std::uint64_t baseBits_ = 0;
    std::vector<std::uint64_t> conflict_;
    std::vector<std::vector<int>> inc_;
    std::vector<std::vector<int>> adj_;
    std::vector<char> introduced_;
    bool cohesive_ = false;
    bool exhaustive_ = false;
    bool infeasible_ = false;
};

inline DpValue runDp(const MulticutInstance& inst, const TreeDecomposition& td, const GroupConstraint* gc,
                     const EdgeForcing* forcing, const std::vector<std::pair<int, int>>* separate = nullptr) {
    TreewidthDp dp(inst, td, gc, forcing, separate);
    return dp.run();
}

}  // namespace detail

// Exact optimum by partition-state dynamic programming over a tree decomposition.
// The returned cut is the lexicographically smallest optimal edge sequence.
inline MulticutSolution minMulticutByTreewidthDP(const MulticutInstance& inst, const TreeDecomposition& td,
                                                 const GroupConstraint* constraint = nullptr,
                                                 DpMode mode = DpMode::Optimize, int widthCap = 14,
                                                 bool reconstructCut = true) {
    inst.validate();
    validateDecomposition(inst.graph, td);
    if (td.width() > widthCap)
        throw CapExceeded("decomposition width " + std::to_string(td.width()) + " exceeds cap " +
                          std::to_string(widthCap));
    if (td.width() > 15) throw CapExceeded("bag size beyond packed-state limit");
    MulticutSolution sol;
    detail::DpValue opt = detail::runDp(inst, td, constraint, nullptr);
    sol.weight = opt.w;
    if (mode == DpMode::CountOptima) sol.optimaCount = opt.count;
    if (opt.count == 0) {
        sol.feasible = false;
        sol.weight = INF;
        return sol;
    }
    if (!reconstructCut) return sol;

    // Decide edges in id order. Only cuts whose edges all join distinct components are candidates;
    // a zero-weight forced cut is made tight by an explicit vertex separation.
    const int m = inst.graph.edgeCount();
    EdgeForcing force(m, -1);
    std::vector<std::pair<int, int>> separate;
    auto optimalUnder = [&](const EdgeForcing& f, const std::vector<std::pair<int, int>>& sep) {
        detail::DpValue v = detail::runDp(inst, td, constraint, &f, &sep);
        return v.count > 0 && v.w == opt.w;
    };
    for (int e = 0; e < m; ++e) {
        EdgeForcing rest = force;
        for (int r = e; r < m; ++r) rest[r] = 0;
        if (optimalUnder(rest, separate)) break;
        EdgeForcing tryCut = force;
        tryCut[e] = 1;
        auto sep = separate;
        const auto& ed = inst.graph.edges[e];
        bool zero = ed.w == Weight(0);
        if (zero) sep.emplace_back(ed.a, ed.b);
        if (ed.a != ed.b && optimalUnder(tryCut, sep)) {
            force = std::move(tryCut);
            separate = std::move(sep);
            sol.cut.push_back(e);
        } else {
            force[e] = 0;
        }
    }
    return sol;
}

}  // namespace mcwb

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mcwb/gadget.hpp"

namespace mcwb {

// How a gadget's representation follows from a CSP assignment.
struct RepresentationRule {
    enum class Kind { Fixed, Variable, Constraint } kind = Kind::Fixed;
    int u = -1, v = -1;     // variables read by the rule
    bool reverseU = false;  // value i read as delta + 1 - i
    bool reverseV = false;
    bool swapped = false;   // (v-part, u-part) instead of (u-part, v-part)
};

// Gadgets glued along identified vertices, with the assembled multicut instance.
struct Reduction {
    std::vector<GridGadget> gadgets;
    std::vector<std::string> roles;
    std::vector<std::vector<int>> vertexMap;  // gadget, local vertex -> output vertex
    std::vector<std::vector<int>> edgeMap;    // gadget, local edge -> output edge, -1 when it became a loop
    MulticutInstance instance;
    std::vector<std::vector<int>> groups;     // terminal groups; demands join distinct groups
    Weight wstar = INF;                       // encoder-relative
    Weight closedFormWstar = INF;
    Weight lambda = INF;
    int droppedLoops = 0;
    std::vector<RepresentationRule> rules;
    Json transcript;

    int genusUpperBound() const {
        const auto& g = instance.graph;
        int comps = static_cast<int>(componentsOf(g, {}).blocks.size());
        return std::max(0, (g.edgeCount() - g.vertexCount + comps) / 2);
    }
};

namespace detail {

class Assembler {
public:
    explicit Assembler(const std::vector<GridGadget>& gadgets) : gadgets_(gadgets) {
        for (const auto& g : gadgets) {
            offset_.push_back(total_);
            total_ += g.graph.vertexCount;
        }
        uf_ = UnionFind(total_);
    }

    int id(int gadget, int v) const { return offset_[gadget] + v; }
    void glue(int ga, int va, int gb, int vb) { uf_.unite(id(ga, va), id(gb, vb)); }

    void finish(Reduction& out) {
        std::vector<int> global(total_, -1);
        int next = 0;
        for (int x = 0; x < total_; ++x) {
            int r = uf_.find(x);
            if (global[r] < 0) global[r] = next++;
            global[x] = global[r];
        }
        out.instance = MulticutInstance{};
        out.instance.graph = WeightedGraph(next);
        out.vertexMap.assign(gadgets_.size(), {});
        out.edgeMap.assign(gadgets_.size(), {});
        Json origins = Json::array();
        std::vector<Json> originOf(next, Json::array());
        for (std::size_t k = 0; k < gadgets_.size(); ++k) {
            const auto& g = gadgets_[k];
            for (int v = 0; v < g.graph.vertexCount; ++v) {
                int o = global[id(static_cast<int>(k), v)];
                out.vertexMap[k].push_back(o);
                auto [i, j] = g.coords(v);
                originOf[o].push_back(Json::array({k, i, j}));
            }
            for (const auto& e : g.graph.edges) {
                int a = out.vertexMap[k][e.a], b = out.vertexMap[k][e.b];
                if (a == b) {
                    ++out.droppedLoops;
                    out.edgeMap[k].push_back(-1);
                    continue;
                }
                out.edgeMap[k].push_back(out.instance.graph.addEdge(a, b, e.w));
            }
        }
        for (auto& o : originOf) origins.push_back(std::move(o));
        out.transcript["vertexOrigins"] = std::move(origins);
    }

private:
    const std::vector<GridGadget>& gadgets_;
    std::vector<int> offset_;
    int total_ = 0;
    UnionFind uf_{0};
};

inline void setGroupDemands(Reduction& red) {
    auto& p = red.instance.pattern;
    p = DemandPattern{};
    for (const auto& grp : red.groups) p.terminals.insert(p.terminals.end(), grp.begin(), grp.end());
    for (std::size_t a = 0; a < red.groups.size(); ++a)
        for (std::size_t b = a + 1; b < red.groups.size(); ++b)
            for (int x : red.groups[a])
                for (int y : red.groups[b])
                    if (x != y) p.demands.emplace_back(x, y);
    p.normalize();
}

inline Json pairsToJson(const std::vector<Pair>& s) {
    Json j = Json::array();
    for (auto [x, y] : s) j.push_back(Json::array({x, y}));
    return j;
}

inline std::vector<Pair> pairsFromJson(const Json& j) {
    std::vector<Pair> s;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) throw InputError("pair must be a two-element array");
        s.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Tiling

struct TilingEdge {
    int a = 0, b = 0;
    Side atA = Side::U, atB = Side::U;  // label of the edge at each end
};

struct TilingInstance {
    int k = 0;
    int delta = 1;
    std::vector<TilingEdge> edges;
    std::vector<std::vector<Pair>> allowed;  // per vertex, subset of [delta]^2

    void validate() const {
        if (k < 1 || delta < 1) throw InputError("tiling needs k >= 1 and delta >= 1");
        if (static_cast<int>(allowed.size()) != k) throw InputError("tiling needs one allowed set per vertex");
        std::vector<std::array<int, 4>> seen(k, {0, 0, 0, 0});
        for (const auto& e : edges) {
            if (e.a < 0 || e.b < 0 || e.a >= k || e.b >= k) throw InputError("tiling edge endpoint out of range");
            ++seen[e.a][static_cast<int>(e.atA)];
            ++seen[e.b][static_cast<int>(e.atB)];
        }
        for (int v = 0; v < k; ++v)
            for (int s = 0; s < 4; ++s)
                if (seen[v][s] != 1)
                    throw InputError("tiling vertex " + std::to_string(v) + " needs exactly one " +
                                     sideName(static_cast<Side>(s)) + " edge");
        for (const auto& s : allowed)
            for (auto [x, y] : s)
                if (x < 1 || y < 1 || x > delta || y > delta) throw InputError("tiling pair outside [delta]^2");
    }

    // Neighbour across the edge labelled `side` at v.
    int neighbour(int v, Side side) const {
        for (const auto& e : edges) {
            if (e.a == v && e.atA == side) return e.b;
            if (e.b == v && e.atB == side) return e.a;
        }
        throw InputError("missing tiling edge");
    }

    bool isSolution(const std::vector<Pair>& choice) const {
        if (static_cast<int>(choice.size()) != k) return false;
        for (int v = 0; v < k; ++v) {
            if (std::find(allowed[v].begin(), allowed[v].end(), choice[v]) == allowed[v].end()) return false;
            auto [i, j] = choice[v];
            if (choice[neighbour(v, Side::L)].first != i || choice[neighbour(v, Side::R)].first != i) return false;
            if (choice[neighbour(v, Side::U)].second != j || choice[neighbour(v, Side::D)].second != j) return false;
        }
        return true;
    }

    Json toJson() const {
        Json es = Json::array();
        for (const auto& e : edges)
            es.push_back({{"a", e.a}, {"b", e.b}, {"sides", {sideName(e.atA), sideName(e.atB)}}});
        Json al = Json::array();
        for (const auto& s : allowed) al.push_back(detail::pairsToJson(s));
        return {{"k", k}, {"delta", delta}, {"edges", es}, {"allowed", al}};
    }

    static TilingInstance fromJson(const Json& j) {
        TilingInstance t;
        try {
            t.k = j.at("k").get<int>();
            t.delta = j.at("delta").get<int>();
            for (const auto& e : j.at("edges")) {
                const auto& sides = e.at("sides");
                if (!sides.is_array() || sides.size() != 2) throw InputError("tiling edge needs two side labels");
                t.edges.push_back({e.at("a").get<int>(), e.at("b").get<int>(),
                                   sideFromName(sides[0].get<std::string>()),
                                   sideFromName(sides[1].get<std::string>())});
            }
            for (const auto& s : j.at("allowed")) t.allowed.push_back(detail::pairsFromJson(s));
        } catch (const Json::exception& ex) {
            throw InputError(std::string("malformed tiling: ") + ex.what());
        }
        t.validate();
        return t;
    }
};

enum class TilingMode { FourTerminal, ThreeTerminal };

// One gadget per tiling vertex; each edge identifies its two sides pairwise by index; corners merge by label,
// and the three-terminal mode also merges UR with DL.
inline Reduction buildTilingInstance(const TilingInstance& tiling, TilingMode mode,
                                     const CellEncoder& encoder = repoCell(), int widthCap = kGadgetWidthCap) {
    tiling.validate();
    Reduction red;
    red.wstar = encoderWstar(tiling.delta, encoder, widthCap);
    for (int v = 0; v < tiling.k; ++v) {
        if (tiling.allowed[v].empty()) throw InputError("tiling vertex " + std::to_string(v) + " allows no pair");
        red.gadgets.push_back(buildGridGadget(tiling.delta, tiling.allowed[v], encoder));
        red.roles.push_back("tile");
        red.rules.push_back({});
    }
    red.closedFormWstar = red.gadgets[0].closedFormWstar();
    detail::Assembler as(red.gadgets);
    for (const auto& e : tiling.edges) {
        const auto& sa = red.gadgets[e.a].sideVertices(e.atA);
        const auto& sb = red.gadgets[e.b].sideVertices(e.atB);
        for (std::size_t s = 0; s < sa.size(); ++s) as.glue(e.a, sa[s], e.b, sb[s]);
    }
    for (int v = 1; v < tiling.k; ++v) {
        const auto& g0 = red.gadgets[0];
        const auto& gv = red.gadgets[v];
        as.glue(0, g0.ul, v, gv.ul);
        as.glue(0, g0.ur, v, gv.ur);
        as.glue(0, g0.dl, v, gv.dl);
        as.glue(0, g0.dr, v, gv.dr);
    }
    const auto& g0 = red.gadgets[0];
    if (mode == TilingMode::ThreeTerminal) as.glue(0, g0.ur, 0, g0.dl);
    as.finish(red);
    std::set<int> corners{red.vertexMap[0][g0.ul], red.vertexMap[0][g0.ur], red.vertexMap[0][g0.dl],
                          red.vertexMap[0][g0.dr]};
    for (int c : corners) red.groups.push_back({c});
    detail::setGroupDemands(red);
    red.lambda = red.wstar * static_cast<std::uint64_t>(tiling.k);
    red.instance.budget = red.lambda;

    red.transcript["kind"] = "tiling";
    red.transcript["mode"] = mode == TilingMode::FourTerminal ? "four-terminal" : "three-terminal";
    red.transcript["encoder"] = encoder.name;
    red.transcript["wstar"] = weightToJson(red.wstar);
    red.transcript["wstarKind"] = "encoder-relative";
    red.transcript["closedFormWstar"] = weightToJson(red.closedFormWstar);
    red.transcript["lambda"] = weightToJson(red.lambda);
    red.transcript["terminals"] = red.instance.pattern.terminals;
    red.transcript["droppedLoops"] = red.droppedLoops;
    red.transcript["genusUpperBound"] = red.genusUpperBound();
    return red;
}

// ---------------------------------------------------------------------------------------------
// Binary CSP with a 4-regular embedded primal graph

struct CspConstraint {
    int u = 0, v = 0;
    std::vector<Pair> relation;  // allowed (value of u, value of v), values in [domain]
};

struct CspInstance {
    int variables = 0;
    int domain = 1;
    std::vector<CspConstraint> constraints;
    // Cyclic order of constraint ends around each variable; a loop constraint appears twice.
    std::vector<std::vector<int>> rotation;

    void validate() const {
        if (variables < 1 || domain < 1) throw InputError("csp needs variables and a domain");
        if (static_cast<int>(rotation.size()) != variables) throw InputError("csp needs one rotation per variable");
        for (const auto& k : constraints)
            if (k.u < 0 || k.v < 0 || k.u >= variables || k.v >= variables) throw InputError("constraint out of range");
        std::map<std::pair<int, int>, int> ends;  // (constraint, variable) -> listed ends
        for (int x = 0; x < variables; ++x) {
            if (rotation[x].size() != 4) throw InputError("primal graph is not 4-regular");
            for (int c : rotation[x]) {
                if (c < 0 || c >= static_cast<int>(constraints.size()))
                    throw InputError("rotation names no constraint");
                ++ends[{c, x}];
            }
        }
        for (std::size_t c = 0; c < constraints.size(); ++c) {
            const auto& k = constraints[c];
            const int ci = static_cast<int>(c);
            bool ok = k.u == k.v ? ends[{ci, k.u}] == 2 : ends[{ci, k.u}] == 1 && ends[{ci, k.v}] == 1;
            if (!ok) throw InputError("rotation does not match the primal graph of the constraints");
            for (auto [a, b] : k.relation)
                if (a < 1 || b < 1 || a > domain || b > domain) throw InputError("relation value outside domain");
        }
    }

    bool satisfies(const std::vector<int>& value) const {
        if (static_cast<int>(value.size()) != variables) return false;
        for (const auto& k : constraints)
            if (std::find(k.relation.begin(), k.relation.end(), Pair{value[k.u], value[k.v]}) == k.relation.end())
                return false;
        return true;
    }

    Json toJson() const {
        Json cs = Json::array();
        for (const auto& k : constraints)
            cs.push_back({{"u", k.u}, {"v", k.v}, {"relation", detail::pairsToJson(k.relation)}});
        return {{"variables", variables}, {"domain", domain}, {"constraints", cs}, {"rotation", rotation}};
    }

    static CspInstance fromJson(const Json& j) {
        CspInstance c;
        try {
            c.variables = j.at("variables").get<int>();
            c.domain = j.at("domain").get<int>();
            for (const auto& k : j.at("constraints"))
                c.constraints.push_back(
                    {k.at("u").get<int>(), k.at("v").get<int>(), detail::pairsFromJson(k.at("relation"))});
            c.rotation = j.at("rotation").get<std::vector<std::vector<int>>>();
        } catch (const Json::exception& ex) {
            throw InputError(std::string("malformed csp: ") + ex.what());
        }
        c.validate();
        return c;
    }
};

// The auxiliary graph whose 4-cycles carry one gadget each, with its colouring.
struct CycleGraph {
    int vertexCount = 0;
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> cycles;  // traversal order, consistent orientation
    std::vector<std::string> roles;        // "variable", "constraint", "incidence"
    std::vector<int> owner;                // variable or constraint index
    std::vector<int> colour;               // values 1..3
    struct Incidence {
        int variable, slot, constraint, end;
    };
    std::vector<Incidence> incidences;  // parallel to the incidence cycles
    std::vector<int> variableCycle, constraintCycle;
    std::vector<std::array<int, 2>> incidenceCycle;  // per constraint, by end

    bool properColouring() const {
        for (auto [a, b] : edges)
            if (colour[a] == colour[b]) return false;
        return true;
    }
    bool everyCycleSeesThreeColours() const {
        for (const auto& c : cycles) {
            std::set<int> s;
            for (int v : c) s.insert(colour[v]);
            if (s.size() != 3) return false;
        }
        return true;
    }
};

inline CycleGraph buildCycleGraph(const CspInstance& csp) {
    csp.validate();
    const int V = csp.variables, E = static_cast<int>(csp.constraints.size());
    CycleGraph q;
    q.vertexCount = 4 * V + 4 * E;
    auto x = [&](int v, int i) { return 4 * v + (i % 4); };
    auto y = [&](int e, int j) { return 4 * V + 4 * e + j; };
    for (int v = 0; v < V; ++v)
        for (int i = 0; i < 4; ++i) q.names.push_back("x" + std::to_string(v) + "_" + std::to_string(i + 1));
    for (int e = 0; e < E; ++e)
        for (int j = 0; j < 4; ++j) q.names.push_back("y" + std::to_string(e) + "_" + std::to_string(j + 1));
    for (int v = 0; v < V; ++v)
        for (int i = 0; i < 4; ++i) q.edges.emplace_back(x(v, i), x(v, i + 1));
    for (int e = 0; e < E; ++e)
        for (int j = 0; j < 4; ++j) q.edges.emplace_back(y(e, j), y(e, (j + 1) % 4));

    // The end of a constraint met at a rotation slot; the first visit of a loop is end 0.
    std::vector<int> visits(E, 0);
    q.incidenceCycle.assign(E, {-1, -1});
    std::vector<CycleGraph::Incidence> inc;
    for (int v = 0; v < V; ++v)
        for (int i = 0; i < 4; ++i) {
            int e = csp.rotation[v][i];
            const auto& k = csp.constraints[e];
            int end = k.u == k.v ? visits[e]++ : (v == k.u ? 0 : 1);
            inc.push_back({v, i, e, end});
            q.edges.emplace_back(x(v, i), y(e, end));
            q.edges.emplace_back(x(v, i + 1), y(e, end + 1));
        }

    for (int v = 0; v < V; ++v) {
        q.variableCycle.push_back(static_cast<int>(q.cycles.size()));
        q.cycles.push_back({x(v, 0), x(v, 1), x(v, 2), x(v, 3)});
        q.roles.push_back("variable");
        q.owner.push_back(v);
    }
    for (int e = 0; e < E; ++e) {
        q.constraintCycle.push_back(static_cast<int>(q.cycles.size()));
        q.cycles.push_back({y(e, 3), y(e, 2), y(e, 1), y(e, 0)});
        q.roles.push_back("constraint");
        q.owner.push_back(e);
    }
    for (const auto& in : inc) {
        q.incidenceCycle[in.constraint][in.end] = static_cast<int>(q.cycles.size());
        q.cycles.push_back({x(in.variable, in.slot + 1), x(in.variable, in.slot), y(in.constraint, in.end),
                            y(in.constraint, in.end + 1)});
        q.roles.push_back("incidence");
        q.owner.push_back(in.constraint);
        q.incidences.push_back(in);
    }

    q.colour.assign(q.vertexCount, 0);
    for (int v = 0; v < V; ++v) {
        q.colour[x(v, 0)] = q.colour[x(v, 2)] = 1;
        q.colour[x(v, 1)] = 2;
        q.colour[x(v, 3)] = 3;
    }
    auto other = [](int a, int b) {
        for (int c = 1; c <= 3; ++c)
            if (c != a && c != b) return c;
        return 1;
    };
    for (int e = 0; e < E; ++e) {
        const auto& i0 = q.incidences[q.incidenceCycle[e][0] - V - E];
        const auto& i1 = q.incidences[q.incidenceCycle[e][1] - V - E];
        const int c1 = q.colour[x(i0.variable, i0.slot)], c2 = q.colour[x(i0.variable, i0.slot + 1)];
        const int c3 = q.colour[x(i1.variable, i1.slot)], c4 = q.colour[x(i1.variable, i1.slot + 1)];
        int& y1 = q.colour[y(e, 0)];
        int& y2 = q.colour[y(e, 1)];
        int& y3 = q.colour[y(e, 2)];
        int& y4 = q.colour[y(e, 3)];
        y2 = other(c2, c3);
        y1 = c1 == y2 ? other(c1, c2) : c2;
        y3 = c4 == y2 ? other(c3, c4) : c3;
        y4 = y1 == y3 ? other(y1, y2) : y2;
    }
    return q;
}

namespace detail {

// Corner labels of a cycle: the same-coloured pair becomes DL and UR, and DL, UL, UR, DR run in cycle order.
struct CycleCorners {
    int dl, ul, ur, dr;  // Q vertices
};

inline CycleCorners cycleCorners(const CycleGraph& q, const std::vector<int>& c) {
    for (int p = 0; p < 2; ++p)
        if (q.colour[c[p]] == q.colour[c[p + 2]]) return {c[p], c[p + 1], c[p + 2], c[(p + 3) % 4]};
    throw InputError("cycle has no same-coloured opposite pair");
}

// The gadget side whose corners sit at Q vertices a and b; the flag tells whether its
// distinguished vertices run from a towards b.
inline std::pair<Side, bool> sideBetween(const CycleCorners& cc, int a, int b) {
    auto is = [&](int p, int q) { return (a == p && b == q) || (a == q && b == p); };
    if (is(cc.ul, cc.ur)) return {Side::U, a == cc.ul};
    if (is(cc.dl, cc.dr)) return {Side::D, a == cc.dl};
    if (is(cc.ul, cc.dl)) return {Side::L, a == cc.ul};
    if (is(cc.ur, cc.dr)) return {Side::R, a == cc.ur};
    throw InputError("vertices do not span a gadget side");
}

inline bool sameSidePart(Side a, Side b) {
    auto part = [](Side s) { return s == Side::U || s == Side::R ? 0 : 1; };
    return part(a) == part(b);
}

}  // namespace detail

// Gadgets on every cycle of the auxiliary graph, corners merged per auxiliary vertex, shared sides identified
// pairwise in position order; terminal groups are the colour classes.
inline Reduction buildGroup3TCInstance(const CspInstance& csp, const CellEncoder& encoder = repoCell(),
                                       int widthCap = kGadgetWidthCap) {
    CycleGraph q = buildCycleGraph(csp);
    const int D = csp.domain;
    Reduction red;
    red.wstar = encoderWstar(D, encoder, widthCap);
    const int C = static_cast<int>(q.cycles.size());
    std::vector<detail::CycleCorners> corners;
    for (const auto& c : q.cycles) corners.push_back(detail::cycleCorners(q, c));

    // Which cycles use each auxiliary edge.
    std::map<std::pair<int, int>, std::vector<int>> users;
    for (int k = 0; k < C; ++k)
        for (int p = 0; p < 4; ++p) users[std::minmax(q.cycles[k][p], q.cycles[k][(p + 1) % 4])].push_back(k);
    auto sharedSide = [&](int k, int other) -> Side {
        for (const auto& [ab, us] : users)
            if (us.size() == 2 && ((us[0] == k && us[1] == other) || (us[1] == k && us[0] == other)))
                return detail::sideBetween(corners[k], ab.first, ab.second).first;
        throw InputError("cycles share no side");
    };

    red.rules.assign(C, {});
    std::vector<std::vector<Pair>> allowed(C);
    for (int k = 0; k < C; ++k) {
        auto& rule = red.rules[k];
        if (q.roles[k] == "variable") {
            for (int a = 1; a <= D; ++a) allowed[k].emplace_back(a, a);
            rule.kind = RepresentationRule::Kind::Variable;
            rule.u = rule.v = q.owner[k];
        } else if (q.roles[k] == "incidence") {
            allowed[k] = fullRelation(D);
            const auto& in = q.incidences[k - csp.variables - static_cast<int>(csp.constraints.size())];
            rule.kind = RepresentationRule::Kind::Variable;
            rule.u = rule.v = in.variable;
        } else {
            const int e = q.owner[k];
            const auto& con = csp.constraints[e];
            const int incU = q.incidenceCycle[e][0], incV = q.incidenceCycle[e][1];
            const int varU = q.variableCycle[con.u], varV = q.variableCycle[con.v];
            rule.kind = RepresentationRule::Kind::Constraint;
            rule.u = con.u;
            rule.v = con.v;
            rule.reverseU = detail::sameSidePart(sharedSide(varU, incU), sharedSide(k, incU));
            rule.reverseV = detail::sameSidePart(sharedSide(varV, incV), sharedSide(k, incV));
            Side toU = sharedSide(k, incU);
            rule.swapped = !(toU == Side::L || toU == Side::R);
            for (auto [i, j] : con.relation) {
                int a = rule.reverseU ? D + 1 - i : i, b = rule.reverseV ? D + 1 - j : j;
                allowed[k].push_back(rule.swapped ? Pair{b, a} : Pair{a, b});
            }
            if (allowed[k].empty())
                throw InputError("constraint " + std::to_string(e) + " has an empty relation");
        }
        red.gadgets.push_back(buildGridGadget(D, allowed[k], encoder));
        red.roles.push_back(q.roles[k]);
    }
    red.closedFormWstar = red.gadgets[0].closedFormWstar();

    detail::Assembler as(red.gadgets);
    // Corners: one output vertex per auxiliary vertex.
    std::vector<std::pair<int, int>> anchor(q.vertexCount, {-1, -1});
    auto bindCorner = [&](int k, int qv, int local) {
        if (anchor[qv].first < 0) anchor[qv] = {k, local};
        else as.glue(anchor[qv].first, anchor[qv].second, k, local);
    };
    for (int k = 0; k < C; ++k) {
        const auto& g = red.gadgets[k];
        bindCorner(k, corners[k].ul, g.ul);
        bindCorner(k, corners[k].ur, g.ur);
        bindCorner(k, corners[k].dl, g.dl);
        bindCorner(k, corners[k].dr, g.dr);
    }
    // Shared sides: distinguished vertices matched by position from the common endpoint.
    Json glued = Json::array();
    for (const auto& [ab, us] : users) {
        if (us.size() > 2) throw InputError("auxiliary edge on more than two cycles");
        if (us.size() < 2) continue;
        auto listFrom = [&](int k) {
            auto [side, forward] = detail::sideBetween(corners[k], ab.first, ab.second);
            std::vector<int> l = red.gadgets[k].sideVertices(side);
            if (!forward) std::reverse(l.begin(), l.end());
            return std::make_pair(side, l);
        };
        auto [s0, l0] = listFrom(us[0]);
        auto [s1, l1] = listFrom(us[1]);
        for (std::size_t s = 0; s < l0.size(); ++s) as.glue(us[0], l0[s], us[1], l1[s]);
        glued.push_back({{"edge", {q.names[ab.first], q.names[ab.second]}},
                         {"gadgets", {us[0], us[1]}},
                         {"sides", {sideName(s0), sideName(s1)}}});
    }
    as.finish(red);

    red.groups.assign(3, {});
    for (int v = 0; v < q.vertexCount; ++v) {
        auto [k, local] = anchor[v];
        red.groups[q.colour[v] - 1].push_back(red.vertexMap[k][local]);
    }
    for (auto& grp : red.groups) std::sort(grp.begin(), grp.end());
    detail::setGroupDemands(red);
    red.lambda = red.wstar * static_cast<std::uint64_t>(C);
    red.instance.budget = red.lambda;

    Json gj = Json::array();
    for (int k = 0; k < C; ++k) {
        const auto& cc = corners[k];
        const auto& r = red.rules[k];
        Json rj{{"reverseU", r.reverseU}, {"reverseV", r.reverseV}, {"swapped", r.swapped}};
        gj.push_back({{"role", q.roles[k]},
                      {"owner", q.owner[k]},
                      {"cycle", [&] {
                           Json c = Json::array();
                           for (int v : q.cycles[k]) c.push_back(q.names[v]);
                           return c;
                       }()},
                      {"corners",
                       {{"UL", q.names[cc.ul]},
                        {"UR", q.names[cc.ur]},
                        {"DL", q.names[cc.dl]},
                        {"DR", q.names[cc.dr]}}},
                      {"allowed", detail::pairsToJson(red.gadgets[k].allowed)},
                      {"rule", rj}});
    }
    Json colours = Json::object();
    for (int v = 0; v < q.vertexCount; ++v) colours[q.names[v]] = q.colour[v];
    Json terminalNames = Json::object();
    for (int v = 0; v < q.vertexCount; ++v) {
        auto [k, local] = anchor[v];
        terminalNames[std::to_string(red.vertexMap[k][local])] = q.names[v];
    }
    red.transcript["kind"] = "csp3t";
    red.transcript["encoder"] = encoder.name;
    red.transcript["cycles"] = C;
    red.transcript["gadgets"] = gj;
    red.transcript["gluedSides"] = glued;
    red.transcript["colouring"] = colours;
    red.transcript["terminalNames"] = terminalNames;
    red.transcript["groups"] = red.groups;
    red.transcript["wstar"] = weightToJson(red.wstar);
    red.transcript["wstarKind"] = "encoder-relative";
    red.transcript["closedFormWstar"] = weightToJson(red.closedFormWstar);
    red.transcript["lambda"] = weightToJson(red.lambda);
    red.transcript["droppedLoops"] = red.droppedLoops;
    red.transcript["genusUpperBound"] = red.genusUpperBound();
    return red;
}

// Representation each gadget takes under an assignment (values in [domain]).
inline std::vector<Pair> cspRepresentations(const Reduction& red, const std::vector<int>& value, int domain) {
    std::vector<Pair> reps;
    for (const auto& r : red.rules) {
        if (r.kind != RepresentationRule::Kind::Constraint) {
            reps.emplace_back(value.at(r.u), value.at(r.u));
            continue;
        }
        int a = value.at(r.u), b = value.at(r.v);
        if (r.reverseU) a = domain + 1 - a;
        if (r.reverseV) b = domain + 1 - b;
        reps.push_back(r.swapped ? Pair{b, a} : Pair{a, b});
    }
    return reps;
}

inline Json reductionToJson(const Reduction& red) {
    return {{"instance", instanceToJson(red.instance)},
            {"groups", red.groups},
            {"lambda", weightToJson(red.lambda)},
            {"wstar", weightToJson(red.wstar)},
            {"wstarKind", "encoder-relative"},
            {"closedFormWstar", weightToJson(red.closedFormWstar)},
            {"droppedLoops", red.droppedLoops},
            {"genusUpperBound", red.genusUpperBound()},
            {"transcript", red.transcript}};
}

struct RepresentingUnion {
    EdgeSet cut;
    Weight weight = INF;
    bool separatesGroups = false;  // a valid cut of the assembled instance
    bool weightIsLambda = false;

    Json toJson() const {
        return {{"cut", cut}, {"weight", weightToJson(weight)}, {"separatesGroups", separatesGroups},
                {"weightIsLambda", weightIsLambda}};
    }
};

// Union of one cheapest representing cut per gadget, mapped into the assembled instance.
inline RepresentingUnion representingUnion(const Reduction& red, const std::vector<Pair>& reps,
                                           int widthCap = kGadgetWidthCap) {
    if (reps.size() != red.gadgets.size()) throw InputError("one representation per gadget required");
    RepresentingUnion out;
    std::map<std::pair<std::vector<Pair>, Pair>, EdgeSet> cache;
    for (std::size_t k = 0; k < red.gadgets.size(); ++k) {
        const auto& g = red.gadgets[k];
        auto key = std::make_pair(g.innerEdges.empty() ? std::vector<Pair>{} : g.allowed, reps[k]);
        auto it = cache.find(key);
        if (it == cache.end()) {
            auto r = forcedRepresentationCut(g, reps[k].first, reps[k].second, GoodCutMode::Optimize, widthCap);
            if (r.weight.isInf()) throw InputError("representation cannot be realised in gadget " + std::to_string(k));
            it = cache.emplace(key, r.cut).first;
        }
        for (int e : it->second)
            if (red.edgeMap[k][e] >= 0) out.cut.push_back(red.edgeMap[k][e]);
    }
    out.cut = canonicalizeSolution(out.cut);
    out.weight = cutWeight(red.instance.graph, out.cut);
    out.separatesGroups = isMulticut(red.instance, out.cut);
    out.weightIsLambda = out.weight == red.lambda;
    return out;
}

}  // namespace mcwb

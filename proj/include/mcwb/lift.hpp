#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcwb/graph.hpp"
#include "mcwb/io.hpp"
#include "mcwb/pattern_graph.hpp"

namespace mcwb {

struct ReductionMismatch : InputError {
    using InputError::InputError;
};

// Demand pattern of an instance with vertex i standing for terminals[i].
inline PatternGraph terminalPattern(const MulticutInstance& inst) {
    const auto& ts = inst.pattern.terminals;
    PatternGraph h(static_cast<int>(ts.size()));
    auto index = [&](int v) {
        return static_cast<int>(std::lower_bound(ts.begin(), ts.end(), v) - ts.begin());
    };
    for (auto [a, b] : inst.pattern.demands) h.addEdge(index(a), index(b));
    return h;
}

struct LiftReport {
    MulticutInstance input;
    std::optional<MulticutInstance> output;   // empty when the shortcut fired
    std::vector<ProjectionStep> stepsApplied;  // in lifting order (reverse of the witness)
    std::pair<long, long> sizeRatio{1, 1};     // (|V|+|E|) of output over input
    std::optional<bool> shortcutYes;
};

namespace detail {

inline long instanceSize(const MulticutInstance& inst) {
    return inst.graph.vertexCount + inst.graph.edgeCount();
}

// Realises pattern H on host vertices: hostOf[x] is the graph vertex of H-vertex x.
inline void setPattern(MulticutInstance& inst, const PatternGraph& h, const std::vector<int>& hostOf) {
    inst.pattern.terminals = hostOf;
    inst.pattern.demands.clear();
    for (auto [a, b] : h.edges()) inst.pattern.demands.emplace_back(hostOf[a], hostOf[b]);
    inst.pattern.normalize();
}

inline LiftReport finishReport(const MulticutInstance& in, MulticutInstance out, ProjectionStep step) {
    LiftReport r;
    r.input = in;
    r.sizeRatio = {instanceSize(out), instanceSize(in)};
    r.output = std::move(out);
    r.stepsApplied = {step};
    return r;
}

}  // namespace detail

// Undo one vertex deletion: H minus some v0 must be isomorphic to the instance pattern.
inline LiftReport liftDeleteVertex(const MulticutInstance& inst, const PatternGraph& h) {
    PatternGraph hp = terminalPattern(inst);
    for (int v0 = 0; v0 < h.n; ++v0) {
        std::vector<int> keep;
        for (int x = 0; x < h.n; ++x)
            if (x != v0) keep.push_back(x);
        auto tau = findIsomorphism(h.induced(keep), hp);
        if (!tau) continue;
        MulticutInstance out = inst;
        int fresh = out.graph.addVertex();
        std::vector<int> hostOf(h.n);
        for (std::size_t i = 0; i < keep.size(); ++i) hostOf[keep[i]] = inst.pattern.terminals[(*tau)[i]];
        hostOf[v0] = fresh;
        detail::setPattern(out, h, hostOf);
        if (out.rotation) out.rotation->emplace_back();
        return detail::finishReport(inst, std::move(out), ProjectionStep::remove(v0));
    }
    throw ReductionMismatch("no vertex of H leaves a pattern isomorphic to the instance pattern");
}

// Undo one identification of nonadjacent u0, v0 by tying them with |E(G')| two-edge paths of max weight.
inline LiftReport liftIdentify(const MulticutInstance& inst, const PatternGraph& h) {
    PatternGraph hp = terminalPattern(inst);
    for (int u0 = 0; u0 < h.n; ++u0)
        for (int v0 = u0 + 1; v0 < h.n; ++v0) {
            if (h.has(u0, v0)) continue;
            std::vector<int> survivors;
            PatternGraph merged = applyProjection(h, {ProjectionStep::identify(u0, v0)}, &survivors);
            auto tau = findIsomorphism(merged, hp);
            if (!tau) continue;
            const auto& g = inst.graph;
            Weight maxW(0);
            for (const auto& e : g.edges) maxW = std::max(maxW, e.w);
            const auto m = static_cast<std::uint64_t>(g.edgeCount());
            if (inst.budget && maxW * m <= *inst.budget) {
                LiftReport r;
                r.input = inst;
                r.shortcutYes = true;
                r.stepsApplied = {ProjectionStep::identify(u0, v0)};
                return r;
            }
            MulticutInstance out = inst;
            std::vector<int> hostOf(h.n);
            for (std::size_t i = 0; i < survivors.size(); ++i)
                hostOf[survivors[i]] = inst.pattern.terminals[(*tau)[i]];
            int hostU = hostOf[u0];
            int fresh = out.graph.addVertex();
            hostOf[v0] = fresh;
            if (out.rotation) out.rotation->emplace_back();
            std::vector<int> nearU, nearV;
            for (std::uint64_t p = 0; p < m; ++p) {
                int mid = out.graph.addVertex();
                int e1 = out.graph.addEdge(hostU, mid, maxW);
                int e2 = out.graph.addEdge(mid, fresh, maxW);
                nearU.push_back(e1);
                nearV.push_back(e2);
                if (out.rotation) out.rotation->push_back({e1, e2});
            }
            if (out.rotation) {
                // The bundle is drawn in one face at u; v's order is reversed to keep it plane.
                auto& ru = (*out.rotation)[hostU];
                ru.insert(ru.end(), nearU.begin(), nearU.end());
                (*out.rotation)[fresh].assign(nearV.rbegin(), nearV.rend());
            }
            detail::setPattern(out, h, hostOf);
            return detail::finishReport(inst, std::move(out), ProjectionStep::identify(u0, v0));
        }
    throw ReductionMismatch("no nonadjacent pair of H identifies to the instance pattern");
}

// Lifts an instance whose pattern is the projection of H along `witness` back to pattern H.
inline LiftReport liftProjection(const MulticutInstance& inst, const PatternGraph& h,
                                 const std::vector<ProjectionStep>& witness) {
    // Intermediate patterns H_0 = H, ..., H_q = projection.
    std::vector<PatternGraph> chain{h};
    for (std::size_t i = 0; i < witness.size(); ++i)
        chain.push_back(applyProjection(h, std::vector<ProjectionStep>(witness.begin(), witness.begin() + i + 1)));
    if (!isomorphic(chain.back(), terminalPattern(inst)))
        throw ReductionMismatch("witness does not project H onto the instance pattern");
    LiftReport total;
    total.input = inst;
    MulticutInstance cur = inst;
    for (std::size_t i = witness.size(); i-- > 0;) {
        LiftReport step = witness[i].kind == ProjectionStep::Kind::Delete ? liftDeleteVertex(cur, chain[i])
                                                                          : liftIdentify(cur, chain[i]);
        total.stepsApplied.push_back(step.stepsApplied.front());
        if (step.shortcutYes) {
            total.shortcutYes = true;
            return total;
        }
        cur = std::move(*step.output);
    }
    total.sizeRatio = {detail::instanceSize(cur), detail::instanceSize(inst)};
    total.output = std::move(cur);
    return total;
}

// Replaces every weight-w edge (w >= 2) by w unit two-edge paths. Zero-weight edges and loops
// never affect the optimum and are dropped.
inline MulticutInstance expandToUnweighted(const MulticutInstance& inst, std::uint64_t totalCap = 200000) {
    std::uint64_t total = 0;
    for (const auto& e : inst.graph.edges) {
        if (e.w.isInf()) throw InputError("expandToUnweighted rejects infinite weights; replace them by budget+1");
        total += e.w.value();
        if (total > totalCap) throw CapExceeded("total weight exceeds expansion cap");
    }
    MulticutInstance out;
    out.graph = WeightedGraph(inst.graph.vertexCount);
    out.pattern = inst.pattern;
    out.budget = inst.budget;
    const auto& g = inst.graph;
    std::vector<std::vector<int>> nearA(g.edgeCount()), nearB(g.edgeCount());
    std::vector<std::vector<int>> midRot;
    for (int e = 0; e < g.edgeCount(); ++e) {
        const auto& ed = g.edges[e];
        if (ed.a == ed.b || ed.w == Weight(0)) continue;
        if (ed.w == Weight(1)) {
            int id = out.graph.addEdge(ed.a, ed.b, 1);
            nearA[e] = {id};
            nearB[e] = {id};
            continue;
        }
        for (std::uint64_t k = 0; k < ed.w.value(); ++k) {
            int mid = out.graph.addVertex();
            int e1 = out.graph.addEdge(ed.a, mid, 1);
            int e2 = out.graph.addEdge(mid, ed.b, 1);
            nearA[e].push_back(e1);
            nearB[e].push_back(e2);
            midRot.push_back({e1, e2});
        }
    }
    if (inst.rotation) {
        std::vector<std::vector<int>> rot(out.graph.vertexCount);
        for (int v = 0; v < g.vertexCount; ++v)
            for (int e : (*inst.rotation)[v]) {
                const auto& ed = g.edges[e];
                if (ed.a == ed.b) continue;
                if (v == ed.a) rot[v].insert(rot[v].end(), nearA[e].begin(), nearA[e].end());
                else rot[v].insert(rot[v].end(), nearB[e].rbegin(), nearB[e].rend());
            }
        for (std::size_t i = 0; i < midRot.size(); ++i) rot[g.vertexCount + i] = midRot[i];
        out.rotation = std::move(rot);
    }
    return out;
}

inline Json liftReportToJson(const LiftReport& r) {
    Json j{{"input", instanceToJson(r.input)},
           {"stepsApplied", stepsToJson(r.stepsApplied)},
           {"sizeRatio", Json::array({r.sizeRatio.first, r.sizeRatio.second})}};
    j["output"] = r.output ? instanceToJson(*r.output) : Json(nullptr);
    if (r.shortcutYes) j["shortcut"] = {{"yesInstance", *r.shortcutYes}};
    return j;
}

}  // namespace mcwb

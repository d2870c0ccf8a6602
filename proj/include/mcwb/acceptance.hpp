#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcwb/corpus.hpp"
#include "mcwb/decomposition.hpp"
#include "mcwb/dual.hpp"
#include "mcwb/gadget.hpp"
#include "mcwb/lift.hpp"
#include "mcwb/oracles.hpp"
#include "mcwb/reductions.hpp"
#include "mcwb/topology.hpp"
#include "mcwb/trichotomy.hpp"

namespace mcwb {

struct AcceptanceOptions {
    std::uint64_t seed = 20240611;
    int randomPlaneInstances = 200;
    int liftPairs = 100;
    int jobs = 1;
    int reverseWidthCap = 14;  // reverse reduction check runs only at or below this width
};

struct CriterionResult {
    std::string id;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0;
    Json data = Json::object();

    std::string line() const { return std::string(passed ? "PASS" : "FAIL") + " " + id + " " + title + ": " + detail; }
    Json toJson() const {
        return {{"id", id}, {"title", title}, {"passed", passed}, {"detail", detail}, {"seconds", seconds},
                {"data", data}};
    }
};

// One corpus instance with its certified optimum.
struct CorpusCase {
    std::string label;
    MulticutInstance instance;
    MulticutSolution optimum;
};

namespace detail {

inline double secondsSince(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every simple graph on n vertices, one per isomorphism class.
inline std::vector<PatternGraph> graphsUpToIso(int n) {
    std::vector<std::pair<int, int>> slots;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) slots.emplace_back(a, b);
    std::set<std::string> seen;
    std::vector<PatternGraph> out;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
        PatternGraph h(n);
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (mask >> i & 1) h.addEdge(slots[i].first, slots[i].second);
        if (seen.insert(canonicalForm(h)).second) out.push_back(h);
    }
    return out;
}

// Grid-edge weight written case by case from the construction tables, independent of the builder.
inline Weight referenceGridWeight(const GridGadget& g, int i1, int j1, int i2, int j2) {
    const std::uint64_t W = g.w.value(), N = static_cast<std::uint64_t>(g.n);
    const int n = g.n;
    const auto in = [](int v, int lo, int hi) { return v >= lo && v <= hi; };
    if (j1 == j2) {
        const int i = std::min(i1, i2), j = j1;
        const bool breakable = in(i, g.alpha(1), g.alpha(g.delta));
        if (i == j - 1) return INF;
        if (j == 0 || j == n) return breakable ? Weight(W * W * W + W * W) : INF;
        return Weight(W * W);
    }
    const int i = i1, j = std::min(j1, j2);
    const std::uint64_t ui = static_cast<std::uint64_t>(i), uj = static_cast<std::uint64_t>(j);
    const bool breakable = in(j, g.beta(1, 1), g.beta(g.delta, g.delta));
    if (i == 0) return breakable ? Weight(W * W * W + W * W + uj * W) : INF;
    if (i == n) return breakable ? Weight(W * W * W + W * W + (N - uj) * W) : INF;
    if (i < j) return Weight(W * W + uj * W);
    if (i == j) return Weight(W * W * W + W * W - ui * ui * W - (N - ui) * (N - ui) * W);
    return Weight(W * W + (N - uj) * W);
}

}  // namespace detail

// The seeded random plane instances plus every connected graph on at most five vertices
// with every choice of one or two demands (unit weights).
inline std::vector<MulticutInstance> oracleCorpus(const AcceptanceOptions& opt,
                                                  std::vector<std::string>* labels = nullptr) {
    std::vector<MulticutInstance> out;
    std::mt19937_64 rng(opt.seed);
    for (int i = 0; i < opt.randomPlaneInstances; ++i) {
        PlaneInstanceSpec spec;
        spec.vertices = 2 + static_cast<int>(rng() % 11);
        spec.chords = static_cast<int>(rng() % (2 * spec.vertices));
        spec.terminals = 2 + static_cast<int>(rng() % 3);
        spec.maxWeight = 9;
        out.push_back(randomPlaneInstance(rng, spec));
        if (labels) labels->push_back("random-" + std::to_string(i));
    }
    for (int n = 2; n <= 5; ++n) {
        auto graphs = connectedGraphsUpToIso(n);
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            const auto& g = graphs[gi];
            auto rot = findPlaneRotation(g);
            std::vector<std::pair<int, int>> pairs;
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
            std::vector<std::vector<std::pair<int, int>>> sets;
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                sets.push_back({pairs[i]});
                for (std::size_t k = i + 1; k < pairs.size(); ++k) sets.push_back({pairs[i], pairs[k]});
            }
            for (std::size_t si = 0; si < sets.size(); ++si) {
                MulticutInstance inst;
                inst.graph = g;
                if (rot) inst.rotation = *rot;
                for (auto [a, b] : sets[si]) {
                    inst.pattern.demands.emplace_back(a, b);
                    inst.pattern.terminals.push_back(a);
                    inst.pattern.terminals.push_back(b);
                }
                inst.pattern.normalize();
                out.push_back(inst);
                if (labels)
                    labels->push_back("small-n" + std::to_string(n) + "-g" + std::to_string(gi) + "-d" +
                                      std::to_string(si));
            }
        }
    }
    return out;
}

// Criterion: partition oracle, treewidth DP and the planar solver agree on every corpus instance.
inline CriterionResult oracleEquivalence(const AcceptanceOptions& opt,
                                         std::vector<CorpusCase>* cases = nullptr) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{"C1", "oracle equivalence"};
    std::vector<std::string> labels;
    auto corpus = oracleCorpus(opt, &labels);
    SolverCaps caps;
    caps.allowBypass = false;
    caps.jobs = opt.jobs;
    int mismatches = 0, nonPlane = 0, uncertified = 0;
    Json bad = Json::array();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& inst = corpus[i];
        auto part = minMulticutByPartition(inst);
        auto dp = minMulticutByTreewidthDP(inst, greedyDecomposition(inst.graph), nullptr, DpMode::Optimize, 14, false);
        bool ok = part.weight == dp.weight;
        std::string planar = "skipped";
        if (inst.rotation) {
            auto sr = solveMulticutPlanar(inst, embeddingOf(inst), caps);
            planar = sr.weight.str();
            ok = ok && sr.weight == part.weight && isMulticut(inst, sr.cut);
            if (!sr.certifiedOptimal) ++uncertified;
        } else {
            ++nonPlane;
        }
        if (!ok) {
            ++mismatches;
            if (bad.size() < 10)
                bad.push_back({{"label", labels[i]}, {"partition", part.weight.str()}, {"dp", dp.weight.str()},
                               {"planar", planar}, {"instance", instanceToJson(inst)}});
        }
        if (cases && inst.rotation) cases->push_back({labels[i], inst, part});
    }
    r.seconds = detail::secondsSince(t0);
    r.passed = mismatches == 0 && r.seconds < 600;
    r.detail = std::to_string(corpus.size()) + " instances, " + std::to_string(mismatches) + " mismatches, " +
               std::to_string(nonPlane) + " non-plane (planar solver skipped), " + std::to_string(uncertified) +
               " uncertified";
    r.data = {{"instances", corpus.size()}, {"mismatches", mismatches}, {"nonPlane", nonPlane},
              {"uncertified", uncertified}, {"seed", opt.seed}, {"examples", bad}};
    return r;
}

// Criterion: the triangle-witness biconditional and classification replays on all graphs with at most six vertices.
inline CriterionResult trichotomySoundness(const AcceptanceOptions&) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{"C2", "trichotomy soundness"};
    int graphs = 0, failures = 0, verdicts = 0, inconclusive = 0;
    std::string first;
    auto fail = [&](const std::string& why) {
        if (first.empty()) first = why;
        ++failures;
    };
    for (int n = 1; n <= 6; ++n)
        for (const auto& h : detail::graphsUpToIso(n)) {
            ++graphs;
            auto w = triangleWitness(h);
            if (w.has_value() == isTrivialPattern(h)) fail("biconditional fails on " + patternToJson(h).dump());
            if (w && (!verifyWitness(*w) || !isomorphic(w->target, completeGraph(3))))
                fail("triangle witness does not replay on " + patternToJson(h).dump());
            for (int t = 1; t <= 3; ++t) {
                auto v = classifyPattern(h, t);
                ++verdicts;
                if (v.outcome == TrichotomyVerdict::Outcome::Inconclusive) ++inconclusive;
                if (v.witness) {
                    PatternGraph want = v.outcome == TrichotomyVerdict::Outcome::CliqueProjection
                                            ? completeGraph(t)
                                            : completeMultipartite({t, t, t});
                    if (!verifyWitness(*v.witness) || !isomorphic(v.witness->target, want))
                        fail("classification witness does not replay on " + patternToJson(h).dump());
                }
                if (v.distance && !isExtendedBicliquePartition(h, v.distance->partition))
                    fail("invalid extended biclique partition on " + patternToJson(h).dump());
            }
        }
    r.seconds = detail::secondsSince(t0);
    r.passed = failures == 0 && r.seconds < 300;
    r.detail = std::to_string(graphs) + " graphs, " + std::to_string(verdicts) + " verdicts, " +
               std::to_string(failures) + " failures, " + std::to_string(inconclusive) + " inconclusive" +
               (first.empty() ? "" : "; first: " + first);
    r.data = {{"graphs", graphs}, {"verdicts", verdicts}, {"failures", failures}, {"inconclusive", inconclusive}};
    return r;
}

// Criterion: lifting along a projection witness preserves decisions at opt-1, opt, opt+1.
inline CriterionResult liftPreservation(const AcceptanceOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{"C3", "lift preservation"};
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
    int pairs = 0, checks = 0, failures = 0, shortcuts = 0;
    Json bad = Json::array();
    while (pairs < opt.liftPairs) {
        auto h = randomPattern(rng, 2 + static_cast<int>(rng() % 4));
        auto w = randomWitness(rng, h, 3);
        auto hp = applyProjection(h, w);
        int n = std::min(8, std::max(hp.n, 2) + static_cast<int>(rng() % 4));
        if (hp.n > n) continue;
        auto inst = randomHostFor(rng, hp, n, static_cast<int>(rng() % 9), 5);
        ++pairs;
        Weight best = minMulticutByPartition(inst).weight;
        for (int d = -1; d <= 1; ++d) {
            if (best.value() == 0 && d < 0) continue;
            Weight lam(best.value() + d);
            inst.budget = lam;
            auto lr = liftProjection(inst, h, w);
            ++checks;
            bool original = best <= lam, lifted;
            if (lr.shortcutYes) {
                ++shortcuts;
                lifted = true;
            } else {
                const auto& out = *lr.output;
                Weight w = out.graph.vertexCount <= 12
                               ? minMulticutByPartition(out).weight
                               : minMulticutByTreewidthDP(out, greedyDecomposition(out.graph), nullptr,
                                                          DpMode::Optimize, 14, false)
                                     .weight;
                lifted = w <= lam;
            }
            if (lifted != original) {
                ++failures;
                if (bad.size() < 5) bad.push_back({{"instance", instanceToJson(inst)}, {"witness", stepsToJson(w)}});
            }
        }
    }
    r.seconds = detail::secondsSince(t0);
    r.passed = failures == 0 && r.seconds < 300;
    r.detail = std::to_string(pairs) + " pairs, " + std::to_string(checks) + " decisions, " +
               std::to_string(failures) + " disagreements, " + std::to_string(shortcuts) + " shortcut answers";
    r.data = {{"pairs", pairs}, {"checks", checks}, {"failures", failures}, {"shortcuts", shortcuts},
              {"examples", bad}};
    return r;
}

// Criterion: gadget weight tables, diagonal blocking and the three gadget properties at delta 1.
inline CriterionResult gadgetCertification(const AcceptanceOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{"C4", "gadget certification at delta 1"};
    auto g = buildGridGadget(1, {{1, 1}});
    std::vector<std::string> problems;
    if (g.n != 4) problems.push_back("N != 4");
    if (g.w != Weight(1600)) problems.push_back("W != 1600");
    if (g.graph.vertexCount != 25) problems.push_back("vertex count != 25");
    const std::uint64_t W = 1600;
    if (g.closedFormWstar() != Weight(7 * W * W * W + 10 * W * W + 4 * 5 + 10))
        problems.push_back("closed-form W* mismatch");
    int tableMismatches = 0;
    for (int e : g.gridEdges) {
        const auto& ed = g.graph.edges[e];
        auto [ia, ja] = g.coords(ed.a);
        auto [ib, jb] = g.coords(ed.b);
        if (detail::referenceGridWeight(g, ia, ja, ib, jb) != ed.w) ++tableMismatches;
    }
    for (int e : g.earEdges)
        if (g.graph.edges[e].w != Weight(W * W * W)) ++tableMismatches;
    if (g.gridEdges.size() != static_cast<std::size_t>(2 * g.n * (g.n + 1)) || g.earEdges.size() != 2)
        problems.push_back("unexpected edge counts");
    if (tableMismatches) problems.push_back(std::to_string(tableMismatches) + " weight-table mismatches");
    bool blocking = checkDiagonalBlocking(g);
    if (!blocking) problems.push_back("diagonal path does not block DL from UR");
    auto rep = verifyGadget(g, repoCell(), kGadgetWidthCap, opt.jobs);
    if (!rep.item1.passed) problems.push_back("item 1: " + rep.item1.detail);
    if (!rep.item2.passed) problems.push_back("item 2: " + rep.item2.detail);
    if (!rep.item3.passed) problems.push_back("item 3: " + rep.item3.detail);
    if (!rep.minGood.profile.fourCorner) problems.push_back("optimal good cut is not a 4-corner cut");
    r.seconds = detail::secondsSince(t0);
    r.passed = problems.empty() && r.seconds < 900;
    r.detail = "N=" + std::to_string(g.n) + " W=" + g.w.str() + " closedFormW*=" + g.closedFormWstar().str() +
               " encoderW*=" + rep.wstar.str() + " " + rep.item2.detail;
    for (const auto& p : problems) r.detail += "; " + p;
    r.data = rep.toJson();
    return r;
}

struct DualCheck {
    int checked = 0, invalid = 0, crossedMismatch = 0, faceWithoutTerminal = 0, tooManyFaces = 0;
    int notSubcubic = 0, tooManyVertices = 0, calibrationBreaches = 0, treewidthAboveCap = 0;
    Json breaches = Json::array();
};

inline DualCheck checkDuals(const std::vector<CorpusCase>& cases) {
    DualCheck d;
    for (const auto& c : cases) {
        const auto& inst = c.instance;
        auto emb = embeddingOf(inst);
        ++d.checked;
        auto md = dualFromMulticut(emb, inst.pattern, c.optimum.cut);
        if (!md.valid) {
            ++d.invalid;
            continue;
        }
        if (md.crossedG() != c.optimum.cut) ++d.crossedMismatch;
        MulticutDual mn;
        try {
            mn = minimizeDual(md, inst.pattern);
        } catch (const std::logic_error&) {
            ++d.faceWithoutTerminal;
            continue;
        }
        const int t = static_cast<int>(inst.pattern.terminals.size());
        if (mn.faceCount > t) ++d.tooManyFaces;
        auto dualGraph = dualAsGraph(mn);
        auto top = suppressDegreeTwo(dualGraph);
        std::vector<int> deg(top.vertexCount, 0);
        for (auto [a, b] : top.arcs) {
            ++deg[a];
            ++deg[b];
        }
        if (std::any_of(deg.begin(), deg.end(), [](int x) { return x > 3; })) ++d.notSubcubic;
        if (top.vertexCount > 2 * mn.faceCount) ++d.tooManyVertices;
        const int mu = extendedBicliqueDistance(terminalPattern(inst)).mu;
        auto tw = exactTreewidth(dualGraph, 2 * mu + 3);
        if (tw.aboveCap) {
            ++d.calibrationBreaches;
            if (d.breaches.size() < 10) d.breaches.push_back({{"label", c.label}, {"mu", mu}});
        }
    }
    return d;
}

// Criterion: multicut duals of every corpus optimum round-trip and minimize to at most t terminal faces.
inline CriterionResult dualRoundTrip(const std::vector<CorpusCase>& cases, const DualCheck& d) {
    CriterionResult r{"C5", "dual round trip"};
    r.passed = d.invalid == 0 && d.crossedMismatch == 0 && d.faceWithoutTerminal == 0 && d.tooManyFaces == 0 &&
               d.checked == static_cast<int>(cases.size());
    r.detail = std::to_string(d.checked) + " optima, " + std::to_string(d.invalid) + " invalid, " +
               std::to_string(d.crossedMismatch) + " crossed-set mismatches, " +
               std::to_string(d.faceWithoutTerminal) + " faces without terminal, " + std::to_string(d.tooManyFaces) +
               " with more than t faces";
    r.data = {{"checked", d.checked}, {"invalid", d.invalid}, {"crossedMismatch", d.crossedMismatch},
              {"faceWithoutTerminal", d.faceWithoutTerminal}, {"tooManyFaces", d.tooManyFaces}};
    return r;
}

// Criterion: group cut reduction on the one-variable, two-loop CSP at delta 1.
inline CriterionResult reductionSoundness(const AcceptanceOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{"C6", "group cut reduction soundness"};
    CspInstance csp;
    csp.variables = 1;
    csp.domain = 1;
    csp.constraints = {{0, 0, {{1, 1}}}, {0, 0, {{1, 1}}}};
    csp.rotation = {{0, 0, 1, 1}};
    auto q = buildCycleGraph(csp);
    auto red = buildGroup3TCInstance(csp);
    std::vector<std::string> problems;
    const int cycles = static_cast<int>(q.cycles.size());
    std::size_t terminals = 0;
    for (const auto& grp : red.groups) terminals += grp.size();
    if (cycles != 7) problems.push_back("cycle count " + std::to_string(cycles));
    if (terminals > 12) problems.push_back("terminal total " + std::to_string(terminals));
    if (!q.properColouring() || !q.everyCycleSeesThreeColours()) problems.push_back("colouring invalid");
    if (red.lambda != red.wstar * 7) problems.push_back("lambda is not 7 W*");
    auto reps = cspRepresentations(red, {1}, 1);
    auto un = representingUnion(red, reps);
    if (!un.separatesGroups) problems.push_back("representing union is not a group cut");
    if (!un.weightIsLambda) problems.push_back("representing union weight " + un.weight.str());

    // Reverse direction: exact optimum of the group cut by the treewidth DP, groups as separation classes.
    auto td = greedyDecomposition(red.instance.graph);
    std::string reverse;
    Json rev{{"width", td.width()}, {"cap", opt.reverseWidthCap}};
    if (td.width() <= opt.reverseWidthCap) {
        MulticutInstance bare;
        bare.graph = red.instance.graph;
        GroupConstraint gc;
        gc.groups = red.groups;
        gc.forbiddenMerges = {{0, 1}, {0, 2}, {1, 2}};
        auto sol = minMulticutByTreewidthDP(bare, td, &gc, DpMode::Optimize, opt.reverseWidthCap, false);
        rev["optimum"] = weightToJson(sol.weight);
        if (sol.weight != red.lambda) problems.push_back("optimum " + sol.weight.str() + " differs from lambda");
        reverse = "reverse optimum " + sol.weight.str() + " at width " + std::to_string(td.width());
    } else {
        rev["skipped"] = true;
        reverse = "reverse direction skipped: width " + std::to_string(td.width()) + " above cap " +
                  std::to_string(opt.reverseWidthCap);
    }
    r.seconds = detail::secondsSince(t0);
    r.passed = problems.empty() && r.seconds < 900;
    r.detail = "cycles=" + std::to_string(cycles) + " terminals=" + std::to_string(terminals) + " lambda=" +
               red.lambda.str() + " union=" + un.weight.str() + "; " + reverse;
    for (const auto& p : problems) r.detail += "; " + p;
    r.data = {{"cycles", cycles}, {"terminals", terminals}, {"lambda", weightToJson(red.lambda)},
              {"union", un.toJson()}, {"reverse", rev}};
    return r;
}

// Criterion: calibration monitors. Breaches of the treewidth bound are reported only.
inline CriterionResult calibration(const DualCheck& d) {
    CriterionResult r{"C7", "calibration monitors"};
    r.passed = d.faceWithoutTerminal == 0 && d.notSubcubic == 0 && d.tooManyVertices == 0;
    r.detail = std::to_string(d.checked) + " duals, " + std::to_string(d.calibrationBreaches) +
               " treewidth calibration breaches (reported only), " + std::to_string(d.notSubcubic) +
               " not subcubic, " + std::to_string(d.tooManyVertices) + " above 2 x faces, " +
               std::to_string(d.faceWithoutTerminal) + " faces without terminal";
    r.data = {{"checked", d.checked}, {"calibrationBreaches", d.calibrationBreaches}, {"breaches", d.breaches},
              {"notSubcubic", d.notSubcubic}, {"tooManyVertices", d.tooManyVertices}};
    return r;
}

inline std::vector<std::string> acceptanceSuites() {
    return {"all", "oracle-equiv", "trichotomy", "lift", "gadget-d1", "dual", "csp3t", "calibration"};
}

// Runs the named suite; each criterion result is passed to `report` as soon as it is known.
inline std::vector<CriterionResult> runAcceptance(const std::string& suite, const AcceptanceOptions& opt,
                                                  const std::function<void(const CriterionResult&)>& report = {}) {
    std::vector<CriterionResult> out;
    auto emit = [&](CriterionResult r) {
        if (report) report(r);
        out.push_back(std::move(r));
    };
    const bool all = suite == "all";
    const bool needCorpus = all || suite == "oracle-equiv" || suite == "dual" || suite == "calibration";
    std::vector<CorpusCase> cases;
    if (needCorpus) {
        auto c1 = oracleEquivalence(opt, &cases);
        if (all || suite == "oracle-equiv") emit(c1);
    }
    if (all || suite == "trichotomy") emit(trichotomySoundness(opt));
    if (all || suite == "lift") emit(liftPreservation(opt));
    if (all || suite == "gadget-d1") emit(gadgetCertification(opt));
    DualCheck duals;
    double dualSeconds = 0;
    if (all || suite == "dual" || suite == "calibration") {
        auto t0 = std::chrono::steady_clock::now();
        duals = checkDuals(cases);
        dualSeconds = detail::secondsSince(t0);
    }
    if (all || suite == "dual") {
        auto r = dualRoundTrip(cases, duals);
        r.seconds = dualSeconds;
        emit(r);
    }
    if (all || suite == "csp3t") emit(reductionSoundness(opt));
    if (all || suite == "calibration") {
        auto r = calibration(duals);
        r.seconds = dualSeconds;
        emit(r);
    }
    return out;
}

}  // namespace mcwb

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcwb/acceptance.hpp"
#include "mcwb/decomposition.hpp"
#include "mcwb/dual.hpp"
#include "mcwb/gadget.hpp"
#include "mcwb/io.hpp"
#include "mcwb/lift.hpp"
#include "mcwb/oracles.hpp"
#include "mcwb/reductions.hpp"
#include "mcwb/topology.hpp"
#include "mcwb/trichotomy.hpp"

namespace {

using namespace mcwb;

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kNo = 1, kUsage = 2, kInvalid = 3, kCap = 4, kInternal = 70 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct CliCaps {
    SolverCaps solver;
    int partitionCap = 12;
    int widthCap = 14;
    int gadgetWidthCap = kGadgetWidthCap;

    Json toJson() const {
        Json j = solver.toJson();
        j["partitionCap"] = partitionCap;
        j["widthCap"] = widthCap;
        j["gadgetWidthCap"] = gadgetWidthCap;
        return j;
    }
};

// Per-run state feeding the manifest.
struct Run {
    std::string command;
    Json inputHashes = Json::object();
    std::vector<std::uint64_t> seeds;
    std::string digest;
    CliCaps caps;
    Json timings = Json::object();

    Json readInput(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string bytes = ss.str();
        inputHashes[path] = fnv1a(bytes);
        try {
            return Json::parse(bytes);
        } catch (const Json::exception& ex) {
            throw InputError("invalid JSON in " + path + ": " + ex.what());
        }
    }

    void emit(const Json& j, const std::string& outPath = "") {
        const std::string bytes = j.dump(2) + "\n";
        digest = fnv1a(bytes);
        if (outPath.empty()) {
            std::cout << bytes;
            return;
        }
        std::ofstream out(outPath, std::ios::binary);
        if (!out) throw InputError("cannot write " + outPath);
        out << bytes;
    }
};

CliCaps loadCaps(Run& run, const std::string& capsPath, int jobs) {
    CliCaps c;
    std::string path = capsPath;
    if (path.empty())
        if (const char* env = std::getenv("MCWB_CAPS")) path = env;
    if (!path.empty()) {
        Json j = run.readInput(path);
        if (!j.is_object()) throw InputError("caps file must be a JSON object");
        c.solver = SolverCaps::fromJson(j);
        c.partitionCap = j.value("partitionCap", c.partitionCap);
        c.widthCap = j.value("widthCap", c.widthCap);
        c.gadgetWidthCap = j.value("gadgetWidthCap", c.gadgetWidthCap);
        if (c.partitionCap < 1 || c.widthCap < 0 || c.gadgetWidthCap < 0) throw InputError("caps must be positive");
    }
    if (jobs > 0) c.solver.jobs = jobs;
    return c;
}

std::vector<Pair> parseSet(const std::string& text) {
    std::vector<Pair> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        int x = 0, y = 0;
        char comma = 0, extra = 0;
        std::istringstream is(item);
        if (!(is >> x >> comma >> y) || comma != ',' || (is >> extra))
            throw InputError("set entries must look like \"x,y\"; got \"" + item + "\"");
        out.emplace_back(x, y);
    }
    return out;
}

EdgeSet cutFromJson(const Json& j) {
    try {
        const Json& arr = j.is_object() ? j.at("cut") : j;
        return canonicalizeSolution(arr.get<EdgeSet>());
    } catch (const Json::exception& ex) {
        throw InputError(std::string("cut must be an array of edge ids or an object with \"cut\": ") + ex.what());
    }
}

struct SolveOptions {
    std::string method = "dual";
    std::string tdPath;
};

SolveResult solveWith(Run& run, const MulticutInstance& inst, const SolveOptions& so) {
    SolveResult r;
    if (so.method == "oracle") {
        auto s = minMulticutByPartition(inst, run.caps.partitionCap);
        r.weight = s.weight;
        r.cut = s.cut;
        r.strategy = "partition-oracle";
        return r;
    }
    if (so.method == "twdp") {
        TreeDecomposition td;
        if (so.tdPath.empty()) {
            td = greedyDecomposition(inst.graph);
        } else {
            td = decompositionFromJson(run.readInput(so.tdPath));
            validateDecomposition(inst.graph, td);
        }
        auto s = minMulticutByTreewidthDP(inst, td, nullptr, DpMode::Optimize, run.caps.widthCap);
        r.weight = s.weight;
        r.cut = s.cut;
        r.strategy = "treewidth-dp";
        return r;
    }
    if (so.method == "dual") {
        if (!inst.rotation) throw InputError("method dual needs a \"rotation\" in the instance");
        return solveMulticutPlanar(inst, embeddingOf(inst), run.caps.solver);
    }
    throw UsageError("unknown method " + so.method);
}

// Timing moves to the manifest so the primary output stays deterministic.
Json solveJson(Run& run, const SolveResult& r, const std::string& method) {
    Json j = r.toJson();
    j["method"] = method;
    if (j["statistics"].contains("seconds")) {
        run.timings["solverSeconds"] = j["statistics"]["seconds"];
        j["statistics"].erase("seconds");
    }
    return j;
}

Weight parseBudget(const std::string& s) {
    if (s == "inf") return INF;
    try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(s, &used);
        if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
        return Weight(v);
    } catch (const std::logic_error&) {
        throw InputError("budget must be a non-negative integer or \"inf\"");
    }
}

Json dualReport(const MulticutInstance& inst, const EdgeSet& cut) {
    if (!inst.rotation) throw InputError("dual verification needs a \"rotation\" in the instance");
    auto emb = embeddingOf(inst);
    Json j{{"isMulticut", isMulticut(inst, cut)}, {"cutWeight", weightToJson(cutWeight(inst.graph, cut))}};
    if (!j["isMulticut"].get<bool>()) {
        j["passed"] = false;
        return j;
    }
    auto md = dualFromMulticut(emb, inst.pattern, cut);
    j["valid"] = md.valid;
    j["faceCount"] = md.faceCount;
    j["crossedMatches"] = md.crossedG() == cut;
    if (!md.message.empty()) j["message"] = md.message;
    bool ok = md.valid && md.crossedG() == cut;
    if (md.valid) {
        try {
            auto mn = minimizeDual(md, inst.pattern);
            const int t = static_cast<int>(inst.pattern.terminals.size());
            j["minimizedFaceCount"] = mn.faceCount;
            j["everyFaceHasTerminal"] = true;
            j["facesWithinTerminals"] = mn.faceCount <= t;
            auto top = suppressDegreeTwo(dualAsGraph(mn));
            j["topologyVertices"] = top.vertexCount;
            j["topologyArcs"] = top.arcs.size();
            ok = ok && mn.faceCount <= t;
        } catch (const std::logic_error& ex) {
            j["everyFaceHasTerminal"] = false;
            j["message"] = ex.what();
            ok = false;
        }
    }
    j["passed"] = ok;
    return j;
}

int runCli(int argc, char** argv, Run& run) {
    CLI::App app{"Planar multicut toolkit: exact solvers, pattern classification, reductions and gadgets"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    int jobs = 1;
    std::string capsPath, manifestPath;
    app.add_option("--jobs", jobs, "Module-level parallelism")->check(CLI::PositiveNumber);
    app.add_option("--caps", capsPath, "Caps file (default: $MCWB_CAPS)");
    app.add_option("--manifest", manifestPath, "Write the run manifest here instead of stderr");

    int status = kOk;
    SolveOptions so;
    std::string input, output;

    auto* solve = app.add_subcommand("solve", "Minimum multicut of an instance");
    solve->add_option("--method", so.method, "oracle | twdp | dual")
        ->check(CLI::IsMember({"oracle", "twdp", "dual"}));
    solve->add_option("--td", so.tdPath, "Tree decomposition JSON for twdp");
    solve->add_option("input", input, "Instance JSON")->required();
    solve->callback([&] {
        auto inst = instanceFromJson(run.readInput(input));
        run.emit(solveJson(run, solveWith(run, inst, so), so.method));
    });

    std::string budgetText;
    auto* decide = app.add_subcommand("decide", "Is there a multicut within the budget? Exit 0 yes, 1 no");
    decide->add_option("--method", so.method, "oracle | twdp | dual")
        ->check(CLI::IsMember({"oracle", "twdp", "dual"}));
    decide->add_option("--td", so.tdPath, "Tree decomposition JSON for twdp");
    decide->add_option("--budget", budgetText, "Budget; defaults to the instance budget");
    decide->add_option("input", input, "Instance JSON")->required();
    decide->callback([&] {
        auto inst = instanceFromJson(run.readInput(input));
        std::optional<Weight> budget = inst.budget;
        if (!budgetText.empty()) budget = parseBudget(budgetText);
        if (!budget) throw InputError("no budget given and the instance has none");
        auto r = solveWith(run, inst, so);
        const bool yes = r.weight <= *budget;
        run.emit({{"yes", yes}, {"weight", weightToJson(r.weight)}, {"budget", weightToJson(*budget)},
                  {"method", so.method}, {"certifiedOptimal", r.certifiedOptimal}});
        status = yes ? kOk : kNo;
    });

    int t = 0;
    long searchBudget = 20'000'000;
    auto* classify = app.add_subcommand("classify-pattern", "Clique / tripartite / bounded-distance verdict");
    classify->add_option("--t", t, "Target size t")->required()->check(CLI::PositiveNumber);
    classify->add_option("--search-budget", searchBudget, "Projection search node budget")
        ->check(CLI::PositiveNumber);
    classify->add_option("input", input, "Pattern JSON")->required();
    classify->callback([&] {
        auto h = patternFromJson(run.readInput(input));
        run.emit(verdictToJson(classifyPattern(h, t, searchBudget)));
    });

    auto* reduce = app.add_subcommand("reduce", "Instance transformations");
    reduce->require_subcommand(1);
    std::string patternPath, witnessPath, mode = "4";
    std::uint64_t expandCap = 200000;
    auto* lift = reduce->add_subcommand("lift", "Lift an instance along a projection witness");
    lift->add_option("--pattern", patternPath, "Host pattern JSON")->required();
    lift->add_option("--witness", witnessPath, "Witness steps JSON")->required();
    lift->add_option("input", input, "Instance JSON")->required();
    lift->add_option("output", output, "Output file (default stdout)");
    lift->callback([&] {
        auto h = patternFromJson(run.readInput(patternPath));
        auto steps = stepsFromJson(run.readInput(witnessPath));
        auto inst = instanceFromJson(run.readInput(input));
        run.emit(liftReportToJson(liftProjection(inst, h, steps)), output);
    });
    auto* tiling = reduce->add_subcommand("tiling", "Tiling instance to multiway cut");
    tiling->add_option("--mode", mode, "4 or 3 terminals")->check(CLI::IsMember({"3", "4"}));
    tiling->add_option("input", input, "Tiling JSON")->required();
    tiling->add_option("output", output, "Output file (default stdout)");
    tiling->callback([&] {
        auto tl = TilingInstance::fromJson(run.readInput(input));
        auto m = mode == "3" ? TilingMode::ThreeTerminal : TilingMode::FourTerminal;
        run.emit(reductionToJson(buildTilingInstance(tl, m, repoCell(), run.caps.gadgetWidthCap)), output);
    });
    auto* csp3t = reduce->add_subcommand("csp3t", "Binary CSP to group 3-terminal cut");
    csp3t->add_option("input", input, "CSP JSON")->required();
    csp3t->add_option("output", output, "Output file (default stdout)");
    csp3t->callback([&] {
        auto csp = CspInstance::fromJson(run.readInput(input));
        run.emit(reductionToJson(buildGroup3TCInstance(csp, repoCell(), run.caps.gadgetWidthCap)), output);
    });
    auto* unweighted = reduce->add_subcommand("unweighted", "Replace weights by parallel length-2 paths");
    unweighted->add_option("--cap", expandCap, "Total weight cap")->check(CLI::PositiveNumber);
    unweighted->add_option("input", input, "Instance JSON")->required();
    unweighted->add_option("output", output, "Output file (default stdout)");
    unweighted->callback([&] {
        auto inst = instanceFromJson(run.readInput(input));
        run.emit(instanceToJson(expandToUnweighted(inst, expandCap)), output);
    });

    int delta = 1;
    std::string setText, encoderName = "repoCell";
    auto* makeGadget = app.add_subcommand("make-gadget", "Build a grid gadget");
    makeGadget->add_option("--delta", delta, "Grid parameter")->required();
    makeGadget->add_option("--set", setText, "Allowed pairs \"x,y;x,y\" (default all)");
    makeGadget->add_option("--encoder", encoderName, "Inner-cell encoder");
    makeGadget->add_option("output", output, "Output file (default stdout)");
    makeGadget->callback([&] {
        auto allowed = setText.empty() ? fullRelation(std::max(delta, 1)) : parseSet(setText);
        run.emit(gadgetToJson(buildGridGadget(delta, allowed, encoderByName(encoderName))), output);
    });

    auto* verify = app.add_subcommand("verify", "Check gadgets, duals and witnesses; exit 0 pass, 1 fail");
    verify->require_subcommand(1);
    auto* vGadget = verify->add_subcommand("gadget", "Check the three good-cut properties");
    vGadget->add_option("input", input, "Gadget JSON")->required();
    vGadget->callback([&] {
        auto g = gadgetFromJson(run.readInput(input));
        auto rep = verifyGadget(g, encoderByName(g.encoder), run.caps.gadgetWidthCap, run.caps.solver.jobs);
        run.emit(rep.toJson());
        status = rep.passed ? kOk : kNo;
    });
    std::string cutPath, parcelsPath;
    auto* vDual = verify->add_subcommand("dual", "Build, check and minimize the dual of a multicut");
    vDual->add_option("--cut", cutPath, "Cut JSON (edge ids, or solver output)")->required();
    vDual->add_option("--dump-parcels", parcelsPath, "Write the parcel adjacency here");
    vDual->add_option("input", input, "Instance JSON with rotation")->required();
    vDual->callback([&] {
        auto inst = instanceFromJson(run.readInput(input));
        auto cut = cutFromJson(run.readInput(cutPath));
        auto rep = dualReport(inst, cut);
        if (!parcelsPath.empty()) writeJsonFile(parcelsPath, parcelsToJson(buildSetup(embeddingOf(inst),
                                                                                      inst.pattern.terminals)));
        run.emit(rep);
        status = rep["passed"].get<bool>() ? kOk : kNo;
    });
    std::string sourcePath, targetPath;
    auto* vWitness = verify->add_subcommand("witness", "Replay projection steps");
    vWitness->add_option("--source", sourcePath, "Source pattern JSON")->required();
    vWitness->add_option("--target", targetPath, "Expected projection JSON");
    vWitness->add_option("input", input, "Witness steps JSON")->required();
    vWitness->callback([&] {
        auto src = patternFromJson(run.readInput(sourcePath));
        auto steps = stepsFromJson(run.readInput(input));
        Json j{{"steps", steps.size()}};
        bool ok = true;
        try {
            auto img = applyProjection(src, steps);
            j["projection"] = patternToJson(img);
            j["canonicalForm"] = canonicalForm(img);
            if (!targetPath.empty()) {
                ok = isomorphic(img, patternFromJson(run.readInput(targetPath)));
                j["matchesTarget"] = ok;
            }
        } catch (const ProjectionError& ex) {
            ok = false;
            j["error"] = ex.what();
        }
        j["passed"] = ok;
        run.emit(j);
        status = ok ? kOk : kNo;
    });

    int count = 20, vertices = 10, terminals = 3, maxWeight = 9;
    std::uint64_t seed = 1;
    std::string methods = "oracle,twdp,dual";
    auto* bench = app.add_subcommand("bench", "Time the solvers on seeded random plane instances");
    bench->add_option("--count", count, "Instances")->check(CLI::PositiveNumber);
    bench->add_option("--seed", seed, "Generator seed");
    bench->add_option("--vertices", vertices, "Vertices per instance")->check(CLI::Range(2, 64));
    bench->add_option("--terminals", terminals, "Terminals per instance")->check(CLI::Range(2, 8));
    bench->add_option("--max-weight", maxWeight, "Largest edge weight")->check(CLI::PositiveNumber);
    bench->add_option("--methods", methods, "Comma-separated subset of oracle,twdp,dual");
    bench->callback([&] {
        run.seeds.push_back(seed);
        std::vector<std::string> ms;
        std::stringstream ss(methods);
        for (std::string m; std::getline(ss, m, ',');) ms.push_back(m);
        std::mt19937_64 rng(seed);
        std::map<std::string, double> seconds;
        int disagreements = 0;
        Json weights = Json::array();
        for (int i = 0; i < count; ++i) {
            PlaneInstanceSpec spec;
            spec.vertices = vertices;
            spec.chords = vertices;
            spec.terminals = terminals;
            spec.maxWeight = maxWeight;
            auto inst = randomPlaneInstance(rng, spec);
            std::optional<Weight> first;
            Json row = Json::object();
            for (const auto& m : ms) {
                SolveOptions o;
                o.method = m;
                auto t0 = std::chrono::steady_clock::now();
                auto r = solveWith(run, inst, o);
                seconds[m] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                row[m] = weightToJson(r.weight);
                if (first && *first != r.weight) ++disagreements;
                if (!first) first = r.weight;
            }
            weights.push_back(row);
        }
        Json timing = Json::object();
        for (const auto& m : ms) timing[m] = {{"totalSeconds", seconds[m]}, {"meanSeconds", seconds[m] / count}};
        run.emit({{"count", count}, {"seed", seed}, {"vertices", vertices}, {"terminals", terminals},
                  {"timing", timing}, {"weights", weights}, {"disagreements", disagreements}});
        status = disagreements == 0 ? kOk : kNo;
    });

    std::string suite;
    AcceptanceOptions acc;
    auto* corpus = app.add_subcommand("corpus", "Run an acceptance suite; exit 0 all pass, 1 otherwise");
    corpus->add_option("suite", suite, "all, oracle-equiv, trichotomy, lift, gadget-d1, dual, csp3t, calibration")
        ->required();
    corpus->add_option("--seed", acc.seed, "Corpus seed");
    corpus->callback([&] {
        auto suites = acceptanceSuites();
        if (std::find(suites.begin(), suites.end(), suite) == suites.end())
            throw UsageError("unknown suite " + suite);
        acc.jobs = run.caps.solver.jobs;
        run.seeds.push_back(acc.seed);
        bool ok = true;
        Json criteria = Json::array();
        auto log = [](const CriterionResult& r) { std::cerr << r.line() << '\n'; };
        for (const auto& r : runAcceptance(suite, acc, log)) {
            ok = ok && r.passed;
            Json c = r.toJson();
            run.timings[r.id] = r.seconds;
            c.erase("seconds");
            criteria.push_back(c);
        }
        run.emit({{"suite", suite}, {"seed", acc.seed}, {"passed", ok}, {"criteria", criteria}});
        status = ok ? kOk : kNo;
    });

    // Runs before any subcommand callback.
    app.parse_complete_callback([&] {
        for (auto* sub = app.get_subcommands().front(); sub;
             sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front())
            run.command += (run.command.empty() ? "" : " ") + sub->get_name();
        run.caps = loadCaps(run, capsPath, jobs);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    Run run;
    std::string manifestPath;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--manifest") manifestPath = argv[i + 1];
    const auto t0 = std::chrono::steady_clock::now();
    int code = kOk;
    try {
        code = runCli(argc, argv, run);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        code = kUsage;
    } catch (const CapExceeded& e) {
        std::cerr << "cap exceeded: " << e.what() << '\n';
        code = kCap;
    } catch (const InputError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        code = kInvalid;
    } catch (const Json::exception& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        code = kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        code = kInternal;
    }
    if (code == kUsage || run.command.empty()) return code;
    Json manifest{{"command", run.command},
                  {"arguments", Json::array()},
                  {"inputHashes", run.inputHashes},
                  {"version", kVersion},
                  {"caps", run.caps.toJson()},
                  {"wallClockSeconds",
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"timings", run.timings},
                  {"resultDigest", run.digest.empty() ? Json(nullptr) : Json(run.digest)},
                  {"seeds", run.seeds},
                  {"exitCode", code}};
    for (int i = 1; i < argc; ++i) manifest["arguments"].push_back(argv[i]);
    if (manifestPath.empty()) {
        std::cerr << manifest.dump() << '\n';
    } else {
        std::ofstream out(manifestPath);
        out << manifest.dump(2) << '\n';
    }
    return code;
}

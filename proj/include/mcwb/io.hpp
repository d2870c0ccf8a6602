#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mcwb/graph.hpp"

namespace mcwb {

using Json = nlohmann::ordered_json;

inline Json weightToJson(Weight w) {
    if (w.isInf()) return "inf";
    return w.value();
}

inline Weight weightFromJson(const Json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return INF;
        throw InputError("weight string must be \"inf\"");
    }
    if (j.is_number_unsigned()) return Weight(j.get<std::uint64_t>());
    if (j.is_number_integer()) {
        auto v = j.get<std::int64_t>();
        if (v < 0) throw InputError("negative weight");
        return Weight(static_cast<std::uint64_t>(v));
    }
    throw InputError("weight must be a non-negative integer or \"inf\"");
}

inline Json instanceToJson(const MulticutInstance& inst) {
    Json j;
    j["n"] = inst.graph.vertexCount;
    Json edges = Json::array();
    for (const auto& e : inst.graph.edges) edges.push_back(Json::array({e.a, e.b, weightToJson(e.w)}));
    j["edges"] = edges;
    j["terminals"] = inst.pattern.terminals;
    Json dem = Json::array();
    for (auto [a, b] : inst.pattern.demands) dem.push_back(Json::array({a, b}));
    j["demands"] = dem;
    if (inst.budget) j["budget"] = weightToJson(*inst.budget);
    if (inst.rotation) j["rotation"] = *inst.rotation;
    return j;
}

inline MulticutInstance instanceFromJson(const Json& j) {
    if (!j.is_object()) throw InputError("instance must be a JSON object");
    MulticutInstance inst;
    try {
        int n = j.at("n").get<int>();
        inst.graph = WeightedGraph(n);
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() < 2 || e.size() > 3) throw InputError("edge must be [u, v, w]");
            Weight w = e.size() == 3 ? weightFromJson(e[2]) : Weight(1);
            inst.graph.addEdge(e[0].get<int>(), e[1].get<int>(), w);
        }
        if (j.contains("terminals")) inst.pattern.terminals = j["terminals"].get<std::vector<int>>();
        if (j.contains("demands"))
            for (const auto& d : j["demands"]) {
                if (!d.is_array() || d.size() != 2) throw InputError("demand must be a pair");
                inst.pattern.demands.emplace_back(d[0].get<int>(), d[1].get<int>());
            }
        if (j.contains("budget") && !j["budget"].is_null()) inst.budget = weightFromJson(j["budget"]);
        if (j.contains("rotation") && !j["rotation"].is_null())
            inst.rotation = j["rotation"].get<std::vector<std::vector<int>>>();
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(std::string("malformed instance: ") + ex.what());
    }
    inst.pattern.normalize();
    inst.validate();
    return inst;
}

inline Json readJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw InputError("invalid JSON in " + path + ": " + ex.what());
    }
}

inline void writeJsonFile(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline MulticutInstance loadInstance(const std::string& path) { return instanceFromJson(readJsonFile(path)); }

}  // namespace mcwb

#include <gtest/gtest.h>

#include "mcwb/graph.hpp"
#include "mcwb/io.hpp"

using namespace mcwb;

namespace {

WeightedGraph unitTriangle() {
    WeightedGraph g(3);
    g.addEdge(0, 1, 1);
    g.addEdge(1, 2, 1);
    g.addEdge(0, 2, 1);
    return g;
}

}  // namespace

TEST(Weight, SaturatesAtInf) {
    EXPECT_EQ(INF + Weight(5), INF);
    EXPECT_EQ(Weight(5) + INF, INF);
    EXPECT_TRUE(Weight(7) < INF);
    Weight big(std::uint64_t{1} << 40);
    EXPECT_EQ((big + big).value(), std::uint64_t{1} << 41);
    EXPECT_EQ((Weight(3) * 4).value(), 12u);
    EXPECT_EQ(INF * 2, INF);
    EXPECT_THROW(static_cast<void>(Weight(UINT64_MAX - 1) + Weight(5)), std::overflow_error);
}

TEST(ComponentsOf, Examples) {
    auto g = unitTriangle();
    EXPECT_EQ(componentsOf(g, {}).blocks.size(), 1u);
    EXPECT_EQ(componentsOf(g, {0, 1, 2}).blocks.size(), 3u);
    WeightedGraph path(3);
    path.addEdge(0, 1, 1);
    path.addEdge(1, 2, 1);
    auto p = componentsOf(path, {0});
    ASSERT_EQ(p.blocks.size(), 2u);
    EXPECT_EQ(p.blocks[0], std::vector<int>({0}));
    EXPECT_EQ(p.blocks[1], std::vector<int>({1, 2}));
    EXPECT_THROW(componentsOf(g, {3}), InputError);
}

TEST(IsMulticut, Examples) {
    MulticutInstance path;
    path.graph = WeightedGraph(3);
    path.graph.addEdge(0, 1, 1);
    path.graph.addEdge(1, 2, 1);
    path.pattern.terminals = {0, 2};
    path.pattern.demands = {{0, 2}};
    EXPECT_TRUE(isMulticut(path, {0}));
    EXPECT_FALSE(isMulticut(path, {}));

    MulticutInstance tri;
    tri.graph = unitTriangle();
    tri.pattern.terminals = {0, 1};
    tri.pattern.demands = {{0, 1}};
    EXPECT_FALSE(isMulticut(tri, {0}));
    EXPECT_TRUE(isMulticut(tri, allEdges(tri.graph)));
}

TEST(IsMulticut, Monotone) {
    MulticutInstance tri;
    tri.graph = unitTriangle();
    tri.pattern.terminals = {0, 1};
    tri.pattern.demands = {{0, 1}};
    for (int s = 0; s < 8; ++s)
        for (int t = 0; t < 8; ++t) {
            if ((s & t) != s) continue;
            EdgeSet a, b;
            for (int e = 0; e < 3; ++e) {
                if (s >> e & 1) a.push_back(e);
                if (t >> e & 1) b.push_back(e);
            }
            if (isMulticut(tri, a)) EXPECT_TRUE(isMulticut(tri, b));
        }
}

TEST(Canonicalize, Examples) {
    EXPECT_EQ(canonicalizeSolution({5, 2, 9}), EdgeSet({2, 5, 9}));
    EXPECT_EQ(canonicalizeSolution({}), EdgeSet{});
    EXPECT_EQ(canonicalizeSolution({7}), EdgeSet({7}));
}

TEST(InstanceJson, RoundTrip) {
    auto j = Json::parse(R"({"n":3,"edges":[[0,1,4],[1,2,"inf"]],"terminals":[2,0],"demands":[[2,0]],"budget":9})");
    auto inst = instanceFromJson(j);
    EXPECT_EQ(inst.graph.edges[1].w, INF);
    EXPECT_EQ(inst.pattern.terminals, std::vector<int>({0, 2}));
    EXPECT_EQ(inst.pattern.demands[0], std::make_pair(0, 2));
    auto back = instanceFromJson(instanceToJson(inst));
    EXPECT_EQ(instanceToJson(back).dump(), instanceToJson(inst).dump());
    EXPECT_THROW(instanceFromJson(Json::parse(R"({"n":2,"edges":[[0,5,1]]})")), InputError);
    EXPECT_THROW(instanceFromJson(Json::parse(R"({"n":2,"edges":[[0,1,-1]]})")), InputError);
    EXPECT_THROW(instanceFromJson(Json::parse(R"({"n":2,"edges":[],"terminals":[0],"demands":[[0,1]]})")),
                 InputError);
}

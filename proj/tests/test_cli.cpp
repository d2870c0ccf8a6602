#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "mcwb/io.hpp"

using mcwb::Json;

namespace {

std::string dir() { return testing::TempDir(); }

std::string path(const std::string& name) { return dir() + "/mcwb_cli_" + name; }

void write(const std::string& name, const std::string& text) { std::ofstream(path(name)) << text; }

std::string slurp(const std::string& file) {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the CLI with stdout captured to `out`; returns the exit status.
int run(const std::string& args, const std::string& out = "stdout") {
    std::string cmd = std::string(MCWB_CLI) + " " + args + " > " + path(out) + " 2> " + path("stderr");
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kTriangle =
    R"({"n":3,"edges":[[0,1,2],[1,2,3],[0,2,4]],"terminals":[0,1,2],"demands":[[0,1],[1,2],[0,2]],)"
    R"("budget":9,"rotation":[[0,2],[1,0],[2,1]]})";

class Cli : public testing::Test {
protected:
    void SetUp() override {
        unsetenv("MCWB_CAPS");
        write("tri.json", kTriangle);
    }
};

}  // namespace

TEST_F(Cli, SolveMethodsAgree) {
    for (const char* m : {"oracle", "twdp", "dual"}) {
        ASSERT_EQ(run(std::string("solve --method ") + m + " " + path("tri.json")), 0) << m;
        Json j = Json::parse(slurp(path("stdout")));
        EXPECT_EQ(j["weight"], 9) << m;
        EXPECT_EQ(j["cut"], Json::array({0, 1, 2})) << m;
        EXPECT_FALSE(j["statistics"].contains("seconds"));
    }
}

TEST_F(Cli, DecideExitCodes) {
    EXPECT_EQ(run("decide " + path("tri.json")), 0);
    EXPECT_EQ(run("decide --budget 8 " + path("tri.json")), 1);
    EXPECT_EQ(run("decide --method oracle --budget 9 " + path("tri.json")), 0);
}

TEST_F(Cli, UsageValidationAndCapExits) {
    EXPECT_EQ(run("corpus no-such-suite"), 2);
    EXPECT_EQ(run("solve"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    write("bad.json", R"({"n":2})");
    EXPECT_EQ(run("solve " + path("bad.json")), 3);
    EXPECT_EQ(run("solve " + path("missing.json")), 3);
    EXPECT_EQ(run("make-gadget --delta 1 --set 1-1"), 3);
    ASSERT_EQ(run("make-gadget --delta 2 " + path("g2.json")), 0);
    EXPECT_EQ(run("verify gadget " + path("g2.json")), 4);
}

TEST_F(Cli, CapsFromEnvironment) {
    write("p6.json", R"({"n":6,"edges":[[0,1],[1,2],[2,3],[3,4],[4,5]],"terminals":[0,5],"demands":[[0,5]]})");
    write("caps.json", R"({"partitionCap":4})");
    setenv("MCWB_CAPS", path("caps.json").c_str(), 1);
    EXPECT_EQ(run("solve --method oracle " + path("p6.json")), 4);
    unsetenv("MCWB_CAPS");
    EXPECT_EQ(run("solve --method oracle " + path("p6.json")), 0);
}

TEST_F(Cli, DeterministicOutputAndManifest) {
    ASSERT_EQ(run("--manifest " + path("m1.json") + " solve " + path("tri.json"), "o1"), 0);
    ASSERT_EQ(run("--manifest " + path("m2.json") + " solve " + path("tri.json"), "o2"), 0);
    EXPECT_EQ(slurp(path("o1")), slurp(path("o2")));
    Json m1 = Json::parse(slurp(path("m1.json"))), m2 = Json::parse(slurp(path("m2.json")));
    for (const char* k : {"command", "inputHashes", "version", "caps", "resultDigest", "seeds", "exitCode"})
        EXPECT_EQ(m1[k], m2[k]) << k;
    EXPECT_EQ(m1["command"], "solve");
    EXPECT_TRUE(m1.contains("wallClockSeconds"));
    EXPECT_EQ(m1["inputHashes"].size(), 1u);
}

TEST_F(Cli, GadgetRoundTripAndVerify) {
    ASSERT_EQ(run("make-gadget --delta 1 --set \"1,1\" --encoder repoCell " + path("g1.json")), 0);
    ASSERT_EQ(run("verify gadget " + path("g1.json")), 0);
    Json rep = Json::parse(slurp(path("stdout")));
    EXPECT_TRUE(rep["passed"].get<bool>());
    EXPECT_EQ(rep["wstar"], 28700164800ull);
    EXPECT_EQ(run("make-gadget --delta 1 --encoder nope " + path("g0.json")), 3);
}

TEST_F(Cli, VerifyWitnessAndDual) {
    write("p3.json", R"({"n":3,"edges":[[0,1],[1,2]]})");
    write("k2.json", R"({"n":2,"edges":[[0,1]]})");
    write("w.json", R"([{"op":"identify","u":0,"v":2}])");
    write("wbad.json", R"([{"op":"identify","u":0,"v":1}])");
    EXPECT_EQ(run("verify witness --source " + path("p3.json") + " --target " + path("k2.json") + " " + path("w.json")),
              0);
    EXPECT_EQ(run("verify witness --source " + path("p3.json") + " " + path("wbad.json")), 1);
    ASSERT_EQ(run("solve --method oracle " + path("tri.json"), "sol.json"), 0);
    EXPECT_EQ(run("verify dual --cut " + path("sol.json") + " " + path("tri.json")), 0);
    write("cut.json", "[0]");
    EXPECT_EQ(run("verify dual --cut " + path("cut.json") + " " + path("tri.json")), 1);
}

TEST_F(Cli, ClassifyAndReduce) {
    write("c4.json", R"({"n":4,"edges":[[0,1],[1,2],[2,3],[3,0]]})");
    ASSERT_EQ(run("classify-pattern --t 2 " + path("c4.json")), 0);
    EXPECT_EQ(Json::parse(slurp(path("stdout")))["outcome"], "bounded-distance");
    write("e.json", R"({"n":2,"edges":[[0,1,3]],"terminals":[0,1],"demands":[[0,1]]})");
    ASSERT_EQ(run("reduce unweighted " + path("e.json")), 0);
    EXPECT_EQ(Json::parse(slurp(path("stdout")))["n"], 5);
    write("csp.json", R"({"variables":1,"domain":1,"constraints":[{"u":0,"v":0,"relation":[[1,1]]},)"
                      R"({"u":0,"v":0,"relation":[[1,1]]}],"rotation":[[0,0,1,1]]})");
    ASSERT_EQ(run("reduce csp3t " + path("csp.json") + " " + path("red.json")), 0);
    Json red = Json::parse(slurp(path("red.json")));
    EXPECT_EQ(red["groups"].size(), 3u);
    EXPECT_EQ(red["transcript"]["vertexOrigins"].size(), red["instance"]["n"].get<std::size_t>());
}

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "ometric/cli.hpp"

using namespace ometric;

namespace {

struct Result {
    int code;
    std::string out, err;
    Json json() const { return Json::parse(out); }
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "ometric");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) { return ::testing::TempDir() + name; }

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const std::string kBrokenMax = R"J({"a":0,"interval":[0,"inf"],"dist":"abs(x-y)","o":"max(u,v)"})J";

}  // namespace

TEST(CliCheck, BuiltinPasses) {
    const auto r = invoke({"--samples", "500", "check", "--space", "builtin:euclidean-metric"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = r.json();
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_EQ(j["axioms"].size(), 3u);
    EXPECT_EQ(j["samples"].get<int>(), 500);
}

TEST(CliCheck, BrokenSpaceAndWitnessRoundTrip) {
    const std::string report = temp_path("ometric_broken.json");
    const auto r = invoke({"--samples", "2000", "--out", report, "check", "--space", kBrokenMax});
    ASSERT_EQ(r.code, 1) << r.err;
    const Json j = Json::parse(slurp(report));
    EXPECT_FALSE(j["pass"].get<bool>());
    const Json& ce = j["axioms"][2]["counterexample"];
    ASSERT_TRUE(ce.is_object());
    const double x = ce["points"][0][0], y = ce["points"][1][0], z = ce["points"][2][0];
    EXPECT_GT(std::abs(x - z), std::max(std::abs(x - y), std::abs(y - z)));

    const auto v = invoke({"check", "--space", kBrokenMax, "--verify-witness", report});
    EXPECT_EQ(v.code, 1);
    EXPECT_TRUE(v.json()["witnesses"][0]["reproduced"].get<bool>());

    // The same points do not violate the ordinary triangle inequality.
    const auto ok = invoke({"check", "--space", "builtin:euclidean-metric", "--verify-witness", report});
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_FALSE(ok.json()["witnesses"][0]["reproduced"].get<bool>());
}

TEST(CliCheck, IdenticalOutputForSameSeed) {
    const auto a = invoke({"--samples", "300", "--seed", "7", "check", "--space", "builtin:log-metric"});
    const auto b = invoke({"--samples", "300", "--seed", "7", "check", "--space", "builtin:log-metric"});
    EXPECT_EQ(a.out, b.out);
}

TEST(CliErrors, UsageExitCodes) {
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
    EXPECT_EQ(invoke({"check"}).code, 2);
    EXPECT_EQ(invoke({"--samples", "0", "check", "--space", "builtin:euclidean-metric"}).code, 2);
    EXPECT_EQ(invoke({"check", "--space", "builtin:no-such-space"}).code, 2);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(CliErrors, DescriptorErrorsNameTheField) {
    const auto parse = invoke({"check", "--space", R"J({"a":0,"interval":[0,"inf"],"dist":"abs(x-y","o":"u+v"})J"});
    EXPECT_EQ(parse.code, 2);
    EXPECT_NE(parse.err.find("descriptor field 'dist'"), std::string::npos) << parse.err;

    const auto unknown = invoke({"check", "--space", R"J({"a":0,"interval":[0,"inf"],"dist":"1","o":"u+v","w":1})J"});
    EXPECT_EQ(unknown.code, 2);
    EXPECT_NE(unknown.err.find("'w'"), std::string::npos) << unknown.err;

    const auto base = invoke({"check", "--space", R"J({"a":-1,"interval":[0,"inf"],"dist":"1","o":"u+v"})J"});
    EXPECT_EQ(base.code, 2);
    EXPECT_NE(base.err.find("'a'"), std::string::npos) << base.err;

    const auto missing = invoke({"check", "--space", R"J({"a":0,"interval":[0,"inf"],"o":"u+v"})J"});
    EXPECT_NE(missing.err.find("'dist'"), std::string::npos) << missing.err;

    const auto json = invoke({"check", "--space", "{not json"});
    EXPECT_EQ(json.code, 2);
}

TEST(CliCheck, DescriptorFromFileWithBoxDomain) {
    const std::string path = temp_path("ometric_space.json");
    std::ofstream(path) << R"J({"name":"taxicab","a":0,"interval":[0,"inf"],
        "dist":"abs(x1-y1)+abs(x2-y2)","o":"u+v","domain":{"kind":"box","dim":2,"lo":-5,"hi":5}})J";
    const auto r = invoke({"--samples", "500", "check", "--space", path});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["space"]["dimension"].get<int>(), 2);
}

TEST(CliTransform, ToMetricAndRefusal) {
    const auto r = invoke({"--samples", "500", "transform", "--space", "builtin:multiplicative-exp", "--kind",
                           "to-metric", "--lambda", "ln"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(r.json()["refused"].get<bool>());
    for (const auto& a : r.json()["output_axioms"]) EXPECT_TRUE(a["pass"].get<bool>());

    const auto bad = invoke({"transform", "--space", "builtin:euclidean-metric", "--kind", "pushforward", "--theta",
                             "neg-exp"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_TRUE(bad.json()["refused"].get<bool>());
    EXPECT_EQ(invoke({"transform", "--space", "builtin:euclidean-metric", "--kind", "bogus"}).code, 2);
}

TEST(CliTransform, DualCountsOutsideValues) {
    const auto r = invoke({"--samples", "500", "transform", "--space", "builtin:euclidean-metric", "--kind", "dual",
                           "--phi", "sub", "--theta", "neg-exp"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GT(r.json()["outside_interval"].get<int>(), 0);
    EXPECT_EQ(r.json()["output"]["direction"].get<std::string>(), "downward");
}

TEST(CliTopology, BallMembership) {
    const auto r = invoke({"topology", "--space", "builtin:euclidean-metric", "--op", "ball", "--center", "0",
                           "--radius", "1", "--points", "[0.5, 2]"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json m = r.json()["members"];
    EXPECT_TRUE(m[0]["inside"].get<bool>());
    EXPECT_FALSE(m[1]["inside"].get<bool>());
}

TEST(CliTopology, SequenceTrend) {
    const auto r = invoke({"topology", "--space", "builtin:euclidean-metric", "--op", "sequence", "--expr", "1/n^2",
                           "--count", "65535", "--candidate", "0", "--candidate", "1"});
    EXPECT_EQ(r.code, 1);  // the candidate 1 is not a limit
    const Json a = r.json()["analyses"];
    ASSERT_EQ(a.size(), 2u);
    EXPECT_TRUE(a[0]["converging_trend"].get<bool>());
    EXPECT_FALSE(a[1]["converging_trend"].get<bool>());
}

TEST(CliTopology, SequenceCsv) {
    const auto r = invoke({"--format", "csv", "--tol", "0.1", "topology", "--space", "builtin:euclidean-metric", "--op", "sequence",
                           "--expr", "1/n", "--count", "15", "--candidate", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "n,residual_1");
    EXPECT_EQ(first, "1,1");
}

TEST(CliFixpoint, HalvingMap) {
    const auto r = invoke({"fixpoint", "--space", "builtin:euclidean-metric", "--map", "x/2+1", "--psi", "u/2", "--x0",
                           "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = r.json();
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_NEAR(j["fixed_point"][0].get<double>(), 2.0, 1e-7);
    EXPECT_EQ(j["iterations"].get<int>(), 29);
    EXPECT_EQ(j["iterates"].size(), 30u);
}

TEST(CliFixpoint, RefusedWithoutForce) {
    const auto r = invoke({"fixpoint", "--space", "builtin:euclidean-metric", "--map", "2*x", "--psi", "u/2", "--x0",
                           "1", "--max-iter", "20"});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(r.json()["refused"].get<bool>());
}

TEST(CliSharp, LogChain) {
    const auto r = invoke({"sharp", "--chain", "1,1,1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(r.json()["sharp"].get<double>(), std::log1p(3 * std::expm1(1.0)), 1e-12);
    EXPECT_EQ(r.json()["naive"].get<double>(), 3.0);
}

TEST(CliMatrix, SpiralAuditRoundTrip) {
    const std::string path = temp_path("ometric_spiral.csv");
    const auto g = invoke({"--out", path, "matrix", "spiral", "--r", "0.5", "--n", "8"});
    ASSERT_EQ(g.code, 0) << g.err;
    std::ifstream f(path);
    const auto m = DistanceMatrix::parse_csv(f);
    EXPECT_EQ(m.order(), 8u);
    EXPECT_NEAR(m(1, 2), 0.5, 1e-17);

    const auto a = invoke({"matrix", "audit", "--in", path});
    ASSERT_EQ(a.code, 0) << a.err;
    const Json j = a.json();
    EXPECT_EQ(j["order"].get<int>(), 8);
    EXPECT_NEAR(j["optimal_s"].get<double>(), 1.0, 1e-15);  // odd points are collinear
    EXPECT_NEAR(j["superdiagonal_sum"].get<double>(), 2.0 - std::ldexp(1.0, -6), 1e-15);
}

TEST(CliMatrix, ConstrainedAndErrors) {
    const std::string path = temp_path("ometric_discrete.json");
    std::ofstream(path) << "[[0,1,1],[1,0,1],[1,1,0]]";
    const auto r = invoke({"matrix", "constrained", "--in", path, "--s", "0.5"});
    EXPECT_EQ(r.code, 0) << r.err;
    const std::string bad = temp_path("ometric_bad.csv");
    std::ofstream(bad) << "0,1\n2,0\n";
    const auto b = invoke({"matrix", "audit", "--in", bad});
    EXPECT_EQ(b.code, 2);
    EXPECT_NE(b.err.find("symmetry"), std::string::npos) << b.err;
    EXPECT_EQ(invoke({"matrix", "audit", "--in", temp_path("missing.csv")}).code, 2);
    EXPECT_EQ(invoke({"matrix"}).code, 2);
}

TEST(CliBinary, ExitCodesFromProcess) {
    const std::string cli = OMETRIC_CLI_PATH;
    const auto status = [&](const std::string& args) {
        const int s = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    EXPECT_EQ(status("--samples 200 check --space builtin:euclidean-metric"), 0);
    EXPECT_EQ(status("--samples 2000 check --space '" + kBrokenMax + "'"), 1);
    EXPECT_EQ(status("no-such-command"), 2);
}

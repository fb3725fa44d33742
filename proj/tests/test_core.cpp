#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ometric/core.hpp"

using namespace ometric;

namespace {

Tolerances tol() { return {1e-9, 1e-9}; }

OMetricSpace broken_max() {
    return make_space("broken", Domain::line(), [](const Point& x, const Point& y) { return std::abs(x[0] - y[0]); },
                      catalog::max(), 0.0, kNonNegative);
}

}  // namespace

TEST(Classify, Direction) {
    EXPECT_EQ(classify(Interval::closed(0, kInf), 0.0), Direction::Upward);
    EXPECT_EQ(classify(Interval::left_open(0, 1), 1.0), Direction::Downward);
    EXPECT_EQ(classify(Interval::closed(0, kInf), 1.0), Direction::Neither);
}

TEST(MakeSpace, RejectsBaseOutsideInterval) {
    EXPECT_THROW(make_space("x", Domain::line(), [](const Point&, const Point&) { return 0.0; }, catalog::add(), -1.0,
                            kNonNegative),
                 std::invalid_argument);
}

class BuiltinAxioms : public ::testing::TestWithParam<std::string> {};

TEST_P(BuiltinAxioms, PassAtTenThousandSamples) {
    const OMetricSpace s = builtin(GetParam());
    const auto reps = check_axioms(s, 10000, 42, tol());
    for (const auto& r : reps) EXPECT_TRUE(r.pass) << to_string(r.axiom) << ": " << r.counterexample->message;
}

INSTANTIATE_TEST_SUITE_P(All, BuiltinAxioms, ::testing::ValuesIn(builtin_names()),
                         [](const auto& info) {
                             std::string n = info.param;
                             for (auto& c : n)
                                 if (c == '-') c = '_';
                             return n;
                         });

TEST(Builtins, DistancesMatchClosedForms) {
    const Point x{0.3}, y{-1.1};
    const double t = 1.4;
    EXPECT_DOUBLE_EQ(builtin("euclidean-metric").dist(x, y), t);
    EXPECT_DOUBLE_EQ(builtin("b-metric-power").dist(x, y), t * t);
    EXPECT_DOUBLE_EQ(builtin("multiplicative-exp").dist(x, y), std::exp(t));
    EXPECT_DOUBLE_EQ(builtin("exp-downward").dist(x, y), std::exp(-t));
    EXPECT_DOUBLE_EQ(builtin("log-metric").dist(x, y), std::log1p(t));
    EXPECT_DOUBLE_EQ(builtin("ultrametric-max").dist(x, y), 1.1);
    EXPECT_DOUBLE_EQ(builtin("piecewise-mixed").dist(x, y), t);
    EXPECT_DOUBLE_EQ(builtin("piecewise-mixed").dist(Point{0}, Point{0.5}), std::exp(-0.5));
    EXPECT_DOUBLE_EQ(builtin("nonunique-limit").dist(Point{0.5}, Point{-0.4}), 0.2);
    EXPECT_DOUBLE_EQ(builtin("circle-area").dist(Point{0, 0}, Point{2, 0}), std::numbers::pi);
    EXPECT_DOUBLE_EQ(builtin("euclidean-metric", {{"dim", "2"}}).dist(Point{0, 0}, Point{3, 4}), 5.0);
}

TEST(Builtins, DirectionsAndBases) {
    EXPECT_EQ(builtin("exp-downward").direction, Direction::Downward);
    EXPECT_EQ(builtin("multiplicative-exp").a, 1.0);
    EXPECT_EQ(builtin("multiplicative-exp").direction, Direction::Upward);
    EXPECT_EQ(builtin("piecewise-mixed").direction, Direction::Neither);
}

TEST(Builtins, Parameters) {
    const OMetricSpace s = builtin("b-metric-power", {{"p", "3"}});
    EXPECT_DOUBLE_EQ(s.o(1.0, 1.0), 8.0);  // s = 2^(p-1) = 4
    EXPECT_THROW(builtin("b-metric-power", {{"s", "0.5"}}), std::invalid_argument);
    EXPECT_THROW(builtin("b-metric-power", {{"bogus", "1"}}), std::invalid_argument);
    EXPECT_THROW(builtin("no-such-space"), std::invalid_argument);
    EXPECT_THROW(builtin("p-metric", {{"omega", "u/2"}}), std::invalid_argument);
}

TEST(CheckAxioms, BrokenSpaceGivesReproducibleCounterexample) {
    const auto s = broken_max();
    const auto r1 = check_axioms(s, 10000, 42, tol());
    const auto r2 = check_axioms(s, 10000, 42, tol());
    EXPECT_TRUE(r1[0].pass);
    EXPECT_TRUE(r1[1].pass);
    ASSERT_FALSE(r1[2].pass);
    ASSERT_TRUE(r1[2].counterexample.has_value());
    EXPECT_EQ(r1[2].counterexample->points, r2[2].counterexample->points);
    const auto& p = r1[2].counterexample->points;
    // Independent oracle: |x - z| > max(|x - y|, |y - z|).
    const double dxz = std::abs(p[0][0] - p[2][0]);
    const double rhs = std::max(std::abs(p[0][0] - p[1][0]), std::abs(p[1][0] - p[2][0]));
    EXPECT_GT(dxz, rhs);
    EXPECT_TRUE(verify_witness(s, Axiom::TriangleO, p, tol()));
}

TEST(CheckAxioms, VerifyWitnessRejectsNonViolations) {
    const auto s = builtin("euclidean-metric");
    EXPECT_FALSE(verify_witness(s, Axiom::TriangleO, {{0.0}, {1.0}, {2.0}}, tol()));
    EXPECT_FALSE(verify_witness(s, Axiom::Symmetry, {{0.0}, {1.0}}, tol()));
}

TEST(CheckAxioms, FiniteDomainIsExhaustive) {
    // The double-limit space on {-1, 1}: d(1, -1) = |1 * -1| = 1 = a for distinct points.
    OMetricSpace s = builtin("nonunique-limit");
    s.domain = Domain::finite({{-1.0}, {1.0}});
    const auto reps = check_axioms(s, 10, 42, tol());
    EXPECT_TRUE(reps[0].exhaustive);
    ASSERT_FALSE(reps[0].pass);
    EXPECT_EQ(reps[0].counterexample->message, "d(x,y) = a for distinct points");
}

TEST(CheckAxioms, DeterministicForSeed) {
    const auto s = builtin("log-metric");
    const auto a = check_axioms(s, 500, 9, tol());
    const auto b = check_axioms(s, 500, 9, tol());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].pass, b[i].pass);
    EXPECT_THROW(check_axioms(s, 0, 1, tol()), std::invalid_argument);
}

TEST(Genl, RequirementsAndSpace) {
    EXPECT_TRUE(check_genl_requirements(catalog::add(), 0.0).ok);
    EXPECT_FALSE(check_genl_requirements(catalog::mul(), 0.0).ok);
    const OMetricSpace s = genl_space(catalog::mul(), 1.0);
    EXPECT_DOUBLE_EQ(s.dist(Point{3.0}, Point{3.0}), 1.0);
    EXPECT_DOUBLE_EQ(s.dist(Point{3.0}, Point{0.0}), 3.0 * 2.0);  // o(1+2, 1+1)
    EXPECT_TRUE(all_pass(check_axioms(s, 2000, 42, tol())));
}

TEST(Domain, SampleAndContain) {
    Rng rng(1);
    const Domain d = Domain::segment(-1, 1);
    for (int i = 0; i < 100; ++i) EXPECT_TRUE(d.contains(d.sample(rng)));
    EXPECT_FALSE(d.contains(Point{2.0}));
    const Domain p = Domain::product({Domain::finite({{0.0}, {1.0}}), Domain::finite({{5.0}})});
    ASSERT_TRUE(p.enumerate().has_value());
    EXPECT_EQ(p.enumerate()->size(), 2u);
    EXPECT_TRUE(p.contains(Point{1.0, 5.0}));
}

#include <cmath>

#include <gtest/gtest.h>

#include "ometric/topology.hpp"

using namespace ometric;

namespace {

std::vector<Point> constant_seq(double x, std::size_t n) { return std::vector<Point>(n, Point{x}); }

}  // namespace

TEST(Ball, EuclideanMembership) {
    const OMetricSpace eu = builtin("euclidean-metric");
    EXPECT_TRUE(ball_contains(eu, Point{0.0}, 1.0, Point{0.5}));
    EXPECT_FALSE(ball_contains(eu, Point{0.0}, 1.0, Point{1.0}));  // open ball
    const Ball b{Point{2.0}, 0.5, &eu};
    EXPECT_TRUE(ball_contains(b, Point{2.4}));
    EXPECT_FALSE(ball_contains(b, Point{1.4}));
}

TEST(Ball, MultiplicativeUsesDistanceToBase) {
    // |e^|x-y| - 1| < r  iff  |x-y| < ln(1 + r).
    const OMetricSpace mu = builtin("multiplicative-exp");
    const double r = 0.5, edge = std::log1p(r);
    EXPECT_TRUE(ball_contains(mu, Point{0.0}, r, Point{edge * 0.999}));
    EXPECT_FALSE(ball_contains(mu, Point{0.0}, r, Point{edge * 1.001}));
}

TEST(Sequence, GenerateFromExpression) {
    const auto s = generate_sequence("1/n", 4);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_DOUBLE_EQ(s[3][0], 0.25);
    EXPECT_THROW(generate_sequence("1/(n-1)", 3), DomainError);
    EXPECT_THROW(generate_sequence("m", 3), ParseError);
}

TEST(Sequence, InverseSquareConvergesToZero) {
    const OMetricSpace eu = builtin("euclidean-metric");
    const auto seq = generate_sequence("1/n^2", (std::size_t{1} << 16) - 1);
    const auto an = analyze_sequence(eu, seq, Point{0.0});
    ASSERT_TRUE(an.converging_trend.has_value());
    EXPECT_TRUE(*an.converging_trend);
    EXPECT_TRUE(an.cauchy_trend);
    ASSERT_EQ(an.window_max.size(), 16u);
    // Window k starts at n = 2^k, so its maximum residual is 4^-k.
    for (std::size_t k = 0; k < an.window_max.size(); ++k) EXPECT_DOUBLE_EQ(an.window_max[k], std::ldexp(1.0, -2 * int(k)));
    EXPECT_FALSE(*analyze_sequence(eu, seq, Point{0.1}).converging_trend);
}

TEST(Sequence, HarmonicConvergesAtLooserTolerance) {
    const OMetricSpace eu = builtin("euclidean-metric");
    const auto seq = generate_sequence("1/n", (std::size_t{1} << 14) - 1);
    EXPECT_TRUE(*analyze_sequence(eu, seq, Point{0.0}, 1e-3).converging_trend);
    EXPECT_FALSE(*analyze_sequence(eu, seq, Point{0.0}, 1e-9).converging_trend);
}

TEST(Sequence, AlternatingDoesNotConverge) {
    const OMetricSpace eu = builtin("euclidean-metric");
    const auto seq = generate_sequence("(-1)^n", 1023);
    for (double c : {-1.0, 0.0, 1.0}) EXPECT_FALSE(*analyze_sequence(eu, seq, Point{c}).converging_trend);
    EXPECT_FALSE(analyze_sequence(eu, seq).cauchy_trend);
    EXPECT_FALSE(analyze_sequence(eu, seq).converging_trend.has_value());
}

TEST(Sequence, ConstantIsTriviallyConvergent) {
    const OMetricSpace eu = builtin("euclidean-metric");
    const auto an = analyze_sequence(eu, constant_seq(3.0, 63), Point{3.0});
    EXPECT_TRUE(*an.converging_trend);
    EXPECT_TRUE(an.cauchy_trend);
}

TEST(Sequence, RejectsShortOrOutOfDomain) {
    const OMetricSpace eu = builtin("euclidean-metric");
    EXPECT_THROW(analyze_sequence(eu, constant_seq(0.0, 3)), std::invalid_argument);
    EXPECT_THROW(analyze_sequence(builtin("nonunique-limit"), constant_seq(2.0, 8)), std::invalid_argument);
    EXPECT_THROW(analyze_sequence(builtin("nonunique-limit"), constant_seq(0.5, 8), Point{3.0}), std::invalid_argument);
}

TEST(Sequence, NonuniqueLimitHasTwoLimits) {
    // d(x,y) = |xy| on [-1,1] with a = 1: x_n -> 1 gives |x_n * (+-1)| -> 1.
    const OMetricSpace nl = builtin("nonunique-limit");
    const auto seq = generate_sequence("1-1/n^2", (std::size_t{1} << 16) - 1);
    EXPECT_TRUE(*analyze_sequence(nl, seq, Point{1.0}).converging_trend);
    EXPECT_TRUE(*analyze_sequence(nl, seq, Point{-1.0}).converging_trend);
    EXPECT_FALSE(*analyze_sequence(nl, seq, Point{0.5}).converging_trend);
}

TEST(UConditions, EuclideanHasUniqueLimits) {
    const auto rep = check_U_conditions(builtin("euclidean-metric"));
    EXPECT_TRUE(rep.u1.pass);
    EXPECT_TRUE(rep.u2.pass);
    EXPECT_TRUE(rep.u2_prime.pass);
    EXPECT_TRUE(rep.unique_limits);
}

TEST(UConditions, ReciprocalOperationLosesUniqueness) {
    // o(u,v) = 1/(uv) decreases in both variables.
    const auto rep = check_U_conditions(builtin("nonunique-limit"));
    EXPECT_TRUE(rep.u1.pass);
    ASSERT_FALSE(rep.u2.pass);
    EXPECT_FALSE(rep.u2_prime.pass);
    EXPECT_FALSE(rep.unique_limits);
    const auto& w = rep.u2.witness;  // {u1, u2, w, o(u1,w), o(u2,w)}
    ASSERT_EQ(w.size(), 5u);
    EXPECT_LT(w[0], w[1]);
    EXPECT_GT(w[3], w[4]);
}

TEST(CConditions, EuclideanWithSubtraction) {
    const auto rep = check_C_conditions(builtin("euclidean-metric"), catalog::sub());
    EXPECT_TRUE(rep.applicable);
    EXPECT_TRUE(rep.c1.pass) << rep.c1.message;
    EXPECT_TRUE(rep.c2.pass) << rep.c2.message;
}

TEST(CConditions, BMetricPowerFailsExistence) {
    // o(u,v) = 2(u+v) <= r needs u < r/2, so a witness has u in [r/2, r).
    const auto rep = check_C_conditions(builtin("b-metric-power", {{"p", "2"}}), catalog::sub());
    ASSERT_FALSE(rep.c1.pass);
    ASSERT_GE(rep.c1.witness.size(), 2u);
    const double r = rep.c1.witness[0], u = rep.c1.witness[1];
    EXPECT_GE(u, r / 2);
    EXPECT_LT(u, r);
}

TEST(CConditions, BadGammaIsReported) {
    const auto rep = check_C_conditions(builtin("euclidean-metric"), catalog::add());
    EXPECT_FALSE(rep.c1.pass);
}

TEST(CConditions, NotApplicableToDownward) {
    const auto rep = check_C_conditions(builtin("exp-downward"), catalog::sub());
    EXPECT_FALSE(rep.applicable);
    EXPECT_FALSE(rep.c1.pass);
}

TEST(Hausdorff, EuclideanRadii) {
    const OMetricSpace eu = builtin("euclidean-metric");
    const auto w = hausdorff_witness(eu, catalog::sub(), Point{0.0}, Point{4.0});
    EXPECT_DOUBLE_EQ(w.r, 2.0);
    EXPECT_DOUBLE_EQ(w.r1, 2.0);
    const auto d = check_disjoint(eu, Point{0.0}, w.r1, Point{4.0}, w.r, 5000, 1);
    EXPECT_EQ(d.in_both, 0u);
    EXPECT_GT(d.in_first, 0u);
    EXPECT_GT(d.in_second, 0u);
    EXPECT_THROW(hausdorff_witness(eu, catalog::sub(), Point{1.0}, Point{1.0}), std::invalid_argument);
}

TEST(Hausdorff, OverlappingRadiiAreDetected) {
    const OMetricSpace eu = builtin("euclidean-metric");
    const auto d = check_disjoint(eu, Point{0.0}, 3.0, Point{4.0}, 3.0, 5000, 1);
    ASSERT_GT(d.in_both, 0u);
    const double z = (*d.witness)[0];
    EXPECT_LT(std::abs(z), 3.0);
    EXPECT_LT(std::abs(z - 4.0), 3.0);
}

TEST(BallInclusion, EuclideanHasNoViolations) {
    const auto rep = check_ball_inclusion(builtin("euclidean-metric"), catalog::sub(), 50, 200, 3);
    EXPECT_GT(rep.tested, 0u);
    EXPECT_EQ(rep.violations, 0u);
}

TEST(BallInclusion, OversizedGammaViolates) {
    const BinOpFn big("u+v", kNonNegative, [](double r, double u) { return r + u; });
    const auto rep = check_ball_inclusion(builtin("euclidean-metric"), big, 50, 200, 3);
    EXPECT_GT(rep.violations, 0u);
}

TEST(Regenerate, DownwardBecomesUpward) {
    const OMetricSpace dn = builtin("exp-downward");
    const OMetricSpace up = upward_regenerate(dn);
    EXPECT_EQ(up.direction, Direction::Upward);
    const Point x{0.0}, y{2.0};
    EXPECT_DOUBLE_EQ(up.dist(x, y), dn.a + std::abs(std::exp(-2.0) - dn.a));
    EXPECT_DOUBLE_EQ(up.dist(x, x), dn.a);
}

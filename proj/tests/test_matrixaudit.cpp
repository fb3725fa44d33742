#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ometric/matrixaudit.hpp"

using namespace ometric;

namespace {

DistanceMatrix discrete(std::size_t n) {
    DistanceMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m.set_symmetric(i, j, 1.0);
    return m;
}

// Walks the spiral directly: step k (k >= 1) has length r^(k-1) and turns
// through -y, -x, +y, +x after the first step along +x.
std::vector<std::array<double, 2>> walk_spiral(double r, std::size_t n) {
    std::vector<std::array<double, 2>> p{{0.0, 0.0}, {1.0, 0.0}};
    const double dx[] = {0, -1, 0, 1}, dy[] = {-1, 0, 1, 0};
    for (std::size_t k = 2; p.size() < n; ++k) {
        const double len = std::pow(r, double(k - 1));
        const auto& last = p.back();
        p.push_back({last[0] + len * dx[(k - 2) % 4], last[1] + len * dy[(k - 2) % 4]});
    }
    return p;
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace

TEST(DistanceMatrix, Validation) {
    EXPECT_NO_THROW(DistanceMatrix::from_rows({{0, 1}, {1, 0}}));
    EXPECT_THROW(DistanceMatrix::from_rows({{0, 1}, {2, 0}}), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix::from_rows({{1, 1}, {1, 0}}), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix::from_rows({{0, -1}, {-1, 0}}), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix::from_rows({{0, 0}, {0, 0}}), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix::from_rows({{0, NAN}, {NAN, 0}}), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix::from_rows({{0, 1}, {1}}), std::invalid_argument);
    try {
        DistanceMatrix::from_rows({{0, 1, 2}, {1, 0, 1}, {2, 5, 0}});
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("entry (2,3)"), std::string::npos) << e.what();
    }
}

TEST(DistanceMatrix, CsvAndJson) {
    std::istringstream csv("0, 1, 2\n1,0,1\r\n\n2,1,0\n");
    const auto m = DistanceMatrix::parse_csv(csv);
    EXPECT_EQ(m.order(), 3u);
    EXPECT_DOUBLE_EQ(m(0, 2), 2.0);
    std::istringstream back(m.to_csv());
    const auto m2 = DistanceMatrix::parse_csv(back);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), m2(i, j));
    std::istringstream bad("0,x\nx,0\n");
    EXPECT_THROW(DistanceMatrix::parse_csv(bad), std::invalid_argument);
    std::istringstream empty("");
    EXPECT_THROW(DistanceMatrix::parse_csv(empty), std::invalid_argument);
    const auto j = DistanceMatrix::parse_json(nlohmann::json::parse("[[0,2],[2,0]]"));
    EXPECT_DOUBLE_EQ(j(1, 0), 2.0);
    EXPECT_THROW(DistanceMatrix::parse_json(nlohmann::json::parse("[[0,\"a\"],[1,0]]")), std::invalid_argument);
}

TEST(DistanceMatrix, LoadDetectsFormat) {
    const std::string path = ::testing::TempDir() + "ometric_matrix.json";
    std::ofstream(path) << "  [[0, 3], [3, 0]]";
    EXPECT_DOUBLE_EQ(DistanceMatrix::load(path)(0, 1), 3.0);
    std::ofstream(path) << "0,4\n4,0\n";
    EXPECT_DOUBLE_EQ(DistanceMatrix::load(path)(0, 1), 4.0);
    std::remove(path.c_str());
    EXPECT_THROW(DistanceMatrix::load(path), std::invalid_argument);
}

TEST(Audit, DiscreteThreePoints) {
    const auto r = audit(discrete(3));
    EXPECT_DOUBLE_EQ(r.optimal_s, 0.5);
    EXPECT_TRUE(r.triangle_holds);
    EXPECT_TRUE(r.betweenness.empty());
    EXPECT_FALSE(r.distinct_entries);
    EXPECT_DOUBLE_EQ(r.superdiagonal_sum, 2.0);
}

TEST(Audit, CollinearPoints) {
    const auto r = audit(DistanceMatrix::from_rows({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}}));
    EXPECT_DOUBLE_EQ(r.optimal_s, 1.0);
    ASSERT_TRUE(r.worst_triple.has_value());
    EXPECT_EQ(*r.worst_triple, (Triple{1, 2, 3}));
    ASSERT_EQ(r.betweenness.size(), 1u);
    EXPECT_EQ(r.betweenness[0], (Triple{1, 2, 3}));
    ASSERT_EQ(r.betweenness_sequences.size(), 1u);
    EXPECT_EQ(r.betweenness_sequences[0], (std::pair<std::size_t, std::size_t>{1, 3}));
}

TEST(Audit, CircleAreaCollinear) {
    // Points 0, sqrt2, 2 sqrt2 on a line with d = pi (|x-y|/2)^2.
    const double pi = std::numbers::pi;
    const auto r = audit(DistanceMatrix::from_rows({{0, pi / 2, 2 * pi}, {pi / 2, 0, pi / 2}, {2 * pi, pi / 2, 0}}));
    EXPECT_NEAR(r.optimal_s, 2.0, 1e-15);
    EXPECT_FALSE(r.triangle_holds);
    EXPECT_EQ(*r.worst_triple, (Triple{1, 2, 3}));
}

TEST(Audit, RejectsOversizedMatrix) {
    EXPECT_THROW(audit(discrete(kMaxAuditOrder + 1)), std::invalid_argument);
}

TEST(Spiral, PointsMatchDirectWalk) {
    const double r = 0.5;
    const auto walk = walk_spiral(r, 40);
    for (std::size_t i = 1; i <= walk.size(); ++i) {
        const auto p = spiral_point(r, i);
        EXPECT_NEAR(p[0], walk[i - 1][0], 1e-15) << i;
        EXPECT_NEAR(p[1], walk[i - 1][1], 1e-15) << i;
    }
    EXPECT_EQ(spiral_point(r, 3), (std::array<double, 2>{1.0, -0.5}));
    EXPECT_EQ(spiral_point(r, 4), (std::array<double, 2>{0.75, -0.5}));
    EXPECT_EQ(spiral_point(r, 5), (std::array<double, 2>{0.75, -0.375}));
    EXPECT_THROW(spiral_point(r, 0), std::invalid_argument);
}

TEST(Spiral, MatrixEntries) {
    const double r = 0.3;
    const std::size_t n = 24;
    const auto m = spiral_matrix(r, n);
    const auto walk = walk_spiral(r, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) EXPECT_NEAR(m(i, j), dist(walk[i], walk[j]), 1e-15);
    // Consecutive steps shrink geometrically.
    for (std::size_t k = 0; k + 1 < n; ++k)
        EXPECT_NEAR(m(k, k + 1), std::pow(r, double(k)), 1e-15 * std::pow(r, double(k)) + 1e-300);
    const auto h = spiral_matrix(0.5, 5);
    EXPECT_DOUBLE_EQ(h(1, 2), 0.5);
    EXPECT_DOUBLE_EQ(h(2, 3), 0.25);
    EXPECT_LE(spiral_max_discrepancy(0.5, 64), 1e-12);
    EXPECT_THROW(spiral_matrix(1.0, 8), std::invalid_argument);
    EXPECT_THROW(spiral_matrix(0.5, 2), std::invalid_argument);
}

TEST(Spiral, TinyEntriesSurviveAtLargeOrder) {
    const auto m = spiral_matrix(0.5, 64);
    EXPECT_DOUBLE_EQ(m(62, 63), std::ldexp(1.0, -62));
    EXPECT_NO_THROW(m.validate());
}

TEST(Spiral, SuperdiagonalSumIsGeometric) {
    for (std::size_t n : {8u, 16u, 32u}) {
        const auto rep = audit(spiral_matrix(0.5, n));
        EXPECT_NEAR(rep.superdiagonal_sum, 2.0 * (1.0 - std::ldexp(1.0, 1 - int(n))), 1e-15);
    }
}

TEST(Spiral, OddPointsAreCollinear) {
    // x1, x3, x5, ... lie on the line y = -r x with x5 = 0.75 x3, so the sup of
    // the quotient is 1.
    const double r = 0.5;
    for (std::size_t i = 3; i <= 31; i += 2) {
        const auto p = spiral_point(r, i);
        EXPECT_NEAR(p[1], -r * p[0], 1e-15) << i;
    }
    const auto rep = audit(spiral_matrix(r, 8));
    EXPECT_NEAR(rep.optimal_s, 1.0, 1e-15);
    EXPECT_TRUE(rep.triangle_holds);
    EXPECT_NE(std::find(rep.betweenness.begin(), rep.betweenness.end(), Triple{1, 5, 3}), rep.betweenness.end());
    EXPECT_TRUE(rep.distinct_entries);
}

TEST(Spiral, QuotientGrowthStaysAtOne) {
    const auto rows = quotient_growth(0.5, {8, 16, 32});
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& row : rows) EXPECT_NEAR(row.q_max, 1.0, 1e-15);
    EXPECT_THROW(quotient_growth(0.5, {16, 8}), std::invalid_argument);
}

TEST(Polygon, SpiralWithUnitConstant) {
    const auto rep = polygon_bound_check(spiral_matrix(0.5, 32), 1.0);
    EXPECT_EQ(rep.pairs, 32u * 31u / 2u);
    EXPECT_TRUE(rep.violations.empty());
}

TEST(Polygon, SmallConstantFailsOnAdjacentPairs) {
    // With s < 1 the bound s^g(1) alpha_{i,i+1} is below alpha_{i,i+1}.
    const auto rep = polygon_bound_check(discrete(4), 0.5);
    ASSERT_FALSE(rep.violations.empty());
    const auto& v = rep.violations.front();
    EXPECT_EQ(v.n, v.i + 1);
    EXPECT_DOUBLE_EQ(v.bound, 0.25);
    EXPECT_THROW(polygon_bound_check(discrete(3), -1.0), std::invalid_argument);
}

TEST(Constrained, DiscreteHalf) {
    const std::size_t n = 10;
    const auto rep = constrained_richness(discrete(n), 0.5);
    EXPECT_TRUE(rep.s_constrained);
    EXPECT_FALSE(rep.witness.has_value());
    ASSERT_EQ(rep.partial_sums.size(), n - 1);
    EXPECT_DOUBLE_EQ(rep.partial_sums.back(), double(n - 1));
    EXPECT_TRUE(rep.divergent_trend);
}

TEST(Constrained, SpiralFailsAtPointNine) {
    const double s = 0.9;
    const auto rep = constrained_richness(spiral_matrix(0.5, 16), s);
    ASSERT_FALSE(rep.s_constrained);
    ASSERT_TRUE(rep.witness.has_value());
    const auto walk = walk_spiral(0.5, 16);
    const auto [i, k, j] = *rep.witness;
    const double lhs = dist(walk[i - 1], walk[j - 1]);
    const double rhs = dist(walk[i - 1], walk[k - 1]) + dist(walk[k - 1], walk[j - 1]);
    EXPECT_GT(lhs, s * rhs);
    EXPECT_NEAR(rep.witness_quotient, 1.0, 1e-12);
    EXPECT_FALSE(rep.divergent_trend);  // geometric steps
}

TEST(Constrained, TwoPointsAreVacuous) {
    const auto rep = constrained_richness(DistanceMatrix::from_rows({{0, 5}, {5, 0}}), 0.1);
    EXPECT_TRUE(rep.s_constrained);
    ASSERT_EQ(rep.bound_ratios.size(), 1u);
    EXPECT_THROW(constrained_richness(discrete(3), 1.0), std::invalid_argument);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "expr.hpp"
#include "scalarfn.hpp"

namespace ometric {

/// B(center, radius) = { y : |d(center, y) - a| < radius }.
struct Ball {
    Point center;
    double radius;
    const OMetricSpace* space;
};

inline bool ball_contains(const OMetricSpace& s, const Point& center, double radius, const Point& y) {
    return std::abs(s.dist(center, y) - s.a) < radius;
}

inline bool ball_contains(const Ball& b, const Point& y) {
    return ball_contains(*b.space, b.center, b.radius, y);
}

// ---------------------------------------------------------------------------
// Sequences

struct SequenceAnalysis {
    std::size_t length = 0;
    std::optional<Point> candidate;
    std::vector<double> residuals;        // |d(x_n, x) - a|, n = 1..N
    std::vector<double> window_max;       // per dyadic window [2^k, 2^(k+1))
    std::vector<double> cauchy_window_max;
    std::optional<bool> converging_trend;
    bool cauchy_trend = false;
    double threshold = 0.0;
};

namespace detail {

/// Window maxima decrease (strictly, unless already zero) and the last one
/// is below the threshold.
inline bool trend(const std::vector<double>& m, double threshold) {
    if (m.size() < 2) return false;
    for (std::size_t k = 1; k < m.size(); ++k)
        if (!(m[k] < m[k - 1] || m[k] == 0.0)) return false;
    return m.back() < threshold;
}

inline constexpr std::size_t kCauchyIndicesPerWindow = 64;

}  // namespace detail

/// Trend analysis of a finite prefix x_1..x_N. Window k covers
/// n in [2^k, 2^(k+1)); only complete windows are used. Cauchy residuals use
/// up to 64 evenly spaced indices per window.
inline SequenceAnalysis analyze_sequence(const OMetricSpace& s, const std::vector<Point>& seq,
                                         const std::optional<Point>& candidate = std::nullopt,
                                         double tol = 1e-9) {
    if (seq.size() < 4) throw std::invalid_argument("analyze_sequence: need at least 4 terms");
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (!s.domain.contains(seq[i]))
            throw std::invalid_argument("analyze_sequence: term " + std::to_string(i + 1) + " " +
                                        format_point(seq[i]) + " outside the domain");
    if (candidate && !s.domain.contains(*candidate))
        throw std::invalid_argument("analyze_sequence: candidate " + format_point(*candidate) + " outside the domain");

    SequenceAnalysis out;
    out.length = seq.size();
    out.candidate = candidate;
    out.threshold = 10.0 * tol;
    const std::size_t N = seq.size();
    std::size_t windows = 0;
    while ((std::size_t{2} << windows) - 1 <= N) ++windows;  // window k complete iff 2^(k+1)-1 <= N

    if (candidate) {
        out.residuals.reserve(N);
        for (const auto& x : seq) out.residuals.push_back(std::abs(s.dist(x, *candidate) - s.a));
        for (std::size_t k = 0; k < windows; ++k) {
            double m = 0.0;
            for (std::size_t n = std::size_t{1} << k; n < (std::size_t{2} << k); ++n) m = std::max(m, out.residuals[n - 1]);
            out.window_max.push_back(m);
        }
        out.converging_trend = detail::trend(out.window_max, out.threshold);
    }

    for (std::size_t k = 1; k < windows; ++k) {
        const std::size_t lo = std::size_t{1} << k, width = lo;
        const std::size_t count = std::min(width, detail::kCauchyIndicesPerWindow);
        std::vector<std::size_t> idx;
        for (std::size_t q = 0; q < count; ++q) idx.push_back(lo + q * (width - 1) / std::max<std::size_t>(1, count - 1));
        double m = 0.0;
        for (std::size_t p = 0; p < idx.size(); ++p)
            for (std::size_t q = p + 1; q < idx.size(); ++q)
                m = std::max(m, std::abs(s.dist(seq[idx[p] - 1], seq[idx[q] - 1]) - s.a));
        out.cauchy_window_max.push_back(m);
    }
    out.cauchy_trend = detail::trend(out.cauchy_window_max, out.threshold);
    return out;
}

/// x_n = f(n) for n = 1..count, f an expression in n.
inline std::vector<Point> generate_sequence(std::string_view expr, std::size_t count) {
    const Expr e = Expr::parse(expr, {"n"});
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t n = 1; n <= count; ++n) {
        const double x = e(static_cast<double>(n));
        if (!std::isfinite(x)) throw DomainError("sequence term " + std::to_string(n) + " is not finite");
        out.push_back({x});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uniqueness conditions

struct ConditionVerdict {
    std::string name;
    bool pass = true;
    std::vector<double> witness;
    std::string message;
};

struct UReport {
    ConditionVerdict u1{"U1"}, u2{"U2"}, u2_prime{"U2'"};
    bool unique_limits = false;
};

namespace detail {

/// Sample points of I_a for u-type arguments: both finite endpoints, then
/// uniform draws over the clipped interval.
inline std::vector<double> interval_samples(const Interval& I, double a, std::size_t n, Rng& rng) {
    std::vector<double> out;
    if (std::isfinite(I.lo) && I.contains(I.lo)) out.push_back(I.lo);
    if (std::isfinite(I.hi) && I.contains(I.hi)) out.push_back(I.hi);
    const auto [lo, hi] = I.sampling_range(std::isfinite(I.hi) ? I.hi : a + 100.0);
    for (std::size_t i = 0; i < n; ++i) out.push_back(rng.uniform(lo, hi));
    return out;
}

/// Non-decrease of o in one variable (0 = first, 1 = second).
inline std::optional<std::vector<double>> monotone_in(const OMetricSpace& s, int var, std::size_t samples,
                                                      Rng& rng, const Tolerances& tol) {
    const auto xs = interval_samples(s.interval, s.a, samples, rng);
    const auto ws = interval_samples(s.interval, s.a, samples, rng);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double u1 = xs[i], u2 = xs[i + 1];
        if (u1 > u2) std::swap(u1, u2);
        const double w = ws[i % ws.size()];
        const auto f1 = var == 0 ? s.o.try_eval(u1, w) : s.o.try_eval(w, u1);
        const auto f2 = var == 0 ? s.o.try_eval(u2, w) : s.o.try_eval(w, u2);
        if (!f1 || !f2) return std::vector<double>{u1, u2, w, NAN, NAN};
        if (!approx_leq(*f1, *f2, tol.ineq)) return std::vector<double>{u1, u2, w, *f1, *f2};
    }
    return std::nullopt;
}

/// o(u,a) = a iff u = a (var 0) or o(a,u) = a iff u = a (var 1).
inline std::optional<std::vector<double>> boundary_identity(const OMetricSpace& s, int var, std::size_t samples,
                                                            Rng& rng, const Tolerances& tol) {
    const auto oaa = s.o.try_eval(s.a, s.a);
    if (!oaa || !approx_equal(*oaa, s.a, tol.eq)) return std::vector<double>{s.a, oaa.value_or(NAN)};
    for (double u : interval_samples(s.interval, s.a, samples, rng)) {
        if (u == s.a) continue;
        const auto val = var == 0 ? s.o.try_eval(u, s.a) : s.o.try_eval(s.a, u);
        if (!val) return std::vector<double>{u, NAN};
        if (approx_equal(*val, s.a, tol.eq)) return std::vector<double>{u, *val};
    }
    return std::nullopt;
}

}  // namespace detail

/// Sampled U1 (continuity of o at (a,a)), U2 and U2'.
inline UReport check_U_conditions(const OMetricSpace& s, std::size_t samples = 1000, std::uint64_t seed = 42,
                                  const Tolerances& tol = {}) {
    UReport rep;
    Rng rng(seed);

    // U1: o on points a + e*(sigma, tau) with e = 10^-j, inside I_a.
    if (const auto oaa = s.o.try_eval(s.a, s.a); !oaa) {
        rep.u1 = {"U1", false, {s.a, s.a}, "o(a,a) undefined"};
    } else {
        double dev = kInf;
        std::vector<double> worst;
        for (int j = 0; j <= 12; ++j) {
            const double e = std::pow(10.0, -j);
            dev = 0.0;
            for (double su : {-1.0, 0.0, 1.0})
                for (double sv : {-1.0, 0.0, 1.0}) {
                    const double u = s.a + su * e, v = s.a + sv * e;
                    if (!s.interval.contains(u) || !s.interval.contains(v)) continue;
                    const auto val = s.o.try_eval(u, v);
                    const double d = val ? std::abs(*val - *oaa) : kInf;
                    if (d > dev) {
                        dev = d;
                        worst = {u, v, val.value_or(NAN)};
                    }
                }
        }
        if (!(dev <= 10.0 * tol.eq))
            rep.u1 = {"U1", false, worst, "deviation " + format_double(dev) + " from o(a,a) at scale 1e-12"};
    }

    std::optional<std::vector<double>> mono[2], bound[2];
    for (int var = 0; var < 2; ++var) {
        mono[var] = detail::monotone_in(s, var, samples, rng, tol);
        bound[var] = detail::boundary_identity(s, var, samples, rng, tol);
    }
    if (mono[0] || mono[1]) {
        const int bad = mono[0] ? 0 : 1;
        rep.u2 = {"U2", false, *mono[bad], std::string("o decreases in variable ") + (bad == 0 ? "u" : "v")};
    } else if (bound[0] && bound[1]) {
        rep.u2 = {"U2", false, *bound[0], "o(u,a) = a for some u != a, and likewise o(a,u)"};
    }
    bool prime = false;
    for (int var = 0; var < 2; ++var) prime = prime || (!mono[var] && !bound[var]);
    if (!prime) {
        const auto& w = mono[0] ? *mono[0] : (bound[0] ? *bound[0] : *mono[1]);
        rep.u2_prime = {"U2'", false, w, "no variable is both monotone and boundary-identifying"};
    }
    rep.unique_limits = rep.u1.pass && (rep.u2.pass || rep.u2_prime.pass);
    return rep;
}

// ---------------------------------------------------------------------------
// Openness conditions

struct CReport {
    ConditionVerdict c1{"C1"}, c2{"C2"}, general{"openness"};
    bool applicable = true;  // C1/C2 need an upward space
};

inline CReport check_C_conditions(const OMetricSpace& s, const BinOpFn& gamma, std::size_t samples = 1000,
                                  std::uint64_t seed = 42, const Tolerances& tol = {}) {
    CReport rep;
    Rng rng(seed);
    const double a = s.a;
    const double span = std::isfinite(s.interval.hi) ? s.interval.hi - a : 100.0;

    if (s.direction != Direction::Upward) {
        rep.applicable = false;
        rep.c1 = {"C1", false, {}, "space is not upward"};
        rep.c2 = {"C2", false, {}, "space is not upward"};
    } else {
        // Stage 1, independent of gamma: some v > a must give o(u,v) <= r.
        Rng ex(seed + 17);
        for (std::size_t i = 0; i < samples && rep.c1.pass; ++i) {
            const double r = a + span * (1.0 - ex.uniform01());
            const double u = ex.uniform(a, r);
            bool exists = false;
            for (int j = 0; j <= 60 && !exists; ++j) {
                const auto val = s.o.try_eval(u, a + (r - a) * std::ldexp(1.0, -j));
                exists = val && approx_leq(*val, r, tol.ineq);
            }
            if (!exists) rep.c1 = {"C1", false, {r, u}, "no v > a with o(u,v) <= r, so no gamma can exist"};
        }
        for (std::size_t i = 0; i < samples && rep.c1.pass; ++i) {
            const double r = a + span * (1.0 - rng.uniform01());  // r in (a, a+span]
            const double u = rng.uniform(a, r);
            const double g = gamma.raw(r, u);
            if (!(g > a)) {
                rep.c1 = {"C1", false, {r, u, g}, "gamma(r,u) <= a"};
                break;
            }
            const auto val = s.o.try_eval(u, g);
            if (!val) rep.c1 = {"C1", false, {r, u, g}, "o(u, gamma(r,u)) undefined"};
            else if (!approx_leq(*val, r, tol.ineq)) rep.c1 = {"C1", false, {r, u, g, *val}, "o(u, gamma(r,u)) > r"};
        }
        for (std::size_t i = 0; i < samples && rep.c2.pass; ++i) {
            double u1 = rng.uniform(a, a + span), u2 = rng.uniform(a, a + span);
            if (u1 > u2) std::swap(u1, u2);
            if (u1 == u2) continue;
            const double w = rng.uniform(a, a + span);
            for (int var = 0; var < 2; ++var) {
                const auto f1 = var == 0 ? s.o.try_eval(u1, w) : s.o.try_eval(w, u1);
                const auto f2 = var == 0 ? s.o.try_eval(u2, w) : s.o.try_eval(w, u2);
                if (!f1 || !f2 || !(*f1 < *f2)) {
                    rep.c2 = {"C2", false, {u1, u2, w, f1.value_or(NAN), f2.value_or(NAN)},
                              std::string("o not strictly increasing in ") + (var == 0 ? "u" : "v")};
                    break;
                }
            }
        }
    }

    // Openness: for r > 0 and |u-a| < r there is s > 0 such that every
    // w in I_a below o(u,v), for any v in I_a with |v-a| < s, has |w-a| < r.
    const Interval& I = s.interval;
    auto worst_w = [&](double ouv) -> std::optional<double> {
        // sup |w - a| over w in I_a with w <= o(u,v); nullopt when the set is empty.
        if (ouv < I.lo || (I.lo_open && ouv == I.lo)) return std::nullopt;
        const double top = std::min(ouv, I.hi);
        return std::max(std::abs(top - a), std::isfinite(I.lo) ? std::abs(I.lo - a) : kInf);
    };
    const std::size_t outer = std::min<std::size_t>(samples, 200);
    constexpr std::size_t kInner = 50;
    for (std::size_t i = 0; i < outer && rep.general.pass; ++i) {
        const double r = span * (1.0 - rng.uniform01());
        // u in I_a with |u - a| < r.
        double u = a + (2.0 * rng.uniform01() - 1.0) * r;
        if (!I.contains(u)) u = a;
        bool found = false;
        for (int j = 0; j <= 40 && !found; ++j) {
            const double sj = r * std::ldexp(1.0, -j);
            bool ok = true;
            for (std::size_t q = 0; q <= kInner && ok; ++q) {
                const double v = q == 0 ? a : a + (2.0 * rng.uniform01() - 1.0) * sj;
                if (!I.contains(v) || !(std::abs(v - a) < sj)) continue;
                const auto ouv = s.o.try_eval(u, v);
                if (!ouv) {
                    ok = false;
                    break;
                }
                const auto w = worst_w(*ouv);
                if (w && !(*w < r)) ok = false;
            }
            found = ok;
        }
        if (!found) rep.general = {"openness", false, {r, u}, "no s found for this (r, u)"};
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Hausdorff separation

struct HausdorffWitness {
    double r1;
    double r;
};

/// Radii separating x and y: r = (d(x,y) - a)/2, r1 = γ(d(x,y), a + r) - a.
inline HausdorffWitness hausdorff_witness(const OMetricSpace& s, const BinOpFn& gamma, const Point& x,
                                          const Point& y) {
    if (x == y) throw std::invalid_argument("hausdorff_witness: points must be distinct");
    const double d = s.dist(x, y);
    if (!(d > s.a)) throw HypothesisError("hausdorff_witness: d(x,y) <= a; the space is not upward here");
    const double r = (d - s.a) / 2.0;
    const double r1 = gamma.raw(d, s.a + r) - s.a;
    if (!(r1 > 0)) throw HypothesisError("hausdorff_witness: gamma gives a non-positive radius " + format_double(r1));
    return {r1, r};
}

/// Draws a point near x: for box domains each coordinate is perturbed by up
/// to `scale`, clamped into the sampling bounds.
inline Point sample_near(const Domain& dom, const Point& x, double scale, Rng& rng) {
    if (dom.kind != Domain::Kind::Box) return dom.sample(rng);
    Point p = x;
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = std::clamp(x[i] + scale * (2.0 * rng.uniform01() - 1.0), dom.lo[i], dom.hi[i]);
    return p;
}

struct DisjointnessReport {
    std::size_t samples = 0;
    std::size_t in_first = 0, in_second = 0, in_both = 0;
    std::optional<Point> witness;
};

/// Samples points around x, around y and across the domain and counts those
/// falling in B(x, r1) and B(y, r).
inline DisjointnessReport check_disjoint(const OMetricSpace& s, const Point& x, double r1, const Point& y, double r,
                                         std::size_t samples = 10000, std::uint64_t seed = 42) {
    DisjointnessReport rep;
    Rng rng(seed);
    double sep = 0.0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) sep += (x[i] - y[i]) * (x[i] - y[i]);
    const double scale = std::max(1e-6, std::sqrt(sep));
    for (std::size_t i = 0; i < samples; ++i) {
        Point z;
        switch (i % 3) {
            case 0: z = sample_near(s.domain, x, scale, rng); break;
            case 1: z = sample_near(s.domain, y, scale, rng); break;
            default: z = s.domain.sample(rng); break;
        }
        ++rep.samples;
        const bool a = ball_contains(s, x, r1, z), b = ball_contains(s, y, r, z);
        rep.in_first += a;
        rep.in_second += b;
        if (a && b) {
            ++rep.in_both;
            if (!rep.witness) rep.witness = z;
        }
    }
    return rep;
}

struct InclusionReport {
    std::size_t centers = 0, members = 0, tested = 0, violations = 0;
    std::optional<std::vector<Point>> witness;  // {x0, x, y}
};

/// For sampled x0, r and x in B(x0, r), the radius s = γ(a + r, u) - a with
/// u = d(x, x0) should give B(x, s) inside B(x0, r). Requires an upward space.
inline InclusionReport check_ball_inclusion(const OMetricSpace& s, const BinOpFn& gamma, std::size_t centers = 100,
                                            std::size_t members = 1000, std::uint64_t seed = 42) {
    InclusionReport rep;
    Rng rng(seed);
    for (std::size_t c = 0; c < centers; ++c) {
        const Point x0 = s.domain.sample(rng);
        const Point x = sample_near(s.domain, x0, 1.0, rng);
        const double u = s.dist(x, x0);
        const double r = (u - s.a) * (1.0 + rng.uniform01()) + 1e-3;
        ++rep.centers;
        const double rad = gamma.raw(s.a + r, u) - s.a;
        if (!(rad > 0)) continue;
        for (std::size_t m = 0; m < members; ++m) {
            const Point y = sample_near(s.domain, x, rad * (m % 2 ? 1.0 : 0.1) + 1e-12, rng);
            ++rep.members;
            if (!ball_contains(s, x, rad, y)) continue;
            ++rep.tested;
            if (!ball_contains(s, x0, r, y)) {
                ++rep.violations;
                if (!rep.witness) rep.witness = std::vector<Point>{x0, x, y};
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Upward regeneration

/// d_xi = a + |d - a| with xi(u,v) the max of o at (u,v) and its reflections
/// through a, and 2a. Reflected arguments outside I_a are skipped.
inline OMetricSpace upward_regenerate(const OMetricSpace& s) {
    const double a = s.a;
    const BinOpFn o = s.o;
    auto dist = s.dist;
    return make_space("upward(" + s.name + ")", s.domain,
                      [dist, a](const Point& x, const Point& y) { return a + std::abs(dist(x, y) - a); },
                      BinOpFn("xi(" + o.source() + ")", Interval::closed(a, kInf),
                              [o, a](double u, double v) {
                                  double m = 2.0 * a;
                                  for (double p : {u, 2.0 * a - u})
                                      for (double q : {v, 2.0 * a - v})
                                          if (auto val = o.try_eval(p, q)) m = std::max(m, *val);
                                  return m;
                              },
                              o.commutative()),
                      a, Interval::closed(a, kInf));
}

}  // namespace ometric

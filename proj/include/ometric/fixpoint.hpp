#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "scalarfn.hpp"

namespace ometric {

/// f(n) = ceil(log2 n), the exponent in the b-metric polygon inequality.
inline int suzuki_f(std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("suzuki_f: n must be >= 1");
    return static_cast<int>(std::bit_width(n - 1));
}

/// g(n) = floor(log2(n+1)) + 1.
inline int suzuki_g(std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("suzuki_g: n must be >= 1");
    return static_cast<int>(std::bit_width(n + 1));
}

/// An arity-indexed family of polygon bounds Δ_n : I^n -> R+.
class DeltaFamily {
public:
    using Eval = std::function<double(std::span<const double>)>;

    DeltaFamily(std::string name, Eval f) : name_(std::move(name)), f_(std::move(f)) {}

    double operator()(std::span<const double> t) const {
        if (t.empty()) throw std::invalid_argument(name_ + ": arity must be >= 1");
        const double y = f_(t);
        if (!std::isfinite(y)) throw DomainError(name_ + ": non-finite value");
        return y;
    }
    double operator()(std::initializer_list<double> t) const {
        return (*this)(std::span<const double>(t.begin(), t.size()));
    }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    Eval f_;
};

enum class FoldStrategy { LeftFold, BalancedBinary };

namespace detail {

inline double balanced(const BinOpFn& o, std::span<const double> t) {
    if (t.size() == 1) return t[0];
    const std::size_t half = (t.size() + 1) / 2;
    return o(balanced(o, t.subspan(0, half)), balanced(o, t.subspan(half)));
}

}  // namespace detail

/// Δ_n by repeated application of o. LeftFold nests to the right,
/// o(t1, o(t2, ... o(t_{n-1}, t_n))); BalancedBinary splits in halves.
/// Throws HypothesisError if o is not sampled non-decreasing.
inline DeltaFamily fold_delta(const BinOpFn& o, FoldStrategy strategy = FoldStrategy::BalancedBinary,
                              std::size_t samples = 1000, std::uint64_t seed = 42) {
    if (auto m = check_binop_monotone(o, samples, seed); !m.ok)
        throw HypothesisError("fold_delta: o is not non-decreasing at (" + format_double(m.witness->u) + ", " +
                              format_double(m.witness->v) + "): " + m.witness->message);
    if (strategy == FoldStrategy::LeftFold)
        return {"fold-left(" + o.source() + ")", [o](std::span<const double> t) {
                    double acc = t.back();
                    for (std::size_t i = t.size() - 1; i-- > 0;) acc = o(t[i], acc);
                    return acc;
                }};
    return {"fold-balanced(" + o.source() + ")", [o](std::span<const double> t) { return detail::balanced(o, t); }};
}

/// Δ_n = s^f(n) * sum.
inline DeltaFamily suzuki_delta(double s) {
    if (!(s >= 1)) throw std::invalid_argument("suzuki_delta: s must be >= 1");
    return {"suzuki(" + format_double(s) + ")", [s](std::span<const double> t) {
                double sum = 0.0;
                for (double x : t) sum += x;
                return std::pow(s, suzuki_f(t.size())) * sum;
            }};
}

/// Smallest l >= 0 with s * k^(2^l) < 1.
inline int suzuki_l(double s, double k) {
    if (!(s >= 1)) throw std::invalid_argument("suzuki_l: s must be >= 1");
    if (!(k > 0 && k < 1)) throw std::invalid_argument("suzuki_l: k must lie in (0, 1)");
    for (int l = 0; l < 64; ++l)
        if (s * std::pow(k, std::ldexp(1.0, l)) < 1.0) return l;
    throw std::invalid_argument("suzuki_l: no l below 64");
}

/// Block-scaled family: s^l * sum when n <= 2^l, otherwise blocks of
/// size 2^l weighted s^(i+l+1) plus the remainder weighted s^mu, mu = n / 2^l.
inline DeltaFamily suzuki_delta_prime(double s, double k) {
    const int l = suzuki_l(s, k);
    const std::size_t block = std::size_t{1} << l;
    return {"suzuki-prime(" + format_double(s) + ", " + format_double(k) + ")",
            [s, l, block](std::span<const double> t) {
                const std::size_t n = t.size();
                if (n <= block) {
                    double sum = 0.0;
                    for (double x : t) sum += x;
                    return std::pow(s, l) * sum;
                }
                const std::size_t mu = n / block;
                double total = 0.0;
                for (std::size_t i = 0; i < mu; ++i) {
                    double part = 0.0;
                    for (std::size_t j = i * block; j < (i + 1) * block; ++j) part += t[j];
                    total += std::pow(s, static_cast<double>(i + l + 1)) * part;
                }
                double rest = 0.0;
                for (std::size_t j = mu * block; j < n; ++j) rest += t[j];
                return total + std::pow(s, static_cast<double>(mu)) * rest;
            }};
}

struct PolygonCheck {
    bool ok = true;
    std::size_t samples = 0;
    std::optional<std::vector<Point>> witness;
    double lhs = 0.0, rhs = 0.0;
};

/// Samples d(x_0, x_n) <= Δ_n(d(x_0,x_1), ..., d(x_{n-1},x_n)).
inline PolygonCheck check_polygon_bound(const OMetricSpace& s, const DeltaFamily& delta, std::size_t n,
                                        std::size_t samples = 1000, std::uint64_t seed = 42,
                                        const Tolerances& tol = {}) {
    PolygonCheck rep;
    Rng rng(seed);
    std::vector<Point> pts(n + 1);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < samples; ++i) {
        for (auto& p : pts) p = s.domain.sample(rng);
        for (std::size_t j = 0; j < n; ++j) t[j] = s.dist(pts[j], pts[j + 1]);
        const double lhs = s.dist(pts.front(), pts.back());
        const double rhs = delta(t);
        ++rep.samples;
        if (!approx_leq(lhs, rhs, tol.ineq)) {
            rep.ok = false;
            rep.witness = pts;
            rep.lhs = lhs;
            rep.rhs = rhs;
            return rep;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Picard iteration

using PointMap = std::function<Point(const Point&)>;

struct FixpointProblem {
    OMetricSpace space;
    PointMap T;
    ScalarFn psi;
    DeltaFamily delta;
    Point x0;
    double tol_fix = 1e-8;
    std::size_t max_iter = 10000;
    std::size_t samples = 2000;
    std::uint64_t seed = 42;
    std::size_t probe_seeds = 5;
    bool force = false;
    Tolerances tol{};
};

struct HypothesisEntry {
    std::string name;
    bool pass = true;
    std::string detail;
    std::vector<double> witness;
};

struct ProbeOutcome {
    std::uint64_t seed;
    Point start;
    bool converged = false;
    Point terminal;
    std::size_t iterations = 0;
    double deviation = 0.0;  // |d(terminal, x*) - a|
};

struct FixpointReport {
    std::vector<Point> iterates;
    std::vector<double> residuals;  // |d(x_n, x_{n+1}) - a|
    std::size_t iterations = 0;     // evaluations of T before the stopping test passed
    bool converged = false;
    bool refused = false;
    std::optional<Point> fixed_point;
    double fixed_point_residual = NAN;
    bool residual_chain_ok = true;
    std::vector<HypothesisEntry> hypotheses;
    std::vector<ProbeOutcome> probes;
    bool unique = false;
    std::string message;
};

namespace detail {

struct Iteration {
    std::vector<Point> iterates;
    std::vector<double> residuals;
    bool converged = false;
};

inline Iteration picard(const FixpointProblem& p, const Point& start) {
    Iteration it;
    it.iterates.push_back(start);
    Point x = start;
    for (std::size_t n = 0; n < p.max_iter; ++n) {
        Point y = p.T(x);
        if (!p.space.domain.contains(y))
            throw DomainError("T maps " + format_point(x) + " outside the domain to " + format_point(y));
        const double r = std::abs(p.space.dist(x, y) - p.space.a);
        it.iterates.push_back(y);
        it.residuals.push_back(r);
        x = std::move(y);
        if (r <= p.tol_fix) {
            it.converged = true;
            break;
        }
    }
    return it;
}

}  // namespace detail

/// Logs the contraction hypotheses by sampling.
inline std::vector<HypothesisEntry> check_fixpoint_hypotheses(const FixpointProblem& p) {
    std::vector<HypothesisEntry> log;
    const auto& s = p.space;
    const double a = s.a;
    const Tolerances& tol = p.tol;

    Rng rng(p.seed);
    double t_dom = a;
    for (std::size_t i = 0; i < p.samples; ++i) {
        const double d = s.dist(s.domain.sample(rng), s.domain.sample(rng));
        if (std::isfinite(d)) t_dom = std::max(t_dom, d);
    }
    // Limits toward a are probed along the trajectory scale.
    double t_traj = s.dist(p.x0, p.T(p.x0));
    if (!(std::abs(t_traj - a) > 0)) t_traj = t_dom;

    {
        HypothesisEntry e{"psi(a) = a"};
        const auto v = p.psi.try_eval(a);
        e.pass = v && approx_equal(*v, a, tol.eq);
        if (!e.pass) e.witness = {a, v.value_or(NAN)};
        log.push_back(e);
    }
    {
        HypothesisEntry e{"psi non-decreasing"};
        const auto rep = check_monotone(p.psi, p.samples, p.seed, Monotonicity::Increasing, std::pair{a, t_dom}, tol.ineq);
        e.pass = rep.ok;
        if (rep.witness) e.witness = {rep.witness->u, rep.witness->v, rep.witness->fu, rep.witness->fv};
        if (!rep.domain_errors.empty()) e.detail = rep.domain_errors.front().second;
        log.push_back(e);
    }
    {
        HypothesisEntry e{"psi continuous at a", true, "sampled proxy: |psi(a + h) - a| at h = 1e-12"};
        const double h = 1e-12 * std::max(1.0, t_traj - a);
        const auto v = p.psi.try_eval(a + h);
        e.pass = v && std::abs(*v - a) <= 10 * slack(tol.eq, *v, a);
        if (!e.pass) e.witness = {a + h, v.value_or(NAN)};
        log.push_back(e);
    }
    {
        HypothesisEntry e{"contraction d(Tx,Ty) <= psi(d(x,y))"};
        Rng r2(p.seed + 1);
        for (std::size_t i = 0; i < p.samples && e.pass; ++i) {
            const Point x = s.domain.sample(r2), y = s.domain.sample(r2);
            const Point tx = p.T(x), ty = p.T(y);
            const double lhs = s.dist(tx, ty);
            const auto rhs = p.psi.try_eval(s.dist(x, y));
            if (!rhs || !approx_leq(lhs, *rhs, tol.ineq)) {
                e.pass = false;
                e.witness = x;
                e.witness.insert(e.witness.end(), y.begin(), y.end());
                e.witness.push_back(lhs);
                e.witness.push_back(rhs.value_or(NAN));
            }
        }
        log.push_back(e);
    }
    {
        HypothesisEntry e{"(iv) psi^n(t) -> a"};
        Rng r3(p.seed + 2);
        const std::size_t probes = std::min<std::size_t>(p.samples, 200);
        for (std::size_t i = 0; i <= probes && e.pass; ++i) {
            const double t0 = i == 0 ? t_dom : r3.uniform(a, t_dom);
            double t = t0;
            bool reached = false;
            for (int n = 0; n < 10000; ++n) {
                if (std::abs(t - a) <= 10 * slack(tol.eq, t, a)) {
                    reached = true;
                    break;
                }
                const auto v = p.psi.try_eval(t);
                if (!v) break;
                t = *v;
            }
            if (!reached) {
                e.pass = false;
                e.witness = {t0, t};
            }
        }
        log.push_back(e);
    }
    {
        HypothesisEntry e{"(v) Delta_i(psi(t), ..., psi^i(t)) -> a", true,
                          "i = 2..8 on t = a + 10^-j (t_max - a), j = 0..12"};
        for (std::size_t i = 2; i <= 8 && e.pass; ++i) {
            double last = NAN;
            for (int j = 0; j <= 12; ++j) {
                const double t = a + std::pow(10.0, -j) * (t_traj - a);
                std::vector<double> args;
                double cur = t;
                bool ok = true;
                for (std::size_t q = 0; q < i && ok; ++q) {
                    const auto v = p.psi.try_eval(cur);
                    ok = v.has_value();
                    if (ok) cur = *v;
                    args.push_back(cur);
                }
                if (!ok) {
                    last = NAN;
                    break;
                }
                try {
                    last = std::abs(p.delta(args) - a);
                } catch (const DomainError&) {
                    last = NAN;
                    break;
                }
            }
            if (!(last <= 10 * tol.eq)) {
                e.pass = false;
                e.witness = {static_cast<double>(i), last};
            }
        }
        log.push_back(e);
    }
    return log;
}

/// Picard iteration with hypothesis log, fixed-point post-check and a
/// restart probe from `probe_seeds` sampled starting points.
inline FixpointReport solve(const FixpointProblem& p) {
    FixpointReport rep;
    if (!p.space.domain.contains(p.x0)) throw std::invalid_argument("solve: x0 outside the domain");
    rep.hypotheses = check_fixpoint_hypotheses(p);
    bool hyp_ok = true;
    for (const auto& h : rep.hypotheses) hyp_ok = hyp_ok && h.pass;
    if (!hyp_ok && !p.force) {
        rep.refused = true;
        rep.message = "hypothesis check failed; iteration refused (use force to override)";
        return rep;
    }

    const double a = p.space.a;
    auto run = detail::picard(p, p.x0);
    rep.iterates = std::move(run.iterates);
    rep.residuals = std::move(run.residuals);
    rep.iterations = rep.residuals.size();

    for (std::size_t n = 0; n + 1 < rep.residuals.size(); ++n) {
        const auto bound = p.psi.try_eval(rep.residuals[n] + a);
        if (!bound || !approx_leq(rep.residuals[n + 1], *bound - a, p.tol.ineq)) {
            rep.residual_chain_ok = false;
            break;
        }
    }

    if (!run.converged) {
        rep.message = "no convergence within " + std::to_string(p.max_iter) + " iterations";
        return rep;
    }
    const Point& xs = rep.iterates.back();
    rep.fixed_point_residual = std::abs(p.space.dist(xs, p.T(xs)) - a);
    rep.converged = rep.fixed_point_residual <= p.tol_fix;
    if (!rep.converged) {
        rep.message = "fixed-point residual " + format_double(rep.fixed_point_residual) + " exceeds tolerance";
        return rep;
    }
    rep.fixed_point = xs;

    rep.unique = true;
    for (std::size_t k = 0; k < p.probe_seeds; ++k) {
        ProbeOutcome po;
        po.seed = p.seed + 100 + k;
        Rng rng(po.seed);
        po.start = p.space.domain.sample(rng);
        auto r = detail::picard(p, po.start);
        po.converged = r.converged;
        po.iterations = r.residuals.size();
        po.terminal = r.iterates.back();
        po.deviation = std::abs(p.space.dist(po.terminal, xs) - a);
        if (!po.converged || !(po.deviation < 10.0 * p.tol_fix)) rep.unique = false;
        rep.probes.push_back(std::move(po));
    }
    if (!hyp_ok) rep.message = "forced iteration despite failed hypotheses";
    return rep;
}

}  // namespace ometric

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "scalarfn.hpp"

namespace ometric {

/// Outcome of one sampled hypothesis.
struct HypothesisCheck {
    std::string name;
    bool ok = true;
    std::size_t samples = 0;
    std::vector<double> witness;
    std::string detail;
};

struct TransformOptions {
    std::size_t samples = 2000;
    std::uint64_t seed = 42;
    Tolerances tol{};
};

struct TransformResult {
    OMetricSpace space;
    std::vector<HypothesisCheck> checks;
    /// Arguments handed to an outer function that fell outside I_a
    /// (only the dual construction produces these).
    std::size_t outside_interval = 0;
    std::string note;
};

namespace detail {

inline std::string witness_text(const std::vector<double>& w) {
    std::string s = "(";
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? ", " : "") + format_double(w[i]);
    return s + ")";
}

[[noreturn]] inline void refuse(const std::string& what, const HypothesisCheck& c) {
    throw HypothesisError(what + ": hypothesis '" + c.name + "' fails at " + witness_text(c.witness) +
                          (c.detail.empty() ? "" : " [" + c.detail + "]"));
}

inline void require_all(const std::string& what, const std::vector<HypothesisCheck>& checks) {
    for (const auto& c : checks)
        if (!c.ok) refuse(what, c);
}

/// Range of distance values worth sampling: the span of observed distances
/// together with a, so that every sampled value lies in I_a.
inline std::pair<double, double> distance_range(const OMetricSpace& s, std::size_t samples, std::uint64_t seed) {
    Rng rng(seed);
    double lo = s.a, hi = s.a;
    for (std::size_t i = 0; i < samples; ++i) {
        const double d = s.dist(s.domain.sample(rng), s.domain.sample(rng));
        if (!std::isfinite(d)) continue;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo, hi};
}

/// Value of f at an interval end, taking limits at infinite ends.
inline double end_value(const ScalarFn& f, double x) {
    const double y = f.raw(x);
    if (!std::isnan(y)) return y;
    // raw(inf) may be NaN for saturating functions such as u/(1+u).
    const double far = f.raw(std::copysign(1e300, x));
    const double mid = f.raw(std::copysign(1e150, x));
    if (std::abs(far - mid) <= 1e-6 * std::max(1.0, std::abs(far))) return far;
    return far > mid ? kInf : -kInf;
}

/// Image of an interval under a monotone function.
inline Interval image(const ScalarFn& f, const Interval& I, bool decreasing) {
    const double flo = end_value(f, I.lo);
    const double fhi = end_value(f, I.hi);
    Interval J;
    if (!decreasing) {
        J.lo = flo;
        J.hi = fhi;
        J.lo_open = I.lo_open || !std::isfinite(I.lo);
        J.hi_open = I.hi_open || !std::isfinite(I.hi);
    } else {
        J.lo = fhi;
        J.hi = flo;
        J.lo_open = I.hi_open || !std::isfinite(I.hi);
        J.hi_open = I.lo_open || !std::isfinite(I.lo);
    }
    if (!std::isfinite(J.lo)) J.lo_open = true;
    if (!std::isfinite(J.hi)) J.hi_open = true;
    return J;
}

inline HypothesisCheck monotone_check(const std::string& name, const ScalarFn& f, Monotonicity dir,
                                      std::pair<double, double> range, const TransformOptions& opt) {
    HypothesisCheck c{name, true, opt.samples, {}, {}};
    const auto rep = check_monotone(f, opt.samples, opt.seed, dir, range, opt.tol.ineq);
    if (!rep.ok) {
        c.ok = false;
        if (rep.witness) c.witness = {rep.witness->u, rep.witness->v, rep.witness->fu, rep.witness->fv};
        else if (!rep.domain_errors.empty()) {
            c.witness = {rep.domain_errors.front().first};
            c.detail = rep.domain_errors.front().second;
        }
    }
    return c;
}

inline HypothesisCheck value_check(const std::string& name, double got, double want, double tol) {
    HypothesisCheck c{name, approx_equal(got, want, tol), 1, {}, {}};
    if (!c.ok) c.witness = {got, want};
    return c;
}

}  // namespace detail

/// Transports a space through θ: dist' = θ∘dist, base b, interval θ(I_a).
/// Requires θ non-decreasing, θ(a) = b and o_b(θu, θv) = θ(o(u,v)).
inline TransformResult pushforward(const OMetricSpace& s, const ScalarFn& theta, const BinOpFn& ob, double b,
                                   const TransformOptions& opt = {}) {
    const auto range = detail::distance_range(s, opt.samples, opt.seed);
    TransformResult res{s, {}, 0, {}};
    res.checks.push_back(detail::monotone_check("theta non-decreasing", theta, Monotonicity::Increasing, range, opt));
    res.checks.push_back(detail::value_check("theta(a) = b", theta(s.a), b, opt.tol.eq));

    const Interval J = detail::image(theta, s.interval, false);
    const BinOpFn obj = ob.with_domain(J);
    HypothesisCheck comm{"commutation", true, opt.samples, {}, {}};
    Rng rng(opt.seed + 1);
    for (std::size_t i = 0; i < opt.samples && comm.ok; ++i) {
        const double u = rng.uniform(range.first, range.second);
        const double v = rng.uniform(range.first, range.second);
        try {
            const double lhs = obj(theta(u), theta(v));
            const double rhs = theta(s.o(u, v));
            if (!approx_equal(lhs, rhs, opt.tol.eq)) comm = {comm.name, false, i + 1, {u, v, lhs, rhs}, {}};
        } catch (const DomainError& e) {
            comm = {comm.name, false, i + 1, {u, v}, e.what()};
        }
    }
    res.checks.push_back(comm);
    detail::require_all("pushforward", res.checks);

    auto dist = s.dist;
    res.space = make_space("pushforward(" + s.name + ", " + theta.source() + ")", s.domain,
                           [dist, theta](const Point& x, const Point& y) { return theta(dist(x, y)); }, obj, b, J);
    if (res.space.direction != s.direction)
        res.note = std::string("direction changed from ") + to_string(s.direction) + " to " +
                   to_string(res.space.direction);
    return res;
}

/// dist' = dist^r, base a^r, o'(u,v) = o(u^(1/r), v^(1/r))^r.
inline OMetricSpace power(const OMetricSpace& s, double r) {
    if (!(r > 0)) throw std::invalid_argument("power: exponent must be > 0");
    const ScalarFn th = catalog::power(r);
    const Interval J = detail::image(th, s.interval, false);
    const BinOpFn o = s.o;
    auto dist = s.dist;
    return make_space("power(" + s.name + ", " + format_double(r) + ")", s.domain,
                      [dist, r](const Point& x, const Point& y) { return std::pow(dist(x, y), r); },
                      BinOpFn("(" + o.source() + ")^" + format_double(r) + " at u^(1/r), v^(1/r)", J,
                              [o, r](double u, double v) {
                                  return std::pow(o(std::pow(u, 1.0 / r), std::pow(v, 1.0 / r)), r);
                              },
                              o.commutative()),
                      std::pow(s.a, r), J);
}

/// Maps an upward space to a metric space through λ: dist' = λ∘dist.
///
/// Checks λ increasing with λ(a) = 0 and the additivity identity
/// λ(o(u,v)) = λ(u) + λ(v). When additivity fails the output is accepted
/// only if it passes a direct sampled check of the metric axioms.
inline TransformResult to_metric(const OMetricSpace& s, const ScalarFn& lambda, const TransformOptions& opt = {}) {
    if (s.direction != Direction::Upward)
        throw HypothesisError("to_metric: space '" + s.name + "' is not upward");
    const auto range = detail::distance_range(s, opt.samples, opt.seed);
    TransformResult res{s, {}, 0, {}};
    res.checks.push_back(detail::monotone_check("lambda increasing", lambda, Monotonicity::Increasing, range, opt));
    res.checks.push_back(detail::value_check("lambda(a) = 0", lambda(s.a), 0.0, opt.tol.eq));
    detail::require_all("to_metric", res.checks);

    HypothesisCheck add{"additivity", true, opt.samples, {}, {}};
    Rng rng(opt.seed + 1);
    for (std::size_t i = 0; i < opt.samples && add.ok; ++i) {
        const double u = rng.uniform(range.first, range.second);
        const double v = rng.uniform(range.first, range.second);
        try {
            const double lhs = lambda(s.o(u, v));
            const double rhs = lambda(u) + lambda(v);
            if (!approx_equal(lhs, rhs, opt.tol.eq)) add = {add.name, false, i + 1, {u, v, lhs, rhs}, {}};
        } catch (const DomainError& e) {
            add = {add.name, false, i + 1, {u, v}, e.what()};
        }
    }
    res.checks.push_back(add);

    auto dist = s.dist;
    res.space = make_space("metric(" + s.name + ", " + lambda.source() + ")", s.domain,
                           [dist, lambda](const Point& x, const Point& y) { return lambda(dist(x, y)); },
                           catalog::add(), 0.0, kNonNegative);
    if (!add.ok) {
        const auto reps = check_axioms(res.space, opt.samples, opt.seed + 2, opt.tol);
        HypothesisCheck direct{"output metric axioms", all_pass(reps), opt.samples, {}, {}};
        for (const auto& r : reps)
            if (!r.pass && r.counterexample) {
                direct.detail = std::string(to_string(r.axiom)) + ": " + r.counterexample->message;
                direct.witness = r.counterexample->values;
                break;
            }
        res.checks.push_back(direct);
        if (!direct.ok) detail::refuse("to_metric", direct);
        res.note = "additivity failed; output verified directly as a metric";
    }
    return res;
}

/// Builds an upward space from a metric space: dist' = θ∘dist with base b.
/// Checks θ(t) = b iff t = 0, θ non-decreasing, θ(t1+t2) <= o(θ(t1), θ(t2)).
inline TransformResult from_metric(const OMetricSpace& metric, const ScalarFn& theta, const BinOpFn& o, double b,
                                   const TransformOptions& opt = {}) {
    if (metric.a != 0.0) throw HypothesisError("from_metric: input base value must be 0");
    const auto range = detail::distance_range(metric, opt.samples, opt.seed);
    TransformResult res{metric, {}, 0, {}};
    const Interval J = Interval::closed(b, kInf);
    const BinOpFn oj = o.with_domain(J);

    HypothesisCheck t1{"theta(t) = b iff t = 0", approx_equal(theta(0.0), b, opt.tol.eq), opt.samples, {}, {}};
    if (!t1.ok) t1.witness = {0.0, theta(0.0)};
    Rng rng(opt.seed + 1);
    for (std::size_t i = 0; i < opt.samples && t1.ok; ++i) {
        const double t = rng.uniform(range.first, range.second);
        if (t > 0 && approx_equal(theta(t), b, opt.tol.eq)) t1 = {t1.name, false, i + 1, {t, theta(t)}, {}};
    }
    res.checks.push_back(t1);
    res.checks.push_back(detail::monotone_check("theta non-decreasing", theta, Monotonicity::Increasing, range, opt));

    HypothesisCheck t3{"theta(t1+t2) <= o(theta(t1), theta(t2))", true, opt.samples, {}, {}};
    for (std::size_t i = 0; i < opt.samples && t3.ok; ++i) {
        const double u = rng.uniform(range.first, range.second);
        const double v = rng.uniform(range.first, range.second);
        try {
            const double lhs = theta(u + v);
            const double rhs = oj(theta(u), theta(v));
            if (!approx_leq(lhs, rhs, opt.tol.ineq)) t3 = {t3.name, false, i + 1, {u, v, lhs, rhs}, {}};
        } catch (const DomainError& e) {
            t3 = {t3.name, false, i + 1, {u, v}, e.what()};
        }
    }
    res.checks.push_back(t3);
    detail::require_all("from_metric", res.checks);

    auto dist = metric.dist;
    res.space = make_space("from_metric(" + metric.name + ", " + theta.source() + ")", metric.domain,
                           [dist, theta](const Point& x, const Point& y) { return theta(dist(x, y)); }, oj, b, J);
    return res;
}

/// Sampled mirror condition: w <= o(u,v) iff φ(w,v) <= u on I_a.
inline HypothesisCheck check_mirror(const OMetricSpace& s, const BinOpFn& phi, std::pair<double, double> range,
                                    const TransformOptions& opt = {}) {
    HypothesisCheck c{"mirror condition", true, opt.samples, {}, {}};
    Rng rng(opt.seed + 3);
    for (std::size_t i = 0; i < opt.samples; ++i) {
        const double u = rng.uniform(range.first, range.second);
        const double v = rng.uniform(range.first, range.second);
        try {
            const double ouv = s.o(u, v);
            // Draw w on both sides of o(u,v) so that each direction is exercised.
            const double w = (i % 2 == 0) ? rng.uniform(range.first, std::max(range.first, std::min(ouv, range.second)))
                                          : rng.uniform(range.first, range.second);
            if (!s.interval.contains(w)) continue;
            const double pw = phi.raw(w, v);
            // Skip pairs within rounding of the boundary on either side.
            if (approx_equal(w, ouv, opt.tol.eq) || approx_equal(pw, u, opt.tol.eq)) continue;
            const bool left = w <= ouv;
            const bool right = pw <= u;
            if (left != right) {
                c = {c.name, false, i + 1, {u, v, w, ouv, pw}, "w <= o(u,v) disagrees with phi(w,v) <= u"};
                return c;
            }
        } catch (const DomainError& e) {
            c = {c.name, false, i + 1, {u, v}, e.what()};
            return c;
        }
    }
    return c;
}

/// Dual construction: dist' = θ∘dist, base θ(a),
/// o'(u,v) = θ(φ(θ⁻¹u, θ⁻¹v)). θ must be decreasing on I_a and φ must
/// satisfy the mirror condition. φ values outside I_a are still passed to θ
/// and counted in the result.
inline TransformResult downward_dual(const OMetricSpace& s, const BinOpFn& phi, const ScalarFn& theta,
                                     const TransformOptions& opt = {}) {
    const auto range = detail::distance_range(s, opt.samples, opt.seed);
    TransformResult res{s, {}, 0, {}};
    res.checks.push_back(check_mirror(s, phi, range, opt));
    res.checks.push_back(detail::monotone_check("theta decreasing", theta, Monotonicity::Decreasing, range, opt));
    detail::require_all("downward_dual", res.checks);

    const Interval I = s.interval;
    const Interval J = detail::image(theta, I, true);
    const ScalarFn th = theta.with_monotonicity(Monotonicity::Decreasing);
    auto inv = [th, I](double y) { return invert(th, y, I); };
    auto outer = [th](double t) {
        const double y = th.raw(t);
        if (!std::isfinite(y)) throw DomainError(th.source() + ": non-finite value at " + format_double(t));
        return y;
    };

    // Count how often φ leaves I_a on the image of the sampled range.
    Rng rng(opt.seed + 4);
    for (std::size_t i = 0; i < opt.samples; ++i) {
        const double p = phi.raw(rng.uniform(range.first, range.second), rng.uniform(range.first, range.second));
        if (!I.contains(p)) ++res.outside_interval;
    }

    auto dist = s.dist;
    res.space = make_space(
        "dual(" + s.name + ", " + theta.source() + ")", s.domain,
        [dist, th](const Point& x, const Point& y) { return th(dist(x, y)); },
        BinOpFn("theta(phi(theta^-1 u, theta^-1 v)), phi=" + phi.source() + ", theta=" + theta.source(), J,
                [phi, inv, outer](double u, double v) { return outer(phi.raw(inv(u), inv(v))); }),
        th(s.a), J);
    if (res.outside_interval > 0)
        res.note = std::to_string(res.outside_interval) + " of " + std::to_string(opt.samples) +
                   " sampled phi values fall outside I_a and were evaluated by theta directly";
    const bool maps_down = approx_equal(res.space.a, s.a, opt.tol.eq) && J.hi <= s.a + slack(opt.tol.eq, J.hi, s.a);
    if (maps_down && (s.direction == Direction::Upward) != (res.space.direction == Direction::Downward))
        res.note += (res.note.empty() ? "" : "; ") + std::string("direction duality not observed");
    return res;
}

struct ReverseTriangleReport {
    bool ok = true;
    std::size_t samples = 0;
    std::optional<Counterexample> counterexample;
};

/// Samples the reverse inequality max(φ(w,v), φ(v,w)) <= d(x,y), where
/// w = d(x,z) and v = d(z,y).
inline ReverseTriangleReport reverse_triangle_check(const OMetricSpace& s, const BinOpFn& phi,
                                                    std::size_t samples = 2000, std::uint64_t seed = 42,
                                                    const Tolerances& tol = {}) {
    ReverseTriangleReport rep;
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const Point x = s.domain.sample(rng), y = s.domain.sample(rng), z = s.domain.sample(rng);
        ++rep.samples;
        const double w = s.dist(x, z), v = s.dist(z, y), dxy = s.dist(x, y);
        const double lhs = std::max(phi.raw(w, v), phi.raw(v, w));
        if (!approx_leq(lhs, dxy, tol.ineq)) {
            rep.ok = false;
            rep.counterexample = Counterexample{{x, y, z}, {lhs, dxy, w, v}, "phi-bar(d(x,z), d(z,y)) > d(x,y)"};
            return rep;
        }
    }
    return rep;
}

/// Cartesian product with o = pointwise max of the factor operations and
/// dist = φ(coordinate distances). All factors must share a and I_a;
/// φ is checked for the identity, monotonicity and distributivity
/// requirements by sampling.
inline TransformResult product(const std::vector<OMetricSpace>& spaces, const NaryFn& phi,
                               const TransformOptions& opt = {}) {
    if (spaces.size() < 2) throw std::invalid_argument("product: need at least two spaces");
    const double a = spaces.front().a;
    const Interval I = spaces.front().interval;
    for (const auto& s : spaces) {
        if (s.a != a) throw std::invalid_argument("product: base values differ (" + format_double(a) + " vs " +
                                                  format_double(s.a) + ")");
        if (s.interval.lo != I.lo || s.interval.hi != I.hi || s.interval.lo_open != I.lo_open ||
            s.interval.hi_open != I.hi_open)
            throw std::invalid_argument("product: intervals differ");
    }
    const std::size_t n = spaces.size();

    std::vector<BinOpFn> ops;
    for (const auto& s : spaces) ops.push_back(s.o);
    const BinOpFn omax("max of factor operations", I,
                       [ops](double u, double v) {
                           double m = -kInf;
                           for (const auto& o : ops) m = std::max(m, o(u, v));
                           return m;
                       },
                       true);

    double lo = a, hi = a;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = detail::distance_range(spaces[i], opt.samples, opt.seed + i);
        lo = std::min(lo, r.first);
        hi = std::max(hi, r.second);
    }

    TransformResult res{spaces.front(), {}, 0, {}};
    Rng rng(opt.seed + 7);
    auto draw = [&](std::vector<double>& out) {
        for (auto& t : out) t = rng.uniform(lo, hi);
    };
    std::vector<double> u(n), v(n), w(n);

    HypothesisCheck ident{"phi = a iff all arguments = a", true, opt.samples, {}, {}};
    std::vector<double> base(n, a);
    if (!approx_equal(phi(base), a, opt.tol.eq)) ident = {ident.name, false, 1, base, "phi(a,...,a) != a"};
    for (std::size_t i = 0; i < opt.samples && ident.ok; ++i) {
        draw(u);
        // Pin all but one coordinate at a half of the time to probe the boundary.
        if (i % 2 == 0)
            for (std::size_t j = 0; j < n; ++j)
                if (j != i % n) u[j] = a;
        bool all_a = true;
        for (double t : u) all_a = all_a && t == a;
        if (!all_a && approx_equal(phi(u), a, opt.tol.eq)) ident = {ident.name, false, i + 1, u, {}};
    }
    res.checks.push_back(ident);

    HypothesisCheck mono{"phi non-decreasing", true, opt.samples, {}, {}};
    for (std::size_t i = 0; i < opt.samples && mono.ok; ++i) {
        draw(u);
        const std::size_t j = i % n;
        w = u;
        w[j] = rng.uniform(u[j], hi);
        if (!approx_leq(phi(u), phi(w), opt.tol.ineq)) {
            mono = {mono.name, false, i + 1, u, "increase in argument " + std::to_string(j + 1)};
            mono.witness.insert(mono.witness.end(), w.begin(), w.end());
        }
    }
    res.checks.push_back(mono);

    HypothesisCheck distrib{"phi(o(u1,v1),...) <= o(phi(u), phi(v))", true, opt.samples, {}, {}};
    for (std::size_t i = 0; i < opt.samples && distrib.ok; ++i) {
        draw(u);
        draw(v);
        try {
            for (std::size_t j = 0; j < n; ++j) w[j] = omax(u[j], v[j]);
            const double lhs = phi(w);
            const double rhs = omax(phi(u), phi(v));
            if (!approx_leq(lhs, rhs, opt.tol.ineq)) {
                distrib = {distrib.name, false, i + 1, u, {}};
                distrib.witness.insert(distrib.witness.end(), v.begin(), v.end());
            }
        } catch (const DomainError& e) {
            distrib = {distrib.name, false, i + 1, u, e.what()};
        }
    }
    res.checks.push_back(distrib);
    detail::require_all("product", res.checks);

    std::vector<Domain> domains;
    std::vector<std::size_t> dims;
    std::vector<DistFn> dists;
    std::string name = "product(";
    for (std::size_t i = 0; i < n; ++i) {
        domains.push_back(spaces[i].domain);
        dims.push_back(spaces[i].domain.dimension());
        dists.push_back(spaces[i].dist);
        name += (i ? ", " : "") + spaces[i].name;
    }
    res.space = make_space(name + "; " + phi.source() + ")", Domain::product(domains),
                           [dims, dists, phi](const Point& x, const Point& y) {
                               std::vector<double> t(dims.size());
                               std::size_t off = 0;
                               for (std::size_t i = 0; i < dims.size(); ++i) {
                                   const Point xi(x.begin() + off, x.begin() + off + dims[i]);
                                   const Point yi(y.begin() + off, y.begin() + off + dims[i]);
                                   t[i] = dists[i](xi, yi);
                                   off += dims[i];
                               }
                               return phi(t);
                           },
                           omax, a, I);
    return res;
}

}  // namespace ometric

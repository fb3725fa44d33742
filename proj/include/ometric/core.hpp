#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "scalarfn.hpp"

namespace ometric {

/// Where the points of a space live, and how to draw them.
struct Domain {
    enum class Kind { Box, Finite, Product };

    Kind kind = Kind::Box;
    // Box: per-coordinate sampling bounds and membership intervals.
    std::vector<double> lo{-10.0}, hi{10.0};
    std::vector<Interval> support{Interval::all()};
    // Finite: the point list.
    std::vector<Point> points;
    // Product: component domains, coordinates concatenated in order.
    std::vector<Domain> factors;

    static Domain line(double lo = -10.0, double hi = 10.0) { return box(1, lo, hi); }

    static Domain box(std::size_t dim, double lo = -10.0, double hi = 10.0) {
        Domain d;
        d.kind = Kind::Box;
        d.lo.assign(dim, lo);
        d.hi.assign(dim, hi);
        d.support.assign(dim, Interval::all());
        return d;
    }
    /// A closed real interval [lo, hi] that is also the sampling range.
    static Domain segment(double lo, double hi) {
        Domain d = line(lo, hi);
        d.support[0] = Interval::closed(lo, hi);
        return d;
    }
    static Domain finite(std::vector<Point> pts) {
        if (pts.empty()) throw std::invalid_argument("finite domain needs at least one point");
        Domain d;
        d.kind = Kind::Finite;
        d.points = std::move(pts);
        d.lo.clear();
        d.hi.clear();
        d.support.clear();
        return d;
    }
    static Domain product(std::vector<Domain> parts) {
        Domain d;
        d.kind = Kind::Product;
        d.factors = std::move(parts);
        d.lo.clear();
        d.hi.clear();
        d.support.clear();
        return d;
    }

    std::size_t dimension() const {
        switch (kind) {
            case Kind::Box: return lo.size();
            case Kind::Finite: return points.front().size();
            case Kind::Product: {
                std::size_t n = 0;
                for (const auto& f : factors) n += f.dimension();
                return n;
            }
        }
        return 0;
    }

    bool contains(const Point& p) const {
        if (p.size() != dimension()) return false;
        switch (kind) {
            case Kind::Box:
                for (std::size_t i = 0; i < p.size(); ++i)
                    if (!support[i].contains(p[i])) return false;
                return true;
            case Kind::Finite:
                for (const auto& q : points)
                    if (q == p) return true;
                return false;
            case Kind::Product: {
                std::size_t off = 0;
                for (const auto& f : factors) {
                    const std::size_t n = f.dimension();
                    if (!f.contains(Point(p.begin() + off, p.begin() + off + n))) return false;
                    off += n;
                }
                return true;
            }
        }
        return false;
    }

    Point sample(Rng& rng) const {
        switch (kind) {
            case Kind::Box: {
                Point p(lo.size());
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(lo[i], hi[i]);
                return p;
            }
            case Kind::Finite: return points[rng.index(points.size())];
            case Kind::Product: {
                Point p;
                for (const auto& f : factors) {
                    const Point q = f.sample(rng);
                    p.insert(p.end(), q.begin(), q.end());
                }
                return p;
            }
        }
        return {};
    }

    /// All points when the domain is finite (including finite products).
    std::optional<std::vector<Point>> enumerate() const {
        if (kind == Kind::Finite) return points;
        if (kind == Kind::Box) return std::nullopt;
        std::vector<Point> acc{Point{}};
        for (const auto& f : factors) {
            auto part = f.enumerate();
            if (!part) return std::nullopt;
            std::vector<Point> next;
            for (const auto& a : acc)
                for (const auto& b : *part) {
                    Point c = a;
                    c.insert(c.end(), b.begin(), b.end());
                    next.push_back(std::move(c));
                }
            acc = std::move(next);
        }
        return acc;
    }
};

using DistFn = std::function<double(const Point&, const Point&)>;

enum class Direction { Upward, Downward, Neither };

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::Upward: return "upward";
        case Direction::Downward: return "downward";
        case Direction::Neither: return "neither";
    }
    return "?";
}

/// Upward iff I is inside [a, inf), Downward iff I is inside [0, a].
inline Direction classify(const Interval& interval, double a) {
    if (interval.lo >= a) return Direction::Upward;
    if (interval.hi <= a && interval.lo >= 0.0) return Direction::Downward;
    return Direction::Neither;
}

/// An O-metric space (X, d, o, a) with the interval I_a it maps into.
struct OMetricSpace {
    std::string name;
    Domain domain;
    DistFn dist;
    BinOpFn o;
    double a = 0.0;
    Interval interval;
    Direction direction = Direction::Upward;
};

inline Direction classify(const OMetricSpace& s) { return classify(s.interval, s.a); }

/// Assembles a space, binding o to I_a and deriving the direction.
inline OMetricSpace make_space(std::string name, Domain domain, DistFn dist, BinOpFn o, double a,
                               Interval interval) {
    if (!interval.contains(a))
        throw std::invalid_argument(name + ": base value " + format_double(a) + " not in interval");
    OMetricSpace s{std::move(name), std::move(domain), std::move(dist), o.with_domain(interval),
                   a, interval, Direction::Upward};
    s.direction = classify(s);
    return s;
}

// ---------------------------------------------------------------------------
// Axiom checks

enum class Axiom { Identity, Symmetry, TriangleO };

inline const char* to_string(Axiom a) {
    switch (a) {
        case Axiom::Identity: return "identity";
        case Axiom::Symmetry: return "symmetry";
        case Axiom::TriangleO: return "triangle-o";
    }
    return "?";
}

inline std::optional<Axiom> axiom_from_string(std::string_view s) {
    if (s == "identity") return Axiom::Identity;
    if (s == "symmetry") return Axiom::Symmetry;
    if (s == "triangle-o") return Axiom::TriangleO;
    return std::nullopt;
}

struct Counterexample {
    std::vector<Point> points;
    /// identity: {d(x,y), a}; symmetry: {d(x,y), d(y,x)};
    /// triangle-o: {d(x,z), o(d(x,y), d(y,z)), d(x,y), d(y,z)}.
    std::vector<double> values;
    std::string message;
};

struct AxiomReport {
    Axiom axiom;
    bool pass = true;
    std::optional<Counterexample> counterexample;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    bool exhaustive = false;
};

namespace detail {

inline std::optional<Counterexample> identity_violation(const OMetricSpace& s, const Point& x,
                                                        const Point& y, const Tolerances& tol) {
    const double d = s.dist(x, y);
    if (!std::isfinite(d)) return Counterexample{{x, y}, {d, s.a}, "non-finite distance"};
    const bool same = x == y;
    const bool at_base = approx_equal(d, s.a, tol.eq);
    if (same && !at_base) return Counterexample{{x, y}, {d, s.a}, "d(x,x) != a"};
    if (!same && at_base) return Counterexample{{x, y}, {d, s.a}, "d(x,y) = a for distinct points"};
    return std::nullopt;
}

inline std::optional<Counterexample> symmetry_violation(const OMetricSpace& s, const Point& x,
                                                        const Point& y, const Tolerances& tol) {
    const double dxy = s.dist(x, y);
    const double dyx = s.dist(y, x);
    if (!std::isfinite(dxy) || !std::isfinite(dyx))
        return Counterexample{{x, y}, {dxy, dyx}, "non-finite distance"};
    if (!approx_equal(dxy, dyx, tol.eq)) return Counterexample{{x, y}, {dxy, dyx}, "d(x,y) != d(y,x)"};
    return std::nullopt;
}

inline std::optional<Counterexample> triangle_violation(const OMetricSpace& s, const Point& x,
                                                        const Point& y, const Point& z,
                                                        const Tolerances& tol) {
    const double dxz = s.dist(x, z);
    const double dxy = s.dist(x, y);
    const double dyz = s.dist(y, z);
    double rhs;
    try {
        rhs = s.o(dxy, dyz);
    } catch (const DomainError& e) {
        return Counterexample{{x, y, z}, {dxz, NAN, dxy, dyz}, e.what()};
    }
    if (!std::isfinite(dxz)) return Counterexample{{x, y, z}, {dxz, rhs, dxy, dyz}, "non-finite distance"};
    if (!approx_leq(dxz, rhs, tol.ineq))
        return Counterexample{{x, y, z}, {dxz, rhs, dxy, dyz}, "d(x,z) > o(d(x,y), d(y,z))"};
    return std::nullopt;
}

}  // namespace detail

/// Re-evaluates one axiom on the given points; true when the violation
/// reproduces.
inline bool verify_witness(const OMetricSpace& s, Axiom axiom, const std::vector<Point>& pts,
                           const Tolerances& tol = {}) {
    switch (axiom) {
        case Axiom::Identity:
            if (pts.size() < 2) throw std::invalid_argument("identity witness needs two points");
            return detail::identity_violation(s, pts[0], pts[1], tol).has_value();
        case Axiom::Symmetry:
            if (pts.size() < 2) throw std::invalid_argument("symmetry witness needs two points");
            return detail::symmetry_violation(s, pts[0], pts[1], tol).has_value();
        case Axiom::TriangleO:
            if (pts.size() < 3) throw std::invalid_argument("triangle witness needs three points");
            return detail::triangle_violation(s, pts[0], pts[1], pts[2], tol).has_value();
    }
    return false;
}

inline constexpr std::size_t kExhaustiveTripleLimit = 1'000'000;

/// Checks identity, symmetry and the triangle o-inequality. Finite domains
/// with |X|^3 <= 10^6 are enumerated; everything else is sampled with
/// independent streams derived from `seed`.
inline std::vector<AxiomReport> check_axioms(const OMetricSpace& s, std::size_t samples = 10000,
                                             std::uint64_t seed = 42, const Tolerances& tol = {}) {
    if (samples < 1) throw std::invalid_argument("check_axioms: samples must be >= 1");
    std::vector<AxiomReport> out;
    for (Axiom ax : {Axiom::Identity, Axiom::Symmetry, Axiom::TriangleO})
        out.push_back(AxiomReport{ax, true, std::nullopt, 0, seed, false});

    auto guard = [](AxiomReport& rep, std::vector<Point> pts, auto&& fn) {
        try {
            if (auto cx = fn()) {
                rep.pass = false;
                rep.counterexample = std::move(cx);
            }
        } catch (const DomainError& e) {
            rep.pass = false;
            rep.counterexample = Counterexample{std::move(pts), {}, e.what()};
        }
    };

    const auto all = s.domain.enumerate();
    const bool exhaustive = all && all->size() * all->size() * all->size() <= kExhaustiveTripleLimit;
    if (exhaustive) {
        const auto& X = *all;
        for (auto& rep : out) rep.exhaustive = true;
        for (const auto& x : X)
            for (const auto& y : X) {
                if (out[0].pass) {
                    ++out[0].samples;
                    guard(out[0], {x, y}, [&] { return detail::identity_violation(s, x, y, tol); });
                }
                if (out[1].pass) {
                    ++out[1].samples;
                    guard(out[1], {x, y}, [&] { return detail::symmetry_violation(s, x, y, tol); });
                }
                if (!out[2].pass) continue;
                for (const auto& z : X) {
                    ++out[2].samples;
                    guard(out[2], {x, y, z}, [&] { return detail::triangle_violation(s, x, y, z, tol); });
                    if (!out[2].pass) break;
                }
            }
        return out;
    }

    {
        Rng rng(seed);
        auto& rep = out[0];
        for (std::size_t i = 0; i < samples && rep.pass; ++i) {
            const Point x = s.domain.sample(rng);
            Point y = s.domain.sample(rng);
            ++rep.samples;
            guard(rep, {x, x}, [&] { return detail::identity_violation(s, x, x, tol); });
            if (rep.pass && x != y)
                guard(rep, {x, y}, [&] { return detail::identity_violation(s, x, y, tol); });
        }
    }
    {
        Rng rng(seed + 1);
        auto& rep = out[1];
        for (std::size_t i = 0; i < samples && rep.pass; ++i) {
            const Point x = s.domain.sample(rng);
            const Point y = s.domain.sample(rng);
            ++rep.samples;
            guard(rep, {x, y}, [&] { return detail::symmetry_violation(s, x, y, tol); });
        }
    }
    {
        Rng rng(seed + 2);
        auto& rep = out[2];
        for (std::size_t i = 0; i < samples && rep.pass; ++i) {
            const Point x = s.domain.sample(rng);
            const Point y = s.domain.sample(rng);
            const Point z = s.domain.sample(rng);
            ++rep.samples;
            guard(rep, {x, y, z}, [&] { return detail::triangle_violation(s, x, y, z, tol); });
        }
    }
    return out;
}

inline bool all_pass(const std::vector<AxiomReport>& reps) {
    for (const auto& r : reps)
        if (!r.pass) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Builtin spaces

using Params = std::map<std::string, std::string>;

namespace detail {

inline double euclid(const Point& x, const Point& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

inline double param_num(const Params& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw std::invalid_argument("parameter '" + key + "' is not a number: " + it->second);
    return v;
}

inline void reject_unknown(const Params& p, std::initializer_list<const char*> known, const std::string& name) {
    for (const auto& [k, _] : p) {
        bool ok = false;
        for (const char* q : known) ok = ok || k == q;
        if (!ok) throw std::invalid_argument(name + ": unknown parameter '" + k + "'");
    }
}

}  // namespace detail

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names{
        "euclidean-metric", "b-metric-power", "multiplicative-exp", "b-multiplicative",
        "ultrametric-max",  "p-metric",       "log-metric",         "exp-downward",
        "piecewise-mixed",  "nonunique-limit", "circle-area"};
    return names;
}

/// Constructs one of the named example spaces.
///
/// Parameters: euclidean-metric {dim}; b-metric-power {p, s}; b-multiplicative {s};
/// p-metric {omega}. Every other builtin takes none.
inline OMetricSpace builtin(const std::string& name, const Params& params = {}) {
    using detail::param_num;
    const Interval up0 = Interval::closed(0.0, kInf);
    const Interval up1 = Interval::closed(1.0, kInf);

    if (name == "euclidean-metric") {
        detail::reject_unknown(params, {"dim"}, name);
        const double dim = param_num(params, "dim", 1);
        if (dim < 1 || dim != std::floor(dim)) throw std::invalid_argument(name + ": dim must be a positive integer");
        return make_space(name, Domain::box(static_cast<std::size_t>(dim)), detail::euclid, catalog::add(), 0.0, up0);
    }
    if (name == "b-metric-power") {
        detail::reject_unknown(params, {"p", "s"}, name);
        const double p = param_num(params, "p", 2.0);
        if (!(p > 0)) throw std::invalid_argument(name + ": power p must be > 0");
        const double s = param_num(params, "s", p >= 1 ? std::pow(2.0, p - 1) : 1.0);
        if (!(s >= 1)) throw std::invalid_argument(name + ": b-metric constant s must be >= 1");
        return make_space(name, Domain::line(),
                          [p](const Point& x, const Point& y) { return std::pow(std::abs(x[0] - y[0]), p); },
                          catalog::scaled_add(s), 0.0, up0);
    }
    if (name == "multiplicative-exp") {
        detail::reject_unknown(params, {}, name);
        return make_space(name, Domain::line(),
                          [](const Point& x, const Point& y) { return std::exp(std::abs(x[0] - y[0])); },
                          catalog::mul(), 1.0, up1);
    }
    if (name == "b-multiplicative") {
        detail::reject_unknown(params, {"s"}, name);
        const double s = param_num(params, "s", 2.0);
        if (!(s >= 1)) throw std::invalid_argument(name + ": b-metric constant s must be >= 1");
        // ln d = |x-y|^q is a b-metric with optimal constant 2^(q-1) = s.
        const double q = 1.0 + std::log2(s);
        return make_space(name, Domain::segment(-1.0, 1.0),
                          [q](const Point& x, const Point& y) { return std::exp(std::pow(std::abs(x[0] - y[0]), q)); },
                          BinOpFn("(u*v)^" + format_double(s), up1,
                                  [s](double u, double v) { return std::pow(u * v, s); }, true),
                          1.0, up1);
    }
    if (name == "ultrametric-max") {
        detail::reject_unknown(params, {}, name);
        return make_space(name, Domain::line(),
                          [](const Point& x, const Point& y) {
                              return x == y ? 0.0 : std::max(std::abs(x[0]), std::abs(y[0]));
                          },
                          catalog::max(), 0.0, up0);
    }
    if (name == "p-metric") {
        detail::reject_unknown(params, {"omega"}, name);
        auto it = params.find("omega");
        const ScalarFn omega = parse_scalar(it == params.end() ? "u+u^2/4" : it->second);
        const auto mono = check_monotone(omega, 1000, 42, Monotonicity::Increasing, std::pair{0.0, 100.0});
        if (!mono.ok) throw std::invalid_argument(name + ": omega must be increasing");
        Rng rng(42);
        for (int i = 0; i < 1000; ++i) {
            const double t = rng.uniform(0.0, 100.0);
            if (omega(t) < t) throw std::invalid_argument(name + ": omega must satisfy t <= omega(t)");
        }
        return make_space(name, Domain::line(),
                          [](const Point& x, const Point& y) { return std::expm1(std::abs(x[0] - y[0])); },
                          BinOpFn("Omega(u+v), Omega=" + omega.source(), up0,
                                  [omega](double u, double v) { return omega(u + v); }, true),
                          0.0, up0);
    }
    if (name == "log-metric") {
        detail::reject_unknown(params, {}, name);
        return make_space(name, Domain::line(),
                          [](const Point& x, const Point& y) { return std::log1p(std::abs(x[0] - y[0])); },
                          BinOpFn("(u+1)*(v+1)", up0, [](double u, double v) { return (u + 1) * (v + 1); }, true),
                          0.0, up0);
    }
    if (name == "exp-downward") {
        detail::reject_unknown(params, {}, name);
        return make_space(name, Domain::line(),
                          [](const Point& x, const Point& y) { return std::exp(-std::abs(x[0] - y[0])); },
                          BinOpFn("u/v", Interval::left_open(0.0, 1.0), [](double u, double v) { return u / v; }),
                          1.0, Interval::left_open(0.0, 1.0));
    }
    if (name == "piecewise-mixed") {
        detail::reject_unknown(params, {}, name);
        auto op = [](double u, double v) {
            if (u <= 1 && v <= 1) return std::max(u / v, -std::log(u * v));
            if (u <= 1 && v > 1) return std::max(u * std::exp(v), -std::log(u) + v);
            if (v <= 1 && u > 1) return std::max(std::exp(-u) / v, u - std::log(v));
            return std::max(std::exp(-u + v), u + v);
        };
        return make_space(name, Domain::line(),
                          [](const Point& x, const Point& y) {
                              const double t = std::abs(x[0] - y[0]);
                              return t <= 1 ? std::exp(-t) : t;
                          },
                          BinOpFn("piecewise", Interval::left_open(0.0, kInf), op), 1.0,
                          Interval::left_open(0.0, kInf));
    }
    if (name == "nonunique-limit") {
        detail::reject_unknown(params, {}, name);
        return make_space(name, Domain::segment(-1.0, 1.0),
                          [](const Point& x, const Point& y) { return x == y ? 1.0 : std::abs(x[0] * y[0]); },
                          BinOpFn("1/(u*v), or 1 when u=0 or v=0", Interval::closed(0.0, 1.0),
                                  [](double u, double v) { return (u != 0 && v != 0) ? 1.0 / (u * v) : 1.0; }, true),
                          1.0, Interval::closed(0.0, 1.0));
    }
    if (name == "circle-area") {
        detail::reject_unknown(params, {}, name);
        const double q = std::acos(-1.0) / 4.0;
        return make_space(name, Domain::box(2),
                          [q](const Point& x, const Point& y) {
                              const double r = detail::euclid(x, y);
                              return q * r * r;
                          },
                          catalog::sqrt_sum_square(), 0.0, up0);
    }
    throw std::invalid_argument("unknown builtin space '" + name + "'");
}

// ---------------------------------------------------------------------------
// The generic construction on the real line from a suitable o.

struct GenlCheck {
    bool ok = true;
    std::string failed;
    std::vector<double> witness;
};

/// Samples the four requirements on o over [a, a + span]: non-decreasing in
/// each variable, o(a,a) = a, u <= o(u,a), symmetry.
inline GenlCheck check_genl_requirements(const BinOpFn& o, double a, std::size_t samples = 2000,
                                         std::uint64_t seed = 42, const Tolerances& tol = {}) {
    const std::pair range{a, a + 100.0};
    const BinOpFn ob = o.with_domain(Interval::closed(a, kInf));
    if (auto m = check_binop_monotone(ob, samples, seed, range, tol.ineq); !m.ok)
        return {false, "o increasing in each variable", {m.witness->u, m.witness->v}};
    if (const double oaa = ob(a, a); !approx_equal(oaa, a, tol.eq)) return {false, "o(a,a) = a", {a, oaa}};
    Rng rng(seed + 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = rng.uniform(range.first, range.second);
        if (const double oua = ob(u, a); !approx_leq(u, oua, tol.ineq)) return {false, "u <= o(u,a)", {u, oua}};
    }
    if (auto c = check_commutative(ob, samples, seed + 2, range, tol.eq); !c.ok)
        return {false, "o symmetric", {c.witness->u, c.witness->v}};
    return {};
}

/// On the reals: d(x,y) = a if x = y, else o(f(x), f(y)) with f(u) = a + |u - a|.
/// Throws HypothesisError when the sampled requirements on o fail.
inline OMetricSpace genl_space(const BinOpFn& o, double a, std::size_t samples = 2000,
                               std::uint64_t seed = 42, const Tolerances& tol = {}) {
    if (!(a >= 0)) throw std::invalid_argument("genl_space: base value must be >= 0");
    if (auto chk = check_genl_requirements(o, a, samples, seed, tol); !chk.ok) {
        std::string w;
        for (double x : chk.witness) w += (w.empty() ? "" : ", ") + format_double(x);
        throw HypothesisError("genl_space: requirement '" + chk.failed + "' fails at (" + w + ")");
    }
    const BinOpFn ob = o.with_domain(Interval::closed(a, kInf));
    return make_space("genl(" + o.source() + ")", Domain::line(),
                      [ob, a](const Point& x, const Point& y) {
                          if (x == y) return a;
                          return ob(a + std::abs(x[0] - a), a + std::abs(y[0] - a));
                      },
                      ob, a, Interval::closed(a, kInf));
}

}  // namespace ometric

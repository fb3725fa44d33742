#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "common.hpp"
#include "expr.hpp"

namespace ometric {

enum class Monotonicity { Unknown, Increasing, Decreasing, NonMonotone };

/// A unary real function with a declared domain. Evaluation outside the
/// domain, or evaluation producing NaN/infinity, raises DomainError.
class ScalarFn {
public:
    using Eval = std::function<double(double)>;

    ScalarFn(std::string source, Interval domain, Eval f,
             Monotonicity mono = Monotonicity::Unknown, Eval inverse = {})
        : source_(std::move(source)), domain_(domain), f_(std::move(f)),
          mono_(mono), inverse_(std::move(inverse)) {}

    double operator()(double u) const {
        if (!domain_.contains(u))
            throw DomainError(source_ + ": argument " + format_double(u) + " outside domain");
        const double y = f_(u);
        if (!std::isfinite(y))
            throw DomainError(source_ + ": non-finite value at " + format_double(u));
        return y;
    }

    std::optional<double> try_eval(double u) const noexcept {
        if (!domain_.contains(u)) return std::nullopt;
        const double y = f_(u);
        if (!std::isfinite(y)) return std::nullopt;
        return y;
    }

    /// Evaluation without the domain check (result may be non-finite).
    double raw(double u) const { return f_(u); }

    const std::string& source() const { return source_; }
    const Interval& domain() const { return domain_; }
    Monotonicity monotonicity() const { return mono_; }
    bool has_analytic_inverse() const { return static_cast<bool>(inverse_); }
    double analytic_inverse(double y) const { return inverse_(y); }

    ScalarFn with_domain(Interval d) const {
        ScalarFn c = *this;
        c.domain_ = d;
        return c;
    }
    ScalarFn with_monotonicity(Monotonicity m) const {
        ScalarFn c = *this;
        c.mono_ = m;
        return c;
    }

private:
    std::string source_;
    Interval domain_;
    Eval f_;
    Monotonicity mono_;
    Eval inverse_;
};

/// A binary operation on I x I (both arguments share one interval).
class BinOpFn {
public:
    using Eval = std::function<double(double, double)>;

    BinOpFn(std::string source, Interval domain, Eval f, bool commutative = false)
        : source_(std::move(source)), domain_(domain), f_(std::move(f)),
          commutative_(commutative) {}

    double operator()(double u, double v) const {
        if (!domain_.contains(u) || !domain_.contains(v))
            throw DomainError(source_ + ": argument (" + format_double(u) + ", " +
                              format_double(v) + ") outside domain");
        const double y = f_(u, v);
        if (!std::isfinite(y))
            throw DomainError(source_ + ": non-finite value at (" + format_double(u) + ", " +
                              format_double(v) + ")");
        return y;
    }

    std::optional<double> try_eval(double u, double v) const noexcept {
        if (!domain_.contains(u) || !domain_.contains(v)) return std::nullopt;
        const double y = f_(u, v);
        if (!std::isfinite(y)) return std::nullopt;
        return y;
    }

    double raw(double u, double v) const { return f_(u, v); }

    const std::string& source() const { return source_; }
    const Interval& domain() const { return domain_; }
    bool commutative() const { return commutative_; }

    BinOpFn with_domain(Interval d) const {
        BinOpFn c = *this;
        c.domain_ = d;
        return c;
    }
    BinOpFn with_commutative(bool flag) const {
        BinOpFn c = *this;
        c.commutative_ = flag;
        return c;
    }

private:
    std::string source_;
    Interval domain_;
    Eval f_;
    bool commutative_;
};

/// An n-ary combiner (product distances, polygon bounds).
class NaryFn {
public:
    using Eval = std::function<double(std::span<const double>)>;

    NaryFn(std::string source, Eval f) : source_(std::move(source)), f_(std::move(f)) {}

    double operator()(std::span<const double> args) const {
        const double y = f_(args);
        if (!std::isfinite(y)) throw DomainError(source_ + ": non-finite value");
        return y;
    }
    const std::string& source() const { return source_; }

    static NaryFn max() {
        return {"max", [](std::span<const double> a) { return *std::max_element(a.begin(), a.end()); }};
    }
    static NaryFn sum() {
        return {"sum", [](std::span<const double> a) {
                    double s = 0.0;
                    for (double x : a) s += x;
                    return s;
                }};
    }
    /// Lifts a binary operation to n arguments by left-to-right folding.
    static NaryFn fold(const BinOpFn& o) {
        return {o.source(), [o](std::span<const double> a) {
                    double acc = a[0];
                    for (std::size_t i = 1; i < a.size(); ++i) acc = o.raw(acc, a[i]);
                    return acc;
                }};
    }

private:
    std::string source_;
    Eval f_;
};

inline const Interval kNonNegative = Interval::closed(0.0, kInf);

// ---------------------------------------------------------------------------
// Parsing

inline ScalarFn parse_scalar(std::string_view text, Interval domain = kNonNegative) {
    Expr e = Expr::parse(text, {"u", "v"});
    if (e.uses(1)) throw ParseError("arity mismatch: unary function uses 'v'", text.find('v'));
    return ScalarFn(std::string(text), domain, [e](double u) { return e(u); });
}

inline BinOpFn parse_binop(std::string_view text, Interval domain = kNonNegative) {
    Expr e = Expr::parse(text, {"u", "v"});
    return BinOpFn(std::string(text), domain, [e](double u, double v) { return e(u, v); });
}

/// Arity is decided by the free variables: 'v' present means binary.
inline std::variant<ScalarFn, BinOpFn> parse_expr(std::string_view text) {
    Expr e = Expr::parse(text, {"u", "v"});
    if (e.uses(1))
        return BinOpFn(std::string(text), kNonNegative, [e](double u, double v) { return e(u, v); });
    return ScalarFn(std::string(text), kNonNegative, [e](double u) { return e(u); });
}

// ---------------------------------------------------------------------------
// Catalog. Entries with a closed-form inverse let invert() skip bisection.

namespace catalog {

inline ScalarFn identity() {
    return {"identity", Interval::all(), [](double u) { return u; }, Monotonicity::Increasing,
            [](double y) { return y; }};
}
inline ScalarFn ln1p() {
    return {"ln(1+u)", kNonNegative, [](double u) { return std::log1p(u); },
            Monotonicity::Increasing, [](double y) { return std::expm1(y); }};
}
inline ScalarFn expm1() {
    return {"exp(u)-1", kNonNegative, [](double u) { return std::expm1(u); },
            Monotonicity::Increasing, [](double y) { return std::log1p(y); }};
}
inline ScalarFn exp() {
    return {"exp(u)", Interval::all(), [](double u) { return std::exp(u); },
            Monotonicity::Increasing, [](double y) { return std::log(y); }};
}
inline ScalarFn ln() {
    return {"ln(u)", Interval::left_open(0.0, kInf), [](double u) { return std::log(u); },
            Monotonicity::Increasing, [](double y) { return std::exp(y); }};
}
inline ScalarFn power(double r) {
    return {"u^" + format_double(r), kNonNegative, [r](double u) { return std::pow(u, r); },
            r > 0 ? Monotonicity::Increasing : Monotonicity::Unknown,
            [r](double y) { return std::pow(y, 1.0 / r); }};
}
inline ScalarFn scale(double s) {
    return {format_double(s) + "*u", Interval::all(), [s](double u) { return s * u; },
            s > 0 ? Monotonicity::Increasing : (s < 0 ? Monotonicity::Decreasing : Monotonicity::Unknown),
            [s](double y) { return y / s; }};
}
inline ScalarFn neg_exp() {
    return {"exp(-u)", Interval::all(), [](double u) { return std::exp(-u); },
            Monotonicity::Decreasing, [](double y) { return -std::log(y); }};
}
inline ScalarFn neg_ln() {
    return {"-ln(u)", Interval::left_open(0.0, kInf), [](double u) { return -std::log(u); },
            Monotonicity::Decreasing, [](double y) { return std::exp(-y); }};
}
inline ScalarFn sqrt() { return power(0.5); }
inline ScalarFn square() { return power(2.0); }
inline ScalarFn ratio() {
    return {"u/(1+u)", kNonNegative, [](double u) { return u / (1.0 + u); },
            Monotonicity::Increasing, [](double y) { return y / (1.0 - y); }};
}
/// Area of the circle whose diameter has length u.
inline ScalarFn circle_area() {
    const double q = std::acos(-1.0) / 4.0;
    return {"pi/4*u^2", kNonNegative, [q](double u) { return q * u * u; },
            Monotonicity::Increasing, [q](double y) { return std::sqrt(y / q); }};
}

inline BinOpFn add() { return {"u+v", kNonNegative, [](double u, double v) { return u + v; }, true}; }
inline BinOpFn mul() {
    return {"u*v", Interval::closed(1.0, kInf), [](double u, double v) { return u * v; }, true};
}
inline BinOpFn max() {
    return {"max(u,v)", kNonNegative, [](double u, double v) { return std::max(u, v); }, true};
}
inline BinOpFn scaled_add(double s) {
    return {format_double(s) + "*(u+v)", kNonNegative,
            [s](double u, double v) { return s * (u + v); }, true};
}
inline BinOpFn sqrt_sum_square() {
    return {"(sqrt(u)+sqrt(v))^2", kNonNegative,
            [](double u, double v) {
                const double r = std::sqrt(u) + std::sqrt(v);
                return r * r;
            },
            true};
}
inline BinOpFn sub() { return {"u-v", kNonNegative, [](double u, double v) { return u - v; }}; }

/// Resolves a catalog name such as "ln1p", "pow:2" or "scale:3".
inline std::optional<ScalarFn> scalar_by_name(std::string_view name) {
    auto param = [&](std::string_view prefix) -> std::optional<double> {
        if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
        return std::strtod(std::string(name.substr(prefix.size())).c_str(), nullptr);
    };
    if (name == "identity") return identity();
    if (name == "ln1p") return ln1p();
    if (name == "expm1") return expm1();
    if (name == "exp") return exp();
    if (name == "ln") return ln();
    if (name == "neg-exp") return neg_exp();
    if (name == "neg-ln") return neg_ln();
    if (name == "sqrt") return sqrt();
    if (name == "square") return square();
    if (name == "ratio") return ratio();
    if (name == "circle-area") return circle_area();
    if (auto r = param("pow:")) return power(*r);
    if (auto s = param("scale:")) return scale(*s);
    return std::nullopt;
}

inline std::optional<BinOpFn> binop_by_name(std::string_view name) {
    if (name == "add") return add();
    if (name == "mul") return mul();
    if (name == "max") return max();
    if (name == "sqrt-sum-square") return sqrt_sum_square();
    if (name == "sub") return sub();
    if (name.substr(0, 11) == "scaled-add:")
        return scaled_add(std::strtod(std::string(name.substr(11)).c_str(), nullptr));
    return std::nullopt;
}

}  // namespace catalog

// ---------------------------------------------------------------------------
// Inversion

inline constexpr double kTolInv = 1e-12;
inline constexpr int kMaxBisect = 2200;

/// Solves f(x) = y for x in `bracket`. Catalog entries use their closed-form
/// inverse; everything else is bisected to |f(x) - y| <= tol.
inline double invert(const ScalarFn& f, double y, Interval bracket, double tol = kTolInv) {
    if (f.monotonicity() == Monotonicity::NonMonotone)
        throw HypothesisError(f.source() + ": cannot invert a function flagged non-monotone");

    if (f.has_analytic_inverse()) {
        const double x = f.analytic_inverse(y);
        const double pad = 1e-9 * std::max(1.0, std::abs(x));
        Interval loose = bracket;
        loose.lo -= pad;
        loose.hi += pad;
        if (!std::isfinite(x) || !loose.contains(x))
            throw DomainError(f.source() + ": value " + format_double(y) + " outside range on bracket");
        return std::clamp(x, bracket.lo, bracket.hi);
    }

    auto value = [&](double x) {
        const double fx = f.raw(x);
        if (std::isnan(fx)) throw DomainError(f.source() + ": NaN during bisection at " + format_double(x));
        return fx;
    };

    double lo = bracket.lo;
    double hi = bracket.hi;
    if (!std::isfinite(lo)) lo = -1.0;
    if (!std::isfinite(hi)) hi = std::max(lo + 1.0, 1.0);
    double flo = value(lo);
    double fhi = value(hi);

    auto between = [&](double a, double b) {
        return (y >= std::min(a, b) - tol) && (y <= std::max(a, b) + tol);
    };
    // Expand an unbounded bracket until it straddles y.
    for (int i = 0; i < 2100 && !between(flo, fhi); ++i) {
        const bool grow_hi = !std::isfinite(bracket.hi);
        const bool grow_lo = !std::isfinite(bracket.lo);
        if (!grow_hi && !grow_lo) break;
        if (grow_hi) {
            hi = lo + 2.0 * (hi - lo);
            fhi = value(hi);
        }
        if (grow_lo) {
            lo = hi - 2.0 * (hi - lo);
            flo = value(lo);
        }
        if (!std::isfinite(hi) || !std::isfinite(lo)) break;
    }
    if (!between(flo, fhi))
        throw DomainError(f.source() + ": value " + format_double(y) + " outside range on bracket");
    // Stop on a relative match in y, or once the bracket stops shrinking.
    const double ytol = tol * std::abs(y);
    if (std::abs(flo - y) <= ytol) return lo;
    if (std::abs(fhi - y) <= ytol) return hi;

    const bool increasing = flo < fhi;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxBisect; ++it) {
        mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) break;
        const double fm = value(mid);
        if (std::abs(fm - y) <= ytol) return mid;
        if ((fm < y) == increasing) lo = mid;
        else hi = mid;
    }
    return mid;
}

// ---------------------------------------------------------------------------
// Sampled property checks

struct MonotoneViolation {
    double u, v, fu, fv;
};

struct MonotoneReport {
    bool ok = true;
    Monotonicity direction = Monotonicity::Increasing;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::size_t violation_count = 0;
    std::optional<MonotoneViolation> witness;
    std::vector<std::pair<double, std::string>> domain_errors;
};

/// Sampling range for an interval: finite ends are kept, an infinite upper
/// end is capped at lo + span.
inline std::pair<double, double> default_range(const Interval& d, double span = 100.0) {
    // sampling_range mirrors the cap for an unbounded lower end, giving [-span, span].
    return d.sampling_range(std::isfinite(d.lo) ? d.lo + span : span);
}

/// Sampled monotonicity: reports any consecutive sample pair that breaks
/// the requested direction by more than tol. Deterministic under `seed`.
inline MonotoneReport check_monotone(const ScalarFn& f, std::size_t samples = 1000,
                                     std::uint64_t seed = 42,
                                     Monotonicity direction = Monotonicity::Increasing,
                                     std::optional<std::pair<double, double>> range = std::nullopt,
                                     double tol = 1e-9) {
    MonotoneReport rep;
    rep.direction = direction;
    rep.samples = samples;
    rep.seed = seed;
    const auto [lo, hi] = range ? *range : default_range(f.domain());
    Rng rng(seed);
    std::vector<double> xs;
    xs.reserve(samples + 2);
    xs.push_back(lo);
    xs.push_back(hi);
    for (std::size_t i = 0; i + 2 < samples; ++i) xs.push_back(rng.uniform(lo, hi));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::vector<std::pair<double, double>> values;
    for (double x : xs) {
        try {
            values.emplace_back(x, f(x));
        } catch (const DomainError& e) {
            rep.domain_errors.emplace_back(x, e.what());
        }
    }
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const auto [u, fu] = values[i];
        const auto [v, fv] = values[i + 1];
        const bool bad = direction == Monotonicity::Decreasing ? !approx_leq(fv, fu, tol)
                                                               : !approx_leq(fu, fv, tol);
        if (bad) {
            ++rep.violation_count;
            if (!rep.witness) rep.witness = MonotoneViolation{u, v, fu, fv};
        }
    }
    rep.ok = rep.violation_count == 0 && rep.domain_errors.empty();
    return rep;
}

struct BinOpWitness {
    double u, v, value_uv, value_vu;
    std::string message;
};

struct BinOpCheck {
    bool ok = true;
    std::size_t samples = 0;
    std::optional<BinOpWitness> witness;
};

/// Sampled commutativity o(u,v) = o(v,u).
inline BinOpCheck check_commutative(const BinOpFn& o, std::size_t samples = 1000,
                                    std::uint64_t seed = 42,
                                    std::optional<std::pair<double, double>> range = std::nullopt,
                                    double tol = 1e-9) {
    BinOpCheck rep;
    rep.samples = samples;
    const auto [lo, hi] = range ? *range : default_range(o.domain());
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = rng.uniform(lo, hi);
        const double v = rng.uniform(lo, hi);
        const auto a = o.try_eval(u, v);
        const auto b = o.try_eval(v, u);
        if (!a || !b) {
            rep.ok = false;
            rep.witness = BinOpWitness{u, v, a.value_or(NAN), b.value_or(NAN), "domain error"};
            return rep;
        }
        if (!approx_equal(*a, *b, tol)) {
            rep.ok = false;
            rep.witness = BinOpWitness{u, v, *a, *b, "o(u,v) != o(v,u)"};
            return rep;
        }
    }
    return rep;
}

/// Sampled non-decrease of o in each variable separately. The witness
/// reports (u1, u2) with the other argument encoded in `message`.
inline BinOpCheck check_binop_monotone(const BinOpFn& o, std::size_t samples = 1000,
                                       std::uint64_t seed = 42,
                                       std::optional<std::pair<double, double>> range = std::nullopt,
                                       double tol = 1e-9) {
    BinOpCheck rep;
    rep.samples = samples;
    const auto [lo, hi] = range ? *range : default_range(o.domain());
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        double u1 = rng.uniform(lo, hi);
        double u2 = rng.uniform(lo, hi);
        if (u1 > u2) std::swap(u1, u2);
        const double w = rng.uniform(lo, hi);
        for (int var = 0; var < 2; ++var) {
            const auto a = var == 0 ? o.try_eval(u1, w) : o.try_eval(w, u1);
            const auto b = var == 0 ? o.try_eval(u2, w) : o.try_eval(w, u2);
            if (!a || !b) {
                rep.ok = false;
                rep.witness = BinOpWitness{u1, u2, a.value_or(NAN), b.value_or(NAN),
                                           "domain error with other argument " + format_double(w)};
                return rep;
            }
            if (!approx_leq(*a, *b, tol)) {
                rep.ok = false;
                rep.witness = BinOpWitness{u1, u2, *a, *b,
                                           std::string("decrease in variable ") + (var == 0 ? "u" : "v") +
                                               " with other argument " + format_double(w)};
                return rep;
            }
        }
    }
    return rep;
}

}  // namespace ometric

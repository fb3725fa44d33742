#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ometric {

using Point = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown when a function is evaluated outside its declared domain or
/// produces a non-finite value.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a construction's sampled hypotheses fail. The message names
/// the failing hypothesis and the witness.
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical slack used everywhere equality or inequality is tested.
/// Comparisons are relative: slack = tol * max(1, |lhs|, |rhs|).
struct Tolerances {
    double eq = 1e-9;
    double ineq = 1e-9;
};

inline double slack(double tol, double lhs, double rhs) {
    return tol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

inline bool approx_equal(double x, double y, double tol) {
    if (x == y) return true;
    return std::abs(x - y) <= slack(tol, x, y);
}

inline bool approx_leq(double lhs, double rhs, double tol) {
    return lhs <= rhs + slack(tol, lhs, rhs);
}

/// A real interval with independently open or closed ends. Infinite ends
/// are always treated as open.
struct Interval {
    double lo = 0.0;
    double hi = kInf;
    bool lo_open = false;
    bool hi_open = true;

    static Interval closed(double lo, double hi) {
        return {lo, hi, false, !std::isfinite(hi)};
    }
    static Interval left_open(double lo, double hi) {
        return {lo, hi, true, !std::isfinite(hi)};
    }
    static Interval all() { return {-kInf, kInf, true, true}; }

    bool contains(double x) const {
        if (std::isnan(x)) return false;
        if (lo_open ? !(x > lo) : !(x >= lo)) return false;
        if (hi_open ? !(x < hi) : !(x <= hi)) return false;
        return true;
    }
    bool bounded_above() const { return std::isfinite(hi); }
    bool bounded_below() const { return std::isfinite(lo); }

    /// Clips to [lo, cap_hi] for sampling, nudging open ends inward.
    std::pair<double, double> sampling_range(double cap_hi) const {
        double l = std::isfinite(lo) ? lo : -cap_hi;
        double h = std::isfinite(hi) ? std::min(hi, cap_hi) : cap_hi;
        if (h < l) h = l;
        if (lo_open) l = std::nextafter(l, kInf) + 1e-12 * std::max(1.0, std::abs(l));
        if (hi_open && std::isfinite(hi) && h >= hi)
            h = std::nextafter(hi, -kInf) - 1e-12 * std::max(1.0, std::abs(hi));
        if (h < l) h = l;
        return {l, h};
    }
};

/// Seeded generator with a portable uniform draw; the standard
/// distributions are implementation-defined and would break byte-identical
/// output across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_point(const Point& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ", ";
        s += format_double(p[i]);
    }
    return s + ")";
}

}  // namespace ometric

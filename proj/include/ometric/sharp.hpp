#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "common.hpp"
#include "fixpoint.hpp"
#include "scalarfn.hpp"

namespace ometric {

struct BoundComparison {
    std::vector<double> chain;
    double naive = 0.0;
    double sharp = 0.0;
    std::optional<double> actual;
    double gap = 0.0;
    bool subadditive = true;  // sampled; dominance is only claimed when true
    bool equidistant = false;
};

namespace detail {

inline bool sampled_subadditive(const ScalarFn& f, std::size_t samples, std::uint64_t seed, double tol) {
    const auto [lo, hi] = default_range(f.domain());
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = rng.uniform(lo, hi), v = rng.uniform(lo, hi);
        const auto fuv = f.try_eval(u + v), fu = f.try_eval(u), fv = f.try_eval(v);
        if (!fuv || !fu || !fv) continue;
        if (!approx_leq(*fuv, *fu + *fv, tol)) return false;
    }
    return true;
}

inline double compose_sum(const ScalarFn& f, const std::vector<double>& chain, bool& equidistant) {
    if (chain.empty()) throw std::invalid_argument("sharp bound: chain must be non-empty");
    equidistant = true;
    for (double d : chain) equidistant = equidistant && d == chain.front();
    const ScalarFn g = f.with_monotonicity(Monotonicity::Increasing);
    if (equidistant) return f(static_cast<double>(chain.size()) * invert(g, chain.front(), f.domain()));
    double acc = 0.0;
    for (double d : chain) acc += invert(g, d, f.domain());
    return f(acc);
}

inline void require_increasing(const ScalarFn& f, const char* what) {
    const auto rep = check_monotone(f, 1000, 42, Monotonicity::Increasing);
    if (!rep.ok) throw HypothesisError(std::string(what) + ": " + f.source() + " is not increasing");
}

}  // namespace detail

/// Compares sum(d_i) with θ(sum θ⁻¹(d_i)). Equidistant chains use
/// θ(n θ⁻¹(α)) directly.
inline BoundComparison sharp_bound(const std::vector<double>& chain, const ScalarFn& theta,
                                   std::optional<double> actual = std::nullopt, std::size_t samples = 1000,
                                   std::uint64_t seed = 42) {
    detail::require_increasing(theta, "sharp_bound");
    BoundComparison c;
    c.chain = chain;
    c.sharp = detail::compose_sum(theta, chain, c.equidistant);
    for (double d : chain) c.naive += d;
    c.gap = c.naive - c.sharp;
    c.actual = actual;
    c.subadditive = detail::sampled_subadditive(theta, samples, seed, 1e-12);
    return c;
}

/// Same comparison for b-metrics φ∘d: the naive side is s^f(n) * sum(d_i).
inline BoundComparison bmetric_sharp(const std::vector<double>& chain, const ScalarFn& phi, double s,
                                     std::optional<double> actual = std::nullopt) {
    if (!(s >= 1)) throw std::invalid_argument("bmetric_sharp: s must be >= 1");
    detail::require_increasing(phi, "bmetric_sharp");
    if (const double p0 = phi(0.0); p0 != 0.0)
        throw HypothesisError("bmetric_sharp: phi(0) = " + format_double(p0) + ", expected 0");
    BoundComparison c;
    c.chain = chain;
    c.sharp = detail::compose_sum(phi, chain, c.equidistant);
    double sum = 0.0;
    for (double d : chain) sum += d;
    c.naive = std::pow(s, suzuki_f(chain.size())) * sum;
    c.gap = c.naive - c.sharp;
    c.actual = actual;
    c.subadditive = false;
    return c;
}

struct GridSpec {
    double lo = 0.0, hi = 1.0;
    std::size_t steps = 10;
};

struct GapRow {
    double u, v, gap;
};

/// s(u+v) - φ(φ⁻¹(u) + φ⁻¹(v)) on a (steps+1) x (steps+1) grid.
inline std::vector<GapRow> gap_surface(const ScalarFn& phi, double s, const GridSpec& g) {
    if (g.steps < 1) throw std::invalid_argument("gap_surface: steps must be >= 1");
    if (!(g.hi >= g.lo)) throw std::invalid_argument("gap_surface: hi must be >= lo");
    const ScalarFn f = phi.with_monotonicity(Monotonicity::Increasing);
    std::vector<GapRow> rows;
    rows.reserve((g.steps + 1) * (g.steps + 1));
    for (std::size_t i = 0; i <= g.steps; ++i)
        for (std::size_t j = 0; j <= g.steps; ++j) {
            const double u = g.lo + (g.hi - g.lo) * static_cast<double>(i) / static_cast<double>(g.steps);
            const double v = g.lo + (g.hi - g.lo) * static_cast<double>(j) / static_cast<double>(g.steps);
            const double sharp = f(invert(f, u, f.domain()) + invert(f, v, f.domain()));
            rows.push_back({u, v, s * (u + v) - sharp});
        }
    return rows;
}

}  // namespace ometric

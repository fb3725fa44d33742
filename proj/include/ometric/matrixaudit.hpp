#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "common.hpp"
#include "fixpoint.hpp"

namespace ometric {

inline constexpr std::size_t kMaxAuditOrder = 512;

/// Finite symmetric distance matrix with zero diagonal and positive
/// off-diagonal entries.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        DistanceMatrix m(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size())
                throw std::invalid_argument("matrix row " + std::to_string(i + 1) + " has " +
                                            std::to_string(rows[i].size()) + " entries, expected " +
                                            std::to_string(rows.size()));
            for (std::size_t j = 0; j < rows.size(); ++j) m.set(i, j, rows[i][j]);
        }
        m.validate();
        return m;
    }

    std::size_t order() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double v) { a_[i * n_ + j] = v; }
    void set_symmetric(std::size_t i, std::size_t j, double v) {
        set(i, j, v);
        set(j, i, v);
    }

    /// Throws std::invalid_argument naming the first offending entry.
    void validate() const {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                const double v = (*this)(i, j);
                const std::string at = "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
                if (std::isnan(v)) throw std::invalid_argument(at + " is NaN");
                if (!std::isfinite(v)) throw std::invalid_argument(at + " is not finite");
                if (v < 0) throw std::invalid_argument(at + " is negative");
                if (i == j && v != 0.0) throw std::invalid_argument(at + " on the diagonal is not zero");
                if (i != j && !(v > 0)) throw std::invalid_argument(at + " off the diagonal must be positive");
                if (v != (*this)(j, i)) throw std::invalid_argument(at + " breaks symmetry");
            }
    }

    /// True when all off-diagonal entries above the diagonal are distinct.
    bool distinct_entries() const {
        std::vector<double> v;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) v.push_back((*this)(i, j));
        std::sort(v.begin(), v.end());
        return std::adjacent_find(v.begin(), v.end()) == v.end();
    }

    static DistanceMatrix parse_csv(std::istream& in) {
        std::vector<std::vector<double>> rows;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                const auto b = cell.find_first_not_of(" \t");
                const auto e = cell.find_last_not_of(" \t");
                const std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
                char* end = nullptr;
                const double v = std::strtod(t.c_str(), &end);
                if (t.empty() || *end != '\0')
                    throw std::invalid_argument("line " + std::to_string(lineno) + ": bad number '" + t + "'");
                row.push_back(v);
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw std::invalid_argument("matrix input is empty");
        return from_rows(rows);
    }

    static DistanceMatrix parse_json(const nlohmann::json& j) {
        if (!j.is_array()) throw std::invalid_argument("matrix JSON must be an array of rows");
        std::vector<std::vector<double>> rows;
        for (const auto& r : j) {
            if (!r.is_array()) throw std::invalid_argument("matrix JSON rows must be arrays");
            std::vector<double> row;
            for (const auto& x : r) {
                if (!x.is_number()) throw std::invalid_argument("matrix JSON entries must be numbers");
                row.push_back(x.get<double>());
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw std::invalid_argument("matrix input is empty");
        return from_rows(rows);
    }

    /// Reads CSV, or JSON when the first non-blank character is '['.
    static DistanceMatrix load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::invalid_argument("cannot open matrix file '" + path + "'");
        std::stringstream buf;
        buf << f.rdbuf();
        const std::string text = buf.str();
        const auto p = text.find_first_not_of(" \t\r\n");
        if (p != std::string::npos && text[p] == '[') {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(text);
            } catch (const nlohmann::json::parse_error& e) {
                throw std::invalid_argument(std::string("matrix JSON: ") + e.what());
            }
            return parse_json(j);
        }
        std::istringstream in(text);
        return parse_csv(in);
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) out += (j ? "," : "") + format_double((*this)(i, j));
            out += "\n";
        }
        return out;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// 1-based triple (i, k, j): α_ij against α_ik + α_kj.
using Triple = std::array<std::size_t, 3>;

struct AuditReport {
    std::size_t order = 0;
    bool triangle_holds = true;
    std::optional<Triple> worst_triple;  // triple attaining optimal_s
    double optimal_s = 0.0;
    double quotient_sup_estimate = 0.0;  // same scan, i != k != j
    std::vector<Triple> betweenness;     // (i, k, j) with i < j: x_k between x_i and x_j
    std::vector<std::pair<std::size_t, std::size_t>> betweenness_sequences;  // inclusive index runs
    double superdiagonal_sum = 0.0;
    bool distinct_entries = true;
};

namespace detail {

inline void require_auditable(const DistanceMatrix& m) {
    if (m.order() > kMaxAuditOrder)
        throw std::invalid_argument("matrix order " + std::to_string(m.order()) + " exceeds the exhaustive limit " +
                                    std::to_string(kMaxAuditOrder));
}

inline bool additive(double total, double parts, double tol_bet) {
    return std::abs(total - parts) <= tol_bet * total;
}

}  // namespace detail

/// Exhaustive scan of all triples of distinct indices.
inline AuditReport audit(const DistanceMatrix& m, double tol_bet = 1e-9) {
    detail::require_auditable(m);
    m.validate();
    AuditReport r;
    r.order = m.order();
    r.distinct_entries = m.distinct_entries();
    const std::size_t n = m.order();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double aij = m(i, j);
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                const double den = m(i, k) + m(k, j);
                const double q = aij / den;
                if (q > r.optimal_s) {
                    r.optimal_s = q;
                    r.worst_triple = Triple{i + 1, k + 1, j + 1};
                }
                if (i < j && detail::additive(aij, den, tol_bet)) r.betweenness.push_back({i + 1, k + 1, j + 1});
                if (aij > den * (1.0 + tol_bet)) r.triangle_holds = false;
            }
        }
    r.quotient_sup_estimate = r.optimal_s;
    for (std::size_t i = 0; i + 1 < n; ++i) r.superdiagonal_sum += m(i, i + 1);

    // Maximal runs x_i..x_e with α_{i,m} = sum of the superdiagonal from i to m-1.
    std::size_t last_end = 0;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        double partial = 0.0;
        std::size_t e = i;
        for (std::size_t q = i + 1; q < n; ++q) {
            partial += m(q - 1, q);
            if (!detail::additive(m(i, q), partial, tol_bet)) break;
            e = q;
        }
        if (e >= i + 2 && e + 1 > last_end) {
            r.betweenness_sequences.emplace_back(i + 1, e + 1);
            last_end = e + 1;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Spiral example

/// x_i for i >= 1: (sum_{q=0}^{floor(i/2)-1} (-1)^q r^{2q},
///                  sum_{q=1}^{ceil(i/2)-1} (-1)^q r^{2q-1}).
inline std::array<double, 2> spiral_point(double r, std::size_t i) {
    if (i < 1) throw std::invalid_argument("spiral_point: index starts at 1");
    if (i == 1) return {0.0, 0.0};
    if (i == 2) return {1.0, 0.0};
    double x = 0.0, y = 0.0;
    for (std::size_t q = 0; q < i / 2; ++q) x += (q % 2 ? -1.0 : 1.0) * std::pow(r, 2.0 * q);
    for (std::size_t q = 1; q < (i + 1) / 2; ++q) y += (q % 2 ? -1.0 : 1.0) * std::pow(r, 2.0 * q - 1);
    return {x, y};
}

/// Closed-form entry for 2 <= i < j.
inline double spiral_closed_form(double r, std::size_t i, std::size_t j) {
    if (!(2 <= i && i < j)) throw std::invalid_argument("spiral_closed_form: need 2 <= i < j");
    double x = 0.0, y = 0.0;
    for (std::size_t q = i / 2; q < j / 2; ++q) x += (q % 2 ? -1.0 : 1.0) * std::pow(r, 2.0 * q);
    for (std::size_t q = (i + 1) / 2; q < (j + 1) / 2; ++q) y += (q % 2 ? -1.0 : 1.0) * std::pow(r, 2.0 * q - 1);
    return std::hypot(x, y);
}

/// Row 1 holds ‖x_j‖; entries with 2 <= i < j use the closed form, which
/// sums the differences directly and keeps tiny superdiagonal entries that
/// subtracting nearly equal coordinates would lose.
inline DistanceMatrix spiral_matrix(double r, std::size_t n) {
    if (!(r > 0 && r < 1)) throw std::invalid_argument("spiral_matrix: r must lie in (0, 1)");
    if (n < 3) throw std::invalid_argument("spiral_matrix: N must be >= 3");
    DistanceMatrix m(n);
    for (std::size_t j = 2; j <= n; ++j) {
        const auto p = spiral_point(r, j);
        m.set_symmetric(0, j - 1, std::hypot(p[0], p[1]));
    }
    for (std::size_t i = 2; i <= n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j) m.set_symmetric(i - 1, j - 1, spiral_closed_form(r, i, j));
    m.validate();
    return m;
}

/// Largest |‖x_i - x_j‖ - α_ij| over 1 <= i < j <= n, with the point
/// distances recomputed from spiral_point.
inline double spiral_max_discrepancy(double r, std::size_t n) {
    const DistanceMatrix m = spiral_matrix(r, n);
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 1; i <= n; ++i) pts.push_back(spiral_point(r, i));
    double worst = std::abs(m(0, 1) - 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            worst = std::max(worst, std::abs(std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]) - m(i, j)));
    return worst;
}

struct QuotientRow {
    std::size_t n;
    double q_max;
};

inline std::vector<QuotientRow> quotient_growth(double r, const std::vector<std::size_t>& sizes) {
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (!(sizes[i] > sizes[i - 1])) throw std::invalid_argument("quotient_growth: sizes must increase");
    std::vector<QuotientRow> out;
    for (std::size_t n : sizes) out.push_back({n, audit(spiral_matrix(r, n)).optimal_s});
    return out;
}

// ---------------------------------------------------------------------------
// Polygon and constrained checks

struct PolygonViolation {
    std::size_t i, n;  // 1-based, i < n
    double lhs, bound;
};

struct PolygonReport {
    double s = 1.0;
    std::size_t pairs = 0;
    std::vector<PolygonViolation> violations;
};

/// α_{i,n} <= s^g(n-i) * sum_{j=i}^{n-1} α_{j,j+1} for all 1 <= i < n <= N.
inline PolygonReport polygon_bound_check(const DistanceMatrix& m, double s, double tol = 1e-9) {
    if (!(s >= 0)) throw std::invalid_argument("polygon_bound_check: s must be >= 0");
    m.validate();
    PolygonReport r;
    r.s = s;
    const std::size_t N = m.order();
    for (std::size_t i = 0; i < N; ++i) {
        double partial = 0.0;
        for (std::size_t n = i + 1; n < N; ++n) {
            partial += m(n - 1, n);
            const double bound = std::pow(s, suzuki_g(n - i)) * partial;
            ++r.pairs;
            if (!approx_leq(m(i, n), bound, tol)) r.violations.push_back({i + 1, n + 1, m(i, n), bound});
        }
    }
    return r;
}

struct RichnessReport {
    double s = 0.0;
    bool s_constrained = true;
    std::optional<Triple> witness;
    double witness_quotient = 0.0;
    std::vector<double> partial_sums;  // sum_{j<n} α_{j,j+1}, n = 2..N
    std::vector<double> bound_ratios;  // α_{1,n} / (s^g(n-1) * partial sum), n = 2..N
    double min_ratio = NAN;
    bool divergent_trend = false;
};

/// Checks α_ij <= s(α_ik + α_kj) on distinct triples and reports the chain
/// sums that such a matrix must keep growing.
inline RichnessReport constrained_richness(const DistanceMatrix& m, double s, double tol = 1e-9) {
    if (!(s >= 0 && s < 1)) throw std::invalid_argument("constrained_richness: s must lie in [0, 1)");
    detail::require_auditable(m);
    m.validate();
    RichnessReport r;
    r.s = s;
    const std::size_t N = m.order();
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            if (i == j) continue;
            for (std::size_t k = 0; k < N; ++k) {
                if (k == i || k == j) continue;
                const double den = m(i, k) + m(k, j);
                if (!approx_leq(m(i, j), s * den, tol)) {
                    const double q = m(i, j) / den;
                    if (r.s_constrained || q > r.witness_quotient) {
                        r.witness = Triple{i + 1, k + 1, j + 1};
                        r.witness_quotient = q;
                    }
                    r.s_constrained = false;
                }
            }
        }
    double partial = 0.0;
    for (std::size_t n = 1; n < N; ++n) {
        partial += m(n - 1, n);
        r.partial_sums.push_back(partial);
        const double bound = std::pow(s, suzuki_g(n)) * partial;
        r.bound_ratios.push_back(bound > 0 ? m(0, n) / bound : kInf);
    }
    if (!r.bound_ratios.empty()) r.min_ratio = *std::min_element(r.bound_ratios.begin(), r.bound_ratios.end());
    const std::size_t edges = N > 0 ? N - 1 : 0;
    double head = 0.0, tail = 0.0;
    for (std::size_t e = 0; e < edges; ++e) (e < edges / 2 ? head : tail) += m(e, e + 1);
    r.divergent_trend = edges >= 2 && tail >= 0.5 * head;
    return r;
}

}  // namespace ometric

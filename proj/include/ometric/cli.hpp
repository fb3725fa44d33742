#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "core.hpp"
#include "fixpoint.hpp"
#include "json_io.hpp"
#include "matrixaudit.hpp"
#include "sharp.hpp"
#include "topology.hpp"
#include "transforms.hpp"

namespace ometric::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
    std::uint64_t seed = 42;
    std::size_t samples = 10000;
    double tol = 1e-9;
    std::string out;
    std::string format = "json";
};

/// Thrown for flag combinations CLI11 cannot express.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Report serialization

inline Json space_summary(const OMetricSpace& s) {
    Json j;
    j["name"] = s.name;
    j["a"] = num(s.a);
    j["interval"] = {num(s.interval.lo), num(s.interval.hi)};
    j["direction"] = to_string(s.direction);
    j["o"] = s.o.source();
    j["dimension"] = s.domain.dimension();
    return j;
}

inline Json to_json(const Counterexample& c) {
    return Json{{"points", points_json(c.points)}, {"values", num_array(c.values)}, {"message", c.message}};
}

inline Json to_json(const AxiomReport& r) {
    Json j{{"axiom", to_string(r.axiom)}, {"pass", r.pass},         {"samples", r.samples},
           {"seed", r.seed},              {"exhaustive", r.exhaustive}};
    j["counterexample"] = r.counterexample ? to_json(*r.counterexample) : Json(nullptr);
    return j;
}

inline Json to_json(const std::vector<AxiomReport>& reps) {
    Json a = Json::array();
    for (const auto& r : reps) a.push_back(to_json(r));
    return a;
}

inline Json to_json(const HypothesisCheck& c) {
    return Json{{"name", c.name}, {"ok", c.ok}, {"samples", c.samples}, {"witness", num_array(c.witness)},
                {"detail", c.detail}};
}

inline Json to_json(const ConditionVerdict& v) {
    return Json{{"name", v.name}, {"pass", v.pass}, {"witness", num_array(v.witness)}, {"message", v.message}};
}

inline Json to_json(const SequenceAnalysis& a) {
    Json j;
    j["length"] = a.length;
    j["candidate"] = a.candidate ? point_json(*a.candidate) : Json(nullptr);
    j["threshold"] = num(a.threshold);
    j["window_max"] = num_array(a.window_max);
    j["converging_trend"] = a.converging_trend ? Json(*a.converging_trend) : Json(nullptr);
    j["cauchy_window_max"] = num_array(a.cauchy_window_max);
    j["cauchy_trend"] = a.cauchy_trend;
    return j;
}

inline Json to_json(const HypothesisEntry& h) {
    return Json{{"name", h.name}, {"pass", h.pass}, {"detail", h.detail}, {"witness", num_array(h.witness)}};
}

inline Json triple_json(const Triple& t) { return Json{t[0], t[1], t[2]}; }

// ---------------------------------------------------------------------------
// Argument helpers

namespace detail {

inline Json json_arg(const std::string& arg, const std::string& what) {
    const auto p = arg.find_first_not_of(" \t\r\n");
    const bool inline_json = p != std::string::npos && (arg[p] == '[' || arg[p] == '{' || arg[p] == '-' ||
                                                        (arg[p] >= '0' && arg[p] <= '9'));
    return parse_json_text(inline_json ? arg : read_file(arg), what);
}

inline Point point_arg(const std::string& arg, const std::string& what) {
    const Json j = json_arg(arg, what);
    if (j.is_number()) return {j.get<double>()};
    if (j.is_array()) {
        Point p;
        for (const auto& c : j) {
            if (!c.is_number()) throw UsageError(what + ": coordinates must be numbers");
            p.push_back(c.get<double>());
        }
        return p;
    }
    throw UsageError(what + ": expected a number or an array of numbers");
}

inline std::vector<double> list_arg(const std::string& arg, const std::string& what) {
    const auto p = arg.find_first_not_of(" \t");
    if (p != std::string::npos && arg[p] == '[') {
        const Json j = parse_json_text(arg, what);
        std::vector<double> v;
        for (const auto& x : j) {
            if (!x.is_number()) throw UsageError(what + ": entries must be numbers");
            v.push_back(x.get<double>());
        }
        return v;
    }
    std::vector<double> v;
    std::stringstream ss(arg);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        char* end = nullptr;
        const double x = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end == cell.c_str() || *end != '\0') throw UsageError(what + ": bad number '" + cell + "'");
        v.push_back(x);
    }
    if (v.empty()) throw UsageError(what + ": empty list");
    return v;
}

/// Unary function from a catalog name or an expression in u (or t).
inline ScalarFn unary_arg(const std::string& text, Interval domain) {
    if (auto f = catalog::scalar_by_name(text)) return f->with_domain(domain);
    const Expr e = Expr::parse(text, {"u", "t"});
    return ScalarFn(text, domain, [e](double u) { return e(u, u); });
}

inline BinOpFn binary_arg(const std::string& text, Interval domain) {
    if (auto f = catalog::binop_by_name(text)) return f->with_domain(domain);
    return parse_binop(text, domain);
}

inline NaryFn nary_arg(const std::string& text, Interval domain) {
    if (text == "max") return NaryFn::max();
    if (text == "sum") return NaryFn::sum();
    return NaryFn::fold(binary_arg(text, domain));
}

/// Map components separated by ';', each an expression in x (or x1..xn).
inline PointMap map_arg(const std::string& text, std::size_t dim) {
    std::vector<Expr> parts;
    std::vector<std::string> vars = dim == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{};
    for (std::size_t i = 1; dim > 1 && i <= dim; ++i) vars.push_back("x" + std::to_string(i));
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ';')) parts.push_back(Expr::parse(piece, vars));
    if (parts.size() != dim)
        throw UsageError("--map: expected " + std::to_string(dim) + " component(s), got " + std::to_string(parts.size()));
    return [parts](const Point& x) {
        Point y(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) y[i] = parts[i](std::span<const double>(x));
        return y;
    };
}

inline bool any_failed(const std::vector<HypothesisCheck>& checks) {
    for (const auto& c : checks)
        if (!c.ok) return true;
    return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Output

struct Output {
    std::string text;
    int code = kExitOk;
};

inline Output json_out(const Json& j, int code) { return {dump(j) + "\n", code}; }

inline void require_json(const RunConfig& c, const std::string& what) {
    if (c.format != "json") throw UsageError(what + ": only JSON output is available");
}

// ---------------------------------------------------------------------------
// Subcommand handlers

struct CheckArgs {
    std::string space;
    std::string verify;
};

inline Output cmd_check(const RunConfig& c, const CheckArgs& a) {
    const OMetricSpace s = load_space(a.space);
    const Tolerances tol{c.tol, c.tol};
    if (!a.verify.empty()) {
        require_json(c, "check --verify-witness");
        const Json w = detail::json_arg(a.verify, "--verify-witness");
        std::vector<std::pair<Axiom, std::vector<Point>>> items;
        auto take = [&](const Json& e) {
            if (!e.is_object() || !e.contains("axiom") || !e["axiom"].is_string())
                throw UsageError("--verify-witness: entries need an 'axiom' string");
            const auto ax = axiom_from_string(e["axiom"].get<std::string>());
            if (!ax) throw UsageError("--verify-witness: unknown axiom '" + e["axiom"].get<std::string>() + "'");
            const Json* pts = nullptr;
            if (e.contains("points")) pts = &e["points"];
            else if (e.contains("counterexample") && e["counterexample"].is_object())
                pts = &e["counterexample"]["points"];
            else if (e.contains("counterexample")) return;  // passing axiom in a full report
            if (!pts) throw UsageError("--verify-witness: entry has no points");
            items.emplace_back(*ax, points_from_json(*pts, "--verify-witness points"));
        };
        if (w.is_object() && w.contains("axioms")) {
            for (const auto& e : w["axioms"]) take(e);
        } else if (w.is_array()) {
            for (const auto& e : w) take(e);
        } else {
            take(w);
        }
        Json out{{"space", space_summary(s)}, {"tol", num(c.tol)}};
        Json list = Json::array();
        bool reproduced_any = false;
        for (const auto& [ax, pts] : items) {
            const bool rep = verify_witness(s, ax, pts, tol);
            reproduced_any = reproduced_any || rep;
            list.push_back(Json{{"axiom", to_string(ax)}, {"points", points_json(pts)}, {"reproduced", rep}});
        }
        out["witnesses"] = list;
        return json_out(out, reproduced_any ? kExitCheckFailed : kExitOk);
    }
    const auto reps = check_axioms(s, c.samples, c.seed, tol);
    const bool pass = all_pass(reps);
    if (c.format == "csv") {
        std::string t = "axiom,pass,samples,seed,exhaustive,message\n";
        for (const auto& r : reps)
            t += std::string(to_string(r.axiom)) + "," + (r.pass ? "true" : "false") + "," + std::to_string(r.samples) +
                 "," + std::to_string(r.seed) + "," + (r.exhaustive ? "true" : "false") + "," +
                 (r.counterexample ? r.counterexample->message : "") + "\n";
        return {t, pass ? kExitOk : kExitCheckFailed};
    }
    Json j{{"space", space_summary(s)}, {"seed", c.seed}, {"samples", c.samples}, {"tol", num(c.tol)},
           {"pass", pass},             {"axioms", to_json(reps)}};
    return json_out(j, pass ? kExitOk : kExitCheckFailed);
}

struct TransformArgs {
    std::string space, kind, theta, lambda, phi, ob;
    std::optional<double> r, b;
    std::vector<std::string> with;
    std::size_t verify_samples = 1000;
};

inline Output cmd_transform(const RunConfig& c, const TransformArgs& a) {
    require_json(c, "transform");
    const OMetricSpace s = load_space(a.space);
    const TransformOptions opt{std::min<std::size_t>(c.samples, 2000), c.seed, {c.tol, c.tol}};
    auto need = [&](const std::string& v, const char* flag) {
        if (v.empty()) throw UsageError("transform --kind " + a.kind + " requires " + flag);
    };
    TransformResult res{s, {}, 0, {}};
    try {
        if (a.kind == "pushforward") {
            need(a.theta, "--theta");
            const ScalarFn th = detail::unary_arg(a.theta, s.interval);
            BinOpFn ob = catalog::add();
            double b = a.b.value_or(th(s.a));
            if (!a.ob.empty()) {
                ob = detail::binary_arg(a.ob, Interval::all());
            } else {
                // Conjugate o through θ so commutation holds by construction.
                const ScalarFn inc = th.with_monotonicity(Monotonicity::Increasing);
                const BinOpFn o = s.o;
                const Interval I = s.interval;
                ob = BinOpFn("theta o theta^-1", Interval::all(), [inc, o, I](double u, double v) {
                    return inc(o(invert(inc, u, I), invert(inc, v, I)));
                });
            }
            res = pushforward(s, th, ob, b, opt);
        } else if (a.kind == "power") {
            if (!a.r) throw UsageError("transform --kind power requires --r");
            res.space = power(s, *a.r);
        } else if (a.kind == "to-metric") {
            need(a.lambda, "--lambda");
            res = to_metric(s, detail::unary_arg(a.lambda, s.interval), opt);
        } else if (a.kind == "dual") {
            need(a.phi, "--phi");
            need(a.theta, "--theta");
            res = downward_dual(s, detail::binary_arg(a.phi, Interval::all()),
                                detail::unary_arg(a.theta, s.interval), opt);
        } else if (a.kind == "product") {
            if (a.with.empty()) throw UsageError("transform --kind product requires --with");
            std::vector<OMetricSpace> spaces{s};
            for (const auto& w : a.with) spaces.push_back(load_space(w));
            res = product(spaces, detail::nary_arg(a.phi.empty() ? "max" : a.phi, s.interval), opt);
        } else {
            throw UsageError("transform: unknown --kind '" + a.kind + "'");
        }
    } catch (const HypothesisError& e) {
        return json_out(Json{{"kind", a.kind}, {"input", space_summary(s)}, {"refused", true}, {"message", e.what()}},
                        kExitCheckFailed);
    }
    Json checks = Json::array();
    for (const auto& h : res.checks) checks.push_back(to_json(h));
    const auto reps = check_axioms(res.space, a.verify_samples, c.seed, {c.tol, c.tol});
    const bool ok = !detail::any_failed(res.checks) || res.note.find("verified directly") != std::string::npos;
    Json j{{"kind", a.kind},
           {"input", space_summary(s)},
           {"output", space_summary(res.space)},
           {"refused", false},
           {"checks", checks},
           {"outside_interval", res.outside_interval},
           {"note", res.note},
           {"output_axioms", to_json(reps)}};
    return json_out(j, ok && all_pass(reps) ? kExitOk : kExitCheckFailed);
}

struct TopologyArgs {
    std::string space, op, center, points, seq, expr, gamma, x, y;
    std::vector<std::string> candidates;
    std::optional<double> radius;
    std::size_t count = 1024;
};

inline Output cmd_topology(const RunConfig& c, const TopologyArgs& a) {
    const OMetricSpace s = load_space(a.space);
    const Tolerances tol{c.tol, c.tol};
    const std::size_t samples = c.samples;
    auto need = [&](const std::string& v, const char* flag) {
        if (v.empty()) throw UsageError("topology --op " + a.op + " requires " + flag);
    };
    Json j{{"op", a.op}, {"space", space_summary(s)}};
    if (a.op != "sequence") require_json(c, "topology --op " + a.op);

    if (a.op == "ball") {
        need(a.center, "--center");
        need(a.points, "--points");
        if (!a.radius) throw UsageError("topology --op ball requires --radius");
        const Point ctr = detail::point_arg(a.center, "--center");
        const auto pts = points_from_json(detail::json_arg(a.points, "--points"), "--points");
        Json m = Json::array();
        for (const auto& p : pts)
            m.push_back(Json{{"point", point_json(p)}, {"distance", num(s.dist(ctr, p))},
                             {"inside", ball_contains(s, ctr, *a.radius, p)}});
        j["center"] = point_json(ctr);
        j["radius"] = num(*a.radius);
        j["members"] = m;
        return json_out(j, kExitOk);
    }
    if (a.op == "sequence") {
        std::vector<Point> seq;
        if (!a.seq.empty()) seq = points_from_json(detail::json_arg(a.seq, "--seq"), "--seq");
        else if (!a.expr.empty()) seq = generate_sequence(a.expr, a.count);
        else throw UsageError("topology --op sequence requires --seq or --expr");
        std::vector<std::optional<Point>> cands;
        for (const auto& cs : a.candidates) cands.emplace_back(detail::point_arg(cs, "--candidate"));
        if (cands.empty()) cands.emplace_back(std::nullopt);
        bool ok = true;
        std::vector<SequenceAnalysis> all;
        for (const auto& cand : cands) {
            all.push_back(analyze_sequence(s, seq, cand, c.tol));
            if (all.back().converging_trend && !*all.back().converging_trend) ok = false;
        }
        if (c.format == "csv") {
            std::string t = "n";
            for (std::size_t k = 0; k < all.size(); ++k) t += ",residual_" + std::to_string(k + 1);
            t += "\n";
            for (std::size_t n = 0; n < seq.size(); ++n) {
                t += std::to_string(n + 1);
                for (const auto& an : all) t += "," + (an.residuals.empty() ? "" : format_double(an.residuals[n]));
                t += "\n";
            }
            return {t, ok ? kExitOk : kExitCheckFailed};
        }
        Json arr = Json::array();
        for (const auto& an : all) arr.push_back(to_json(an));
        j["analyses"] = arr;
        return json_out(j, ok ? kExitOk : kExitCheckFailed);
    }
    if (a.op == "u-check") {
        const UReport r = check_U_conditions(s, std::min<std::size_t>(samples, 1000), c.seed, tol);
        j["U1"] = to_json(r.u1);
        j["U2"] = to_json(r.u2);
        j["U2_prime"] = to_json(r.u2_prime);
        j["unique_limits"] = r.unique_limits;
        return json_out(j, r.unique_limits ? kExitOk : kExitCheckFailed);
    }
    if (a.op == "c-check") {
        need(a.gamma, "--gamma");
        const CReport r = check_C_conditions(s, detail::binary_arg(a.gamma, Interval::all()),
                                             std::min<std::size_t>(samples, 1000), c.seed, tol);
        j["applicable"] = r.applicable;
        j["C1"] = to_json(r.c1);
        j["C2"] = to_json(r.c2);
        j["openness"] = to_json(r.general);
        const bool ok = r.c1.pass && r.c2.pass && r.general.pass;
        return json_out(j, ok ? kExitOk : kExitCheckFailed);
    }
    if (a.op == "hausdorff") {
        need(a.gamma, "--gamma");
        need(a.x, "--x");
        need(a.y, "--y");
        const Point x = detail::point_arg(a.x, "--x"), y = detail::point_arg(a.y, "--y");
        const BinOpFn g = detail::binary_arg(a.gamma, Interval::all());
        try {
            const HausdorffWitness w = hausdorff_witness(s, g, x, y);
            const DisjointnessReport d = check_disjoint(s, x, w.r1, y, w.r, samples, c.seed);
            j["x"] = point_json(x);
            j["y"] = point_json(y);
            j["r1"] = num(w.r1);
            j["r"] = num(w.r);
            j["samples"] = d.samples;
            j["in_first"] = d.in_first;
            j["in_second"] = d.in_second;
            j["in_both"] = d.in_both;
            j["witness"] = d.witness ? point_json(*d.witness) : Json(nullptr);
            return json_out(j, d.in_both == 0 ? kExitOk : kExitCheckFailed);
        } catch (const HypothesisError& e) {
            j["refused"] = true;
            j["message"] = e.what();
            return json_out(j, kExitCheckFailed);
        }
    }
    if (a.op == "regenerate") {
        const OMetricSpace r = upward_regenerate(s);
        const auto reps = check_axioms(r, samples, c.seed, tol);
        j["output"] = space_summary(r);
        j["output_axioms"] = to_json(reps);
        return json_out(j, all_pass(reps) ? kExitOk : kExitCheckFailed);
    }
    throw UsageError("topology: unknown --op '" + a.op + "'");
}

struct FixpointArgs {
    std::string space, map, psi, delta = "fold", strategy = "balanced", x0;
    std::optional<double> s, k;
    double tol_fix = 1e-8;
    std::size_t max_iter = 10000;
    bool force = false;
};

inline Output cmd_fixpoint(const RunConfig& c, const FixpointArgs& a) {
    require_json(c, "fixpoint");
    const OMetricSpace s = load_space(a.space);
    if (a.map.empty() || a.psi.empty() || a.x0.empty()) throw UsageError("fixpoint requires --map, --psi and --x0");
    DeltaFamily delta = suzuki_delta(1.0);
    if (a.delta == "fold") {
        if (a.strategy != "balanced" && a.strategy != "left") throw UsageError("--strategy must be balanced or left");
        try {
            delta = fold_delta(s.o, a.strategy == "left" ? FoldStrategy::LeftFold : FoldStrategy::BalancedBinary, 1000,
                               c.seed);
        } catch (const HypothesisError& e) {
            return json_out(Json{{"space", space_summary(s)}, {"refused", true}, {"message", e.what()}},
                            kExitCheckFailed);
        }
    } else if (a.delta == "suzuki") {
        if (!a.s) throw UsageError("--delta suzuki requires --s");
        delta = suzuki_delta(*a.s);
    } else if (a.delta == "suzuki-prime") {
        if (!a.s || !a.k) throw UsageError("--delta suzuki-prime requires --s and --k");
        delta = suzuki_delta_prime(*a.s, *a.k);
    } else {
        throw UsageError("fixpoint: unknown --delta '" + a.delta + "'");
    }
    FixpointProblem p{s,
                      detail::map_arg(a.map, s.domain.dimension()),
                      detail::unary_arg(a.psi, s.interval),
                      delta,
                      detail::point_arg(a.x0, "--x0"),
                      a.tol_fix,
                      a.max_iter,
                      std::min<std::size_t>(c.samples, 2000),
                      c.seed,
                      5,
                      a.force,
                      {c.tol, c.tol}};
    const FixpointReport r = solve(p);
    Json hyp = Json::array();
    for (const auto& h : r.hypotheses) hyp.push_back(to_json(h));
    Json probes = Json::array();
    for (const auto& pr : r.probes)
        probes.push_back(Json{{"seed", pr.seed},
                              {"start", point_json(pr.start)},
                              {"converged", pr.converged},
                              {"terminal", point_json(pr.terminal)},
                              {"iterations", pr.iterations},
                              {"deviation", num(pr.deviation)}});
    Json j{{"space", space_summary(s)},
           {"map", a.map},
           {"psi", a.psi},
           {"delta", delta.name()},
           {"tol_fix", num(a.tol_fix)},
           {"refused", r.refused},
           {"converged", r.converged},
           {"iterations", r.iterations},
           {"fixed_point", r.fixed_point ? point_json(*r.fixed_point) : Json(nullptr)},
           {"fixed_point_residual", num(r.fixed_point_residual)},
           {"residual_chain_ok", r.residual_chain_ok},
           {"unique", r.unique},
           {"message", r.message},
           {"hypotheses", hyp},
           {"probes", probes},
           {"iterates", points_json(r.iterates)},
           {"residuals", num_array(r.residuals)}};
    return json_out(j, r.converged && !r.refused ? kExitOk : kExitCheckFailed);
}

struct SharpArgs {
    std::string theta = "ln1p", chain, grid;
    std::optional<double> alpha, n, actual, bs;
};

inline Output cmd_sharp(const RunConfig& c, const SharpArgs& a) {
    const ScalarFn th = detail::unary_arg(a.theta, kNonNegative);
    if (!a.grid.empty()) {
        const auto g = detail::list_arg(a.grid, "--grid");
        if (g.size() != 3 || g[2] < 1 || g[2] != std::floor(g[2])) throw UsageError("--grid expects lo,hi,steps");
        const auto rows = gap_surface(th, a.bs.value_or(1.0), {g[0], g[1], static_cast<std::size_t>(g[2])});
        if (c.format == "csv") {
            std::string t = "u,v,gap\n";
            for (const auto& r : rows) t += format_double(r.u) + "," + format_double(r.v) + "," + format_double(r.gap) + "\n";
            return {t, kExitOk};
        }
        Json arr = Json::array();
        for (const auto& r : rows) arr.push_back(Json{{"u", num(r.u)}, {"v", num(r.v)}, {"gap", num(r.gap)}});
        return json_out(Json{{"theta", th.source()}, {"s", num(a.bs.value_or(1.0))}, {"surface", arr}}, kExitOk);
    }
    std::vector<double> chain;
    if (!a.chain.empty()) {
        chain = detail::list_arg(a.chain, "--chain");
    } else if (a.alpha && a.n) {
        if (*a.n < 1 || *a.n != std::floor(*a.n)) throw UsageError("--n must be a positive integer");
        chain.assign(static_cast<std::size_t>(*a.n), *a.alpha);
    } else {
        throw UsageError("sharp requires --chain, --alpha with --n, or --grid");
    }
    const BoundComparison b = a.bs ? bmetric_sharp(chain, th, *a.bs, a.actual)
                                   : sharp_bound(chain, th, a.actual, std::min<std::size_t>(c.samples, 1000), c.seed);
    const bool ok = !b.subadditive || approx_leq(b.sharp, b.naive, c.tol);
    if (c.format == "csv") {
        std::string t = "n,naive,sharp,gap,actual\n";
        t += std::to_string(chain.size()) + "," + format_double(b.naive) + "," + format_double(b.sharp) + "," +
             format_double(b.gap) + "," + (b.actual ? format_double(*b.actual) : "") + "\n";
        return {t, ok ? kExitOk : kExitCheckFailed};
    }
    Json j{{"theta", th.source()},    {"chain", num_array(chain)}, {"naive", num(b.naive)},
           {"sharp", num(b.sharp)},   {"gap", num(b.gap)},         {"subadditive", b.subadditive},
           {"equidistant", b.equidistant}};
    j["actual"] = b.actual ? num(*b.actual) : Json(nullptr);
    if (a.bs) j["s"] = num(*a.bs);
    return json_out(j, ok ? kExitOk : kExitCheckFailed);
}

struct MatrixArgs {
    std::string op, in, sizes = "8,16,32,64";
    double tol_bet = 1e-9;
    std::optional<double> r, s;
    std::size_t n = 0;
};

inline Output cmd_matrix(const RunConfig& c, const MatrixArgs& a) {
    if (a.op == "spiral") {
        if (!a.r || a.n == 0) throw UsageError("matrix spiral requires --r and --n");
        const DistanceMatrix m = spiral_matrix(*a.r, a.n);
        if (c.format == "json") {
            Json rows = Json::array();
            for (std::size_t i = 0; i < m.order(); ++i) {
                Json row = Json::array();
                for (std::size_t j = 0; j < m.order(); ++j) row.push_back(num(m(i, j)));
                rows.push_back(row);
            }
            return json_out(rows, kExitOk);
        }
        return {m.to_csv(), kExitOk};
    }
    if (a.op == "quotients") {
        if (!a.r) throw UsageError("matrix quotients requires --r");
        std::vector<std::size_t> sizes;
        for (double v : detail::list_arg(a.sizes, "--sizes")) {
            if (v < 3 || v != std::floor(v)) throw UsageError("--sizes entries must be integers >= 3");
            sizes.push_back(static_cast<std::size_t>(v));
        }
        const auto rows = quotient_growth(*a.r, sizes);
        if (c.format == "csv") {
            std::string t = "n,q_max\n";
            for (const auto& q : rows) t += std::to_string(q.n) + "," + format_double(q.q_max) + "\n";
            return {t, kExitOk};
        }
        Json arr = Json::array();
        for (const auto& q : rows) arr.push_back(Json{{"n", q.n}, {"q_max", num(q.q_max)}});
        return json_out(Json{{"r", num(*a.r)}, {"table", arr}}, kExitOk);
    }
    require_json(c, "matrix " + a.op);
    if (a.in.empty()) throw UsageError("matrix " + a.op + " requires --in");
    const DistanceMatrix m = DistanceMatrix::load(a.in);
    if (a.op == "audit") {
        const AuditReport r = audit(m, a.tol_bet);
        Json bet = Json::array();
        for (const auto& t : r.betweenness) bet.push_back(triple_json(t));
        Json seqs = Json::array();
        for (const auto& [b, e] : r.betweenness_sequences) seqs.push_back(Json{b, e});
        Json j{{"order", r.order},
               {"triangle_holds", r.triangle_holds},
               {"worst_triple", r.worst_triple ? triple_json(*r.worst_triple) : Json(nullptr)},
               {"optimal_s", num(r.optimal_s)},
               {"quotient_sup_estimate", num(r.quotient_sup_estimate)},
               {"betweenness", bet},
               {"betweenness_sequences", seqs},
               {"superdiagonal_sum", num(r.superdiagonal_sum)},
               {"distinct_entries", r.distinct_entries}};
        return json_out(j, r.triangle_holds ? kExitOk : kExitCheckFailed);
    }
    if (a.op == "polygon") {
        if (!a.s) throw UsageError("matrix polygon requires --s");
        const PolygonReport r = polygon_bound_check(m, *a.s, c.tol);
        Json v = Json::array();
        for (const auto& x : r.violations)
            v.push_back(Json{{"i", x.i}, {"n", x.n}, {"lhs", num(x.lhs)}, {"bound", num(x.bound)}});
        return json_out(Json{{"s", num(r.s)}, {"pairs", r.pairs}, {"violations", v}},
                        r.violations.empty() ? kExitOk : kExitCheckFailed);
    }
    if (a.op == "constrained") {
        if (!a.s) throw UsageError("matrix constrained requires --s");
        const RichnessReport r = constrained_richness(m, *a.s, c.tol);
        Json j{{"s", num(r.s)},
               {"s_constrained", r.s_constrained},
               {"witness", r.witness ? triple_json(*r.witness) : Json(nullptr)},
               {"witness_quotient", num(r.witness_quotient)},
               {"partial_sums", num_array(r.partial_sums)},
               {"bound_ratios", num_array(r.bound_ratios)},
               {"min_ratio", num(r.min_ratio)},
               {"divergent_trend", r.divergent_trend}};
        return json_out(j, r.s_constrained ? kExitOk : kExitCheckFailed);
    }
    throw UsageError("matrix: unknown operation '" + a.op + "'");
}

// ---------------------------------------------------------------------------
// Entry point

/// Parses argv, dispatches, and writes the report to `out` or --out.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Checks, transforms and audits generalized metric spaces.", "ometric"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig cfg;
    app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    app.add_option("--samples", cfg.samples, "sample budget")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--tol", cfg.tol, "comparison tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", cfg.out, "write the report to a file");
    app.add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "sample the axioms of a space");
    check->add_option("--space", ca.space, "builtin:<name>, JSON descriptor or file")->required();
    check->add_option("--verify-witness", ca.verify, "re-test counterexamples from a report");

    TransformArgs ta;
    auto* tr = app.add_subcommand("transform", "build a new space from an existing one");
    tr->add_option("--space", ta.space)->required();
    tr->add_option("--kind", ta.kind)->required()->check(
        CLI::IsMember({"pushforward", "power", "to-metric", "dual", "product"}));
    tr->add_option("--theta", ta.theta);
    tr->add_option("--lambda", ta.lambda);
    tr->add_option("--r", ta.r);
    tr->add_option("--phi", ta.phi);
    tr->add_option("--ob", ta.ob, "target operation for pushforward");
    tr->add_option("--b", ta.b, "target base value for pushforward");
    tr->add_option("--with", ta.with, "further factor spaces for product");
    tr->add_option("--verify-samples", ta.verify_samples)->check(CLI::PositiveNumber);

    TopologyArgs to;
    auto* top = app.add_subcommand("topology", "balls, sequences and separation");
    top->add_option("--space", to.space)->required();
    top->add_option("--op", to.op)->required()->check(
        CLI::IsMember({"ball", "sequence", "u-check", "c-check", "hausdorff", "regenerate"}));
    top->add_option("--center", to.center);
    top->add_option("--radius", to.radius);
    top->add_option("--points", to.points);
    top->add_option("--seq", to.seq, "JSON array of points");
    top->add_option("--expr", to.expr, "sequence term as an expression in n");
    top->add_option("--count", to.count)->check(CLI::PositiveNumber);
    top->add_option("--candidate", to.candidates);
    top->add_option("--gamma", to.gamma);
    top->add_option("--x", to.x);
    top->add_option("--y", to.y);

    FixpointArgs fa;
    auto* fp = app.add_subcommand("fixpoint", "Picard iteration with hypothesis checks");
    fp->add_option("--space", fa.space)->required();
    fp->add_option("--map", fa.map, "expression in x; ';' separates components");
    fp->add_option("--psi", fa.psi);
    fp->add_option("--delta", fa.delta)->check(CLI::IsMember({"fold", "suzuki", "suzuki-prime"}));
    fp->add_option("--strategy", fa.strategy);
    fp->add_option("--s", fa.s);
    fp->add_option("--k", fa.k);
    fp->add_option("--x0", fa.x0);
    fp->add_option("--tol", fa.tol_fix, "fixed-point tolerance")->check(CLI::PositiveNumber);
    fp->add_option("--max-iter", fa.max_iter)->check(CLI::PositiveNumber);
    fp->add_flag("--force", fa.force, "iterate even when hypotheses fail");

    SharpArgs sa;
    auto* sh = app.add_subcommand("sharp", "compare naive and sharp chain bounds");
    sh->add_option("--theta", sa.theta);
    sh->add_option("--chain", sa.chain, "comma list or JSON array");
    sh->add_option("--alpha", sa.alpha);
    sh->add_option("--n", sa.n);
    sh->add_option("--actual", sa.actual);
    sh->add_option("--s", sa.bs, "b-metric constant");
    sh->add_option("--grid", sa.grid, "lo,hi,steps");

    MatrixArgs ma;
    auto* mx = app.add_subcommand("matrix", "audit finite distance matrices");
    mx->require_subcommand(1);
    auto add_in = [&](CLI::App* sub) { sub->add_option("--in", ma.in)->required(); };
    auto* m_audit = mx->add_subcommand("audit", "exhaustive triple scan of a matrix");
    add_in(m_audit);
    m_audit->add_option("--tol-bet", ma.tol_bet)->check(CLI::PositiveNumber);
    auto* m_spiral = mx->add_subcommand("spiral", "generate the spiral distance matrix");
    m_spiral->add_option("--r", ma.r)->required();
    m_spiral->add_option("--n", ma.n)->required();
    auto* m_quot = mx->add_subcommand("quotients", "largest triangle quotient of spiral matrices by order");
    m_quot->add_option("--r", ma.r)->required();
    m_quot->add_option("--sizes", ma.sizes);
    auto* m_poly = mx->add_subcommand("polygon", "check the polygon bound for a constant s");
    add_in(m_poly);
    m_poly->add_option("--s", ma.s)->required();
    auto* m_con = mx->add_subcommand("constrained", "check the relaxed triangle with s < 1");
    add_in(m_con);
    m_con->add_option("--s", ma.s)->required();
    for (auto* sub : {m_audit, m_spiral, m_quot, m_poly, m_con}) sub->fallthrough();
    for (auto* sub : {check, tr, top, fp, sh, mx}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? kExitOk : kExitUsage;
    }

    Output res;
    try {
        if (*check) res = cmd_check(cfg, ca);
        else if (*tr) res = cmd_transform(cfg, ta);
        else if (*top) res = cmd_topology(cfg, to);
        else if (*fp) res = cmd_fixpoint(cfg, fa);
        else if (*sh) res = cmd_sharp(cfg, sa);
        else {
            for (auto* sub : mx->get_subcommands()) ma.op = sub->get_name();
            if (cfg.format == "json" && ma.op == "spiral" && !app.get_option("--format")->count()) cfg.format = "csv";
            res = cmd_matrix(cfg, ma);
        }
    } catch (const ParseError& e) {
        err << "error: expression: " << e.what() << "\n";
        return kExitUsage;
    } catch (const HypothesisError& e) {
        err << "error: hypothesis: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const DomainError& e) {
        err << "error: domain: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    if (cfg.out.empty()) {
        out << res.text;
    } else {
        std::ofstream f(cfg.out, std::ios::binary);
        if (!f) {
            err << "error: cannot write '" << cfg.out << "'\n";
            return kExitUsage;
        }
        f << res.text;
    }
    return res.code;
}

}  // namespace ometric::cli

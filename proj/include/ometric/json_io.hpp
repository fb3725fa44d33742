#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "common.hpp"
#include "core.hpp"
#include "expr.hpp"
#include "scalarfn.hpp"

namespace ometric {

using Json = nlohmann::ordered_json;

/// Malformed input; the message names the offending field.
class DescriptorError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite doubles become the strings "inf", "-inf" and "nan".
inline Json num(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

inline Json num_array(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline Json point_json(const Point& p) { return num_array(p); }

inline Json points_json(const std::vector<Point>& ps) {
    Json a = Json::array();
    for (const auto& p : ps) a.push_back(point_json(p));
    return a;
}

namespace detail {

inline void emit(const Json& j, std::string& out, int indent, int depth) {
    const auto nl = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(d * indent), ' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                nl(depth + 1);
                out += Json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                emit(it.value(), out, indent, depth + 1);
            }
            nl(depth);
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                nl(depth + 1);
                emit(v, out, indent, depth + 1);
            }
            nl(depth);
            out += ']';
            return;
        }
        case Json::value_t::number_float: out += format_double(j.get<double>()); return;
        default: out += j.dump(); return;
    }
}

}  // namespace detail

/// Serializes with every float at 17 significant digits.
inline std::string dump(const Json& j, int indent = 2) {
    std::string out;
    detail::emit(j, out, indent, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Space descriptors

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& why) {
    throw DescriptorError("descriptor field '" + field + "': " + why);
}

inline double field_num(const Json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    bad_field(field, "expected a number");
}

inline std::vector<std::string> coordinate_names(char base, std::size_t dim) {
    if (dim == 1) return {std::string(1, base)};
    std::vector<std::string> v;
    for (std::size_t i = 1; i <= dim; ++i) v.push_back(std::string(1, base) + std::to_string(i));
    return v;
}

inline Domain parse_domain(const Json& j) {
    if (!j.is_object()) bad_field("domain", "expected an object");
    if (!j.contains("kind") || !j["kind"].is_string()) bad_field("domain.kind", "expected \"line\", \"box\" or \"finite\"");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "line" || kind == "box") {
        std::size_t dim = 1;
        if (kind == "box") {
            if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
                bad_field("domain.dim", "expected a positive integer");
            dim = static_cast<std::size_t>(j["dim"].get<long long>());
        }
        const double lo = j.contains("lo") ? field_num(j["lo"], "domain.lo") : -10.0;
        const double hi = j.contains("hi") ? field_num(j["hi"], "domain.hi") : 10.0;
        if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) bad_field("domain.lo", "need finite lo < hi");
        Domain d = Domain::box(dim, lo, hi);
        if (j.value("closed", false))
            for (auto& s : d.support) s = Interval::closed(lo, hi);
        return d;
    }
    if (kind == "finite") {
        if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
            bad_field("domain.points", "expected a non-empty array");
        std::vector<Point> pts;
        for (const auto& p : j["points"]) {
            if (p.is_number()) {
                pts.push_back({p.get<double>()});
            } else if (p.is_array()) {
                Point q;
                for (const auto& c : p) q.push_back(field_num(c, "domain.points"));
                pts.push_back(std::move(q));
            } else {
                bad_field("domain.points", "entries must be numbers or arrays");
            }
            if (pts.back().size() != pts.front().size()) bad_field("domain.points", "points differ in dimension");
        }
        return Domain::finite(std::move(pts));
    }
    bad_field("domain.kind", "unknown kind '" + kind + "'");
}

inline std::pair<std::string, Params> split_builtin(std::string_view ref) {
    std::string_view body = ref.substr(std::string_view("builtin:").size());
    const auto q = body.find('?');
    std::string name(body.substr(0, q));
    Params params;
    if (q != std::string_view::npos) {
        std::string_view rest = body.substr(q + 1);
        while (!rest.empty()) {
            const auto amp = rest.find('&');
            const std::string_view kv = rest.substr(0, amp);
            const auto eq = kv.find('=');
            if (eq == std::string_view::npos || eq == 0)
                throw DescriptorError("builtin reference '" + std::string(ref) + "': parameter '" + std::string(kv) +
                                      "' is not key=value");
            params[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
            if (amp == std::string_view::npos) break;
            rest = rest.substr(amp + 1);
        }
    }
    return {name, params};
}

inline bool is_builtin_ref(std::string_view s) { return s.rfind("builtin:", 0) == 0; }

}  // namespace detail

/// Resolves "builtin:<name>?p=v&q=w".
inline OMetricSpace builtin_from_ref(std::string_view ref) {
    auto [name, params] = detail::split_builtin(ref);
    try {
        return builtin(name, params);
    } catch (const std::invalid_argument& e) {
        throw DescriptorError(e.what());
    }
}

/// Builds a space from a JSON descriptor.
inline OMetricSpace space_from_json(const Json& j) {
    using detail::bad_field;
    if (!j.is_object()) throw DescriptorError("space descriptor must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const char* known[] = {"name", "a", "interval", "dist", "o", "domain"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
            std::end(known))
            bad_field(it.key(), "unknown field");
    }
    std::string name = "custom";
    if (j.contains("name")) {
        if (!j["name"].is_string()) bad_field("name", "expected a string");
        name = j["name"].get<std::string>();
    }
    if (!j.contains("a")) bad_field("a", "missing");
    const double a = detail::field_num(j["a"], "a");

    if (!j.contains("interval")) bad_field("interval", "missing");
    const Json& ij = j["interval"];
    if (!ij.is_array() || ij.size() != 2) bad_field("interval", "expected [lo, hi]");
    const double lo = detail::field_num(ij[0], "interval"), hi = detail::field_num(ij[1], "interval");
    if (!(lo <= hi)) bad_field("interval", "lo must not exceed hi");
    const Interval I = Interval::closed(lo, hi);
    if (!I.contains(a)) bad_field("a", "base value not inside the interval");

    const Domain domain = j.contains("domain") ? detail::parse_domain(j["domain"]) : Domain::line();

    if (!j.contains("dist") || !j["dist"].is_string()) bad_field("dist", "expected an expression or builtin reference");
    const std::string dtext = j["dist"].get<std::string>();
    DistFn dist;
    if (detail::is_builtin_ref(dtext)) {
        const OMetricSpace b = builtin_from_ref(dtext);
        if (b.domain.dimension() != domain.dimension()) bad_field("dist", "builtin dimension does not match the domain");
        dist = b.dist;
    } else {
        const std::size_t dim = domain.dimension();
        auto vars = detail::coordinate_names('x', dim);
        const auto ys = detail::coordinate_names('y', dim);
        vars.insert(vars.end(), ys.begin(), ys.end());
        Expr e;
        try {
            e = Expr::parse(dtext, vars);
        } catch (const ParseError& err) {
            bad_field("dist", err.what());
        }
        dist = [e](const Point& x, const Point& y) {
            std::vector<double> args(x.begin(), x.end());
            args.insert(args.end(), y.begin(), y.end());
            return e(std::span<const double>(args));
        };
    }

    if (!j.contains("o") || !j["o"].is_string()) bad_field("o", "expected an expression or builtin reference");
    const std::string otext = j["o"].get<std::string>();
    BinOpFn o = catalog::add();
    if (detail::is_builtin_ref(otext)) {
        const std::string ref = otext.substr(8);
        if (auto cat = catalog::binop_by_name(ref)) {
            o = *cat;
        } else {
            try {
                o = builtin_from_ref(otext).o;
            } catch (const DescriptorError&) {
                bad_field("o", "unknown builtin operation '" + ref + "'");
            }
        }
    } else {
        try {
            o = parse_binop(otext, I);
        } catch (const ParseError& err) {
            bad_field("o", err.what());
        }
    }
    return make_space(name, domain, dist, o, a, I);
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw DescriptorError(what + ": invalid JSON: " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DescriptorError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Accepts a builtin reference, inline JSON (leading '{') or a file path.
inline OMetricSpace load_space(const std::string& arg) {
    if (detail::is_builtin_ref(arg)) return builtin_from_ref(arg);
    const auto p = arg.find_first_not_of(" \t\r\n");
    const std::string text = (p != std::string::npos && arg[p] == '{') ? arg : read_file(arg);
    return space_from_json(parse_json_text(text, "space descriptor"));
}

/// Reads points from a JSON array: numbers are 1-D points.
inline std::vector<Point> points_from_json(const Json& j, const std::string& field) {
    if (!j.is_array()) throw DescriptorError(field + ": expected a JSON array");
    std::vector<Point> out;
    for (const auto& e : j) {
        if (e.is_number()) {
            out.push_back({e.get<double>()});
        } else if (e.is_array()) {
            Point p;
            for (const auto& c : e) p.push_back(detail::field_num(c, field));
            out.push_back(std::move(p));
        } else {
            throw DescriptorError(field + ": entries must be numbers or arrays");
        }
    }
    return out;
}

}  // namespace ometric

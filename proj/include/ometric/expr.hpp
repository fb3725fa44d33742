#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ometric {

/// Syntax or name-resolution failure while parsing an expression.
/// `position` is the 0-based character offset of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// A compiled infix arithmetic expression over a fixed list of variable
/// names. Immutable once parsed; copies share the tree.
///
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := ('-'|'+') unary | factor
///   factor := atom ('^' unary)?
///   atom   := number | ident | ident '(' expr (',' expr)? ')' | '(' expr ')'
///
/// Functions: ln exp sqrt abs floor ceil (unary), min max (binary).
/// Constants: e pi.
class Expr {
public:
    static Expr parse(std::string_view text, std::vector<std::string> variables) {
        Parser p{text, variables, 0, {}};
        auto root = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size()) throw ParseError("unexpected character '" + std::string(1, text[p.pos]) + "'", p.pos);
        Expr e;
        e.text_ = std::string(text);
        e.variables_ = std::move(variables);
        e.used_ = std::move(p.used);
        e.used_.resize(e.variables_.size(), false);
        e.root_ = std::move(root);
        return e;
    }

    /// Raw evaluation; may return NaN or infinity. Callers wrap this with
    /// domain checks.
    double operator()(std::span<const double> args) const { return eval(*root_, args); }

    double operator()(double u) const {
        const double a[1] = {u};
        return (*this)(std::span<const double>(a, 1));
    }
    double operator()(double u, double v) const {
        const double a[2] = {u, v};
        return (*this)(std::span<const double>(a, 2));
    }

    const std::string& text() const { return text_; }
    const std::vector<std::string>& variables() const { return variables_; }
    bool uses(std::size_t slot) const { return slot < used_.size() && used_[slot]; }

private:
    enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Ln, Exp, Sqrt, Abs, Floor, Ceil, Min, Max };

    struct Node {
        Op op;
        double value = 0.0;
        std::size_t slot = 0;
        std::unique_ptr<Node> lhs, rhs;
    };

    static double eval(const Node& n, std::span<const double> args) {
        switch (n.op) {
            case Op::Num: return n.value;
            case Op::Var: return n.slot < args.size() ? args[n.slot] : std::nan("");
            case Op::Neg: return -eval(*n.lhs, args);
            case Op::Add: return eval(*n.lhs, args) + eval(*n.rhs, args);
            case Op::Sub: return eval(*n.lhs, args) - eval(*n.rhs, args);
            case Op::Mul: return eval(*n.lhs, args) * eval(*n.rhs, args);
            case Op::Div: return eval(*n.lhs, args) / eval(*n.rhs, args);
            case Op::Pow: return std::pow(eval(*n.lhs, args), eval(*n.rhs, args));
            case Op::Ln: return std::log(eval(*n.lhs, args));
            case Op::Exp: return std::exp(eval(*n.lhs, args));
            case Op::Sqrt: return std::sqrt(eval(*n.lhs, args));
            case Op::Abs: return std::abs(eval(*n.lhs, args));
            case Op::Floor: return std::floor(eval(*n.lhs, args));
            case Op::Ceil: return std::ceil(eval(*n.lhs, args));
            case Op::Min: return std::min(eval(*n.lhs, args), eval(*n.rhs, args));
            case Op::Max: return std::max(eval(*n.lhs, args), eval(*n.rhs, args));
        }
        return std::nan("");
    }

    using NodePtr = std::unique_ptr<Node>;

    static NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
        auto n = std::make_unique<Node>();
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    struct Parser {
        std::string_view src;
        const std::vector<std::string>& vars;
        std::size_t pos;
        std::vector<bool> used;

        void skip_ws() {
            while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
        }
        bool accept(char c) {
            skip_ws();
            if (pos < src.size() && src[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        void expect(char c) {
            if (!accept(c)) {
                if (pos >= src.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos);
                throw ParseError(std::string("expected '") + c + "'", pos);
            }
        }

        NodePtr parse_expr() {
            auto lhs = parse_term();
            for (;;) {
                if (accept('+')) lhs = make(Op::Add, std::move(lhs), parse_term());
                else if (accept('-')) lhs = make(Op::Sub, std::move(lhs), parse_term());
                else return lhs;
            }
        }
        NodePtr parse_term() {
            auto lhs = parse_unary();
            for (;;) {
                if (accept('*')) lhs = make(Op::Mul, std::move(lhs), parse_unary());
                else if (accept('/')) lhs = make(Op::Div, std::move(lhs), parse_unary());
                else return lhs;
            }
        }
        NodePtr parse_unary() {
            if (accept('-')) return make(Op::Neg, parse_unary());
            if (accept('+')) return parse_unary();
            return parse_factor();
        }
        NodePtr parse_factor() {
            auto base = parse_atom();
            if (accept('^')) return make(Op::Pow, std::move(base), parse_unary());
            return base;
        }
        NodePtr parse_atom() {
            skip_ws();
            if (pos >= src.size()) throw ParseError("unexpected end of input", pos);
            const char c = src[pos];
            if (c == '(') {
                ++pos;
                auto inner = parse_expr();
                expect(')');
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
            throw ParseError(std::string("unexpected character '") + c + "'", pos);
        }
        NodePtr parse_number() {
            const std::size_t start = pos;
            while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
            if (pos < src.size() && src[pos] == '.') {
                ++pos;
                while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
            }
            // Exponent only when followed by a digit, so "2e" is not swallowed.
            if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
                std::size_t q = pos + 1;
                if (q < src.size() && (src[q] == '+' || src[q] == '-')) ++q;
                if (q < src.size() && std::isdigit(static_cast<unsigned char>(src[q]))) {
                    pos = q;
                    while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
                }
            }
            const std::string lit(src.substr(start, pos - start));
            if (lit == ".") throw ParseError("malformed number", start);
            auto n = make(Op::Num);
            n->value = std::strtod(lit.c_str(), nullptr);
            return n;
        }
        NodePtr parse_ident() {
            const std::size_t start = pos;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                ++pos;
            const std::string name(src.substr(start, pos - start));
            skip_ws();
            const bool call = pos < src.size() && src[pos] == '(';
            if (call) {
                Op op;
                int arity = 1;
                if (name == "ln") op = Op::Ln;
                else if (name == "exp") op = Op::Exp;
                else if (name == "sqrt") op = Op::Sqrt;
                else if (name == "abs") op = Op::Abs;
                else if (name == "floor") op = Op::Floor;
                else if (name == "ceil") op = Op::Ceil;
                else if (name == "min") { op = Op::Min; arity = 2; }
                else if (name == "max") { op = Op::Max; arity = 2; }
                else throw ParseError("unknown function '" + name + "'", start);
                ++pos;
                auto a = parse_expr();
                NodePtr b;
                if (accept(',')) {
                    if (arity != 2) throw ParseError("function '" + name + "' takes one argument", pos);
                    b = parse_expr();
                } else if (arity == 2) {
                    throw ParseError("function '" + name + "' takes two arguments", pos);
                }
                expect(')');
                return make(op, std::move(a), std::move(b));
            }
            for (std::size_t i = 0; i < vars.size(); ++i) {
                if (vars[i] == name) {
                    if (used.size() < vars.size()) used.resize(vars.size(), false);
                    used[i] = true;
                    auto n = make(Op::Var);
                    n->slot = i;
                    return n;
                }
            }
            if (name == "e" || name == "pi") {
                auto n = make(Op::Num);
                n->value = name == "e" ? std::exp(1.0) : std::acos(-1.0);
                return n;
            }
            throw ParseError("unknown identifier '" + name + "'", start);
        }
    };

    std::string text_;
    std::vector<std::string> variables_;
    std::vector<bool> used_;
    std::shared_ptr<const Node> root_;
};

}  // namespace ometric

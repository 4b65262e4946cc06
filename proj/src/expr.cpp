#include "lagvar/expr.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace lagvar {

namespace {

std::shared_ptr<const ExprNode> make_node(Op op, Expr lhs, Expr rhs = Expr{std::shared_ptr<const ExprNode>{}}) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

bool is_unary(Op op) {
    return op == Op::Neg || op == Op::Sin || op == Op::Cos || op == Op::Exp || op == Op::Log ||
           op == Op::Sqrt;
}

bool is_binary(Op op) {
    return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div || op == Op::Pow;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

const char* function_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sqrt: return "sqrt";
        default: return "";
    }
}

// Unary ops fold only when the result is finite and the argument is inside the domain.
bool try_fold_unary(Op op, double x, double& out) {
    switch (op) {
        case Op::Neg: out = -x; break;
        case Op::Sin: out = std::sin(x); break;
        case Op::Cos: out = std::cos(x); break;
        case Op::Exp: out = std::exp(x); break;
        case Op::Log:
            if (x <= 0.0) return false;
            out = std::log(x);
            break;
        case Op::Sqrt:
            if (x <= 0.0) return false;
            out = std::sqrt(x);
            break;
        default: return false;
    }
    return std::isfinite(out);
}

bool pow_in_domain(double base, double exponent) {
    if (base == 0.0 && exponent < 0.0) return false;
    if (base < 0.0 && exponent != std::trunc(exponent)) return false;
    return true;
}

Expr make_unary(Op op, const Expr& a) {
    if (a.is_constant()) {
        double v;
        if (try_fold_unary(op, a.constant_value(), v)) return Expr::constant(v);
    }
    if (op == Op::Neg && a.op() == Op::Neg) return a.node().lhs;
    return Expr(make_node(op, a));
}

}  // namespace

// ---------------------------------------------------------------------------
// Expr

Expr::Expr() : node_(std::make_shared<ExprNode>()) {}

Expr::Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

Expr Expr::constant(double value) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Constant;
    n->value = value;
    return Expr(n);
}

Expr Expr::variable(Var v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Variable;
    n->var = v;
    return Expr(n);
}

Op Expr::op() const { return node_->op; }

bool Expr::is_constant(double value) const {
    return node_->op == Op::Constant && node_->value == value;
}

double Expr::constant_value() const {
    if (node_->op != Op::Constant) throw std::logic_error("expression is not a constant");
    return node_->value;
}

bool Expr::depends_on(Var v) const {
    const auto& n = *node_;
    if (n.op == Op::Constant) return false;
    if (n.op == Op::Variable) return n.var == v;
    if (n.lhs.depends_on(v)) return true;
    return is_binary(n.op) && n.rhs.depends_on(v);
}

int Expr::max_coordinate() const {
    const auto& n = *node_;
    if (n.op == Op::Constant) return 0;
    if (n.op == Op::Variable) return n.var.index;
    int m = n.lhs.max_coordinate();
    if (is_binary(n.op)) m = std::max(m, n.rhs.max_coordinate());
    return m;
}

std::size_t Expr::node_count() const {
    const auto& n = *node_;
    if (n.op == Op::Constant || n.op == Op::Variable) return 1;
    std::size_t c = 1 + n.lhs.node_count();
    if (is_binary(n.op)) c += n.rhs.node_count();
    return c;
}

std::string Expr::str() const {
    const auto& n = *node_;
    switch (n.op) {
        case Op::Constant: {
            if (n.value < 0.0 || std::signbit(n.value)) return "(" + format_double(n.value) + ")";
            return format_double(n.value);
        }
        case Op::Variable:
            return n.var.is_time() ? std::string("t") : "z" + std::to_string(n.var.index);
        case Op::Neg: return "(-" + n.lhs.str() + ")";
        case Op::Add: return "(" + n.lhs.str() + " + " + n.rhs.str() + ")";
        case Op::Sub: return "(" + n.lhs.str() + " - " + n.rhs.str() + ")";
        case Op::Mul: return "(" + n.lhs.str() + "*" + n.rhs.str() + ")";
        case Op::Div: return "(" + n.lhs.str() + "/" + n.rhs.str() + ")";
        case Op::Pow: return "(" + n.lhs.str() + "^" + n.rhs.str() + ")";
        default: return std::string(function_name(n.op)) + "(" + n.lhs.str() + ")";
    }
}

// ---------------------------------------------------------------------------
// Builders

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() + b.constant_value());
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    if (b.op() == Op::Neg) return a - b.node().lhs;
    return Expr(make_node(Op::Add, a, b));
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() - b.constant_value());
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return -b;
    if (b.op() == Op::Neg) return a + b.node().lhs;
    return Expr(make_node(Op::Sub, a, b));
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() * b.constant_value());
    if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    if (a.is_constant(-1.0)) return -b;
    if (b.is_constant(-1.0)) return -a;
    if (a.op() == Op::Neg && b.op() == Op::Neg) return a.node().lhs * b.node().lhs;
    if (a.op() == Op::Neg) return -(a.node().lhs * b);
    if (b.op() == Op::Neg) return -(a * b.node().lhs);
    return Expr(make_node(Op::Mul, a, b));
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
        return Expr::constant(a.constant_value() / b.constant_value());
    if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expr::constant(0.0);
    if (b.is_constant(1.0)) return a;
    if (b.is_constant(-1.0)) return -a;
    return Expr(make_node(Op::Div, a, b));
}

Expr operator-(const Expr& a) { return make_unary(Op::Neg, a); }

Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }

Expr pow(const Expr& base, double exponent) {
    if (exponent == 0.0) return Expr::constant(1.0);
    if (exponent == 1.0) return base;
    if (base.is_constant() && pow_in_domain(base.constant_value(), exponent)) {
        double v = std::pow(base.constant_value(), exponent);
        if (std::isfinite(v)) return Expr::constant(v);
    }
    if (base.op() == Op::Pow) {
        // (u^a)^b = u^(ab) only when it cannot change the sign or domain.
        double inner = base.node().rhs.constant_value();
        double outer_int = std::trunc(exponent);
        if (inner == std::trunc(inner) && exponent == outer_int)
            return pow(base.node().lhs, inner * exponent);
    }
    return Expr(make_node(Op::Pow, base, Expr::constant(exponent)));
}

Expr sin(const Expr& a) { return make_unary(Op::Sin, a); }
Expr cos(const Expr& a) { return make_unary(Op::Cos, a); }
Expr exp(const Expr& a) { return make_unary(Op::Exp, a); }
Expr log(const Expr& a) { return make_unary(Op::Log, a); }
Expr sqrt(const Expr& a) { return make_unary(Op::Sqrt, a); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double eval_node(const ExprNode& n, double t, std::span<const double> z) {
    auto fail = [&](const char* what) -> double {
        throw DomainError(what, Expr(std::shared_ptr<const ExprNode>(std::shared_ptr<const ExprNode>{}, &n)).str());
    };
    double r = 0.0;
    switch (n.op) {
        case Op::Constant: return n.value;
        case Op::Variable:
            if (n.var.is_time()) return t;
            if (static_cast<std::size_t>(n.var.index) > z.size()) return fail("coordinate index out of range");
            return z[n.var.index - 1];
        case Op::Neg: return -eval_node(n.lhs.node(), t, z);
        case Op::Sin: r = std::sin(eval_node(n.lhs.node(), t, z)); break;
        case Op::Cos: r = std::cos(eval_node(n.lhs.node(), t, z)); break;
        case Op::Exp: r = std::exp(eval_node(n.lhs.node(), t, z)); break;
        case Op::Log: {
            double x = eval_node(n.lhs.node(), t, z);
            if (!(x > 0.0)) return fail("log of nonpositive value");
            r = std::log(x);
            break;
        }
        case Op::Sqrt: {
            double x = eval_node(n.lhs.node(), t, z);
            if (!(x > 0.0)) return fail("sqrt of nonpositive value");
            r = std::sqrt(x);
            break;
        }
        case Op::Add: r = eval_node(n.lhs.node(), t, z) + eval_node(n.rhs.node(), t, z); break;
        case Op::Sub: r = eval_node(n.lhs.node(), t, z) - eval_node(n.rhs.node(), t, z); break;
        case Op::Mul: r = eval_node(n.lhs.node(), t, z) * eval_node(n.rhs.node(), t, z); break;
        case Op::Div: {
            double num = eval_node(n.lhs.node(), t, z);
            double den = eval_node(n.rhs.node(), t, z);
            if (den == 0.0) return fail("division by zero");
            r = num / den;
            break;
        }
        case Op::Pow: {
            double base = eval_node(n.lhs.node(), t, z);
            double e = n.rhs.node().value;
            if (!pow_in_domain(base, e)) return fail("power outside its domain");
            if (e == 2.0)
                r = base * base;
            else if (e == -1.0)
                r = 1.0 / base;
            else
                r = std::pow(base, e);
            break;
        }
    }
    if (!std::isfinite(r)) return fail("non-finite result");
    return r;
}

}  // namespace

double eval(const Expr& e, double t, std::span<const double> z) { return eval_node(e.node(), t, z); }

// ---------------------------------------------------------------------------
// Differentiation

Expr differentiate(const Expr& e, Var v) {
    const auto& n = e.node();
    switch (n.op) {
        case Op::Constant: return Expr::constant(0.0);
        case Op::Variable: return Expr::constant(n.var == v ? 1.0 : 0.0);
        default: break;
    }
    if (!e.depends_on(v)) return Expr::constant(0.0);
    const Expr& u = n.lhs;
    Expr du = differentiate(u, v);
    switch (n.op) {
        case Op::Neg: return -du;
        case Op::Sin: return cos(u) * du;
        case Op::Cos: return -(sin(u) * du);
        case Op::Exp: return e * du;
        case Op::Log: return du / u;
        case Op::Sqrt: return du / (2.0 * e);
        case Op::Add: return du + differentiate(n.rhs, v);
        case Op::Sub: return du - differentiate(n.rhs, v);
        case Op::Mul: return du * n.rhs + u * differentiate(n.rhs, v);
        case Op::Div: {
            Expr dw = differentiate(n.rhs, v);
            if (dw.is_constant(0.0)) return du / n.rhs;
            return (du * n.rhs - u * dw) / pow(n.rhs, 2.0);
        }
        case Op::Pow: {
            double c = n.rhs.constant_value();
            return c * pow(u, c - 1.0) * du;
        }
        default: return Expr::constant(0.0);
    }
}

Expr simplify(const Expr& e) {
    const auto& n = e.node();
    if (n.op == Op::Constant || n.op == Op::Variable) return e;
    Expr a = simplify(n.lhs);
    switch (n.op) {
        case Op::Neg: return -a;
        case Op::Sin: return sin(a);
        case Op::Cos: return cos(a);
        case Op::Exp: return exp(a);
        case Op::Log: return log(a);
        case Op::Sqrt: return sqrt(a);
        case Op::Pow: return pow(a, n.rhs.constant_value());
        default: break;
    }
    Expr b = simplify(n.rhs);
    switch (n.op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
        default: return e;
    }
}

bool structurally_equal(const Expr& a, const Expr& b) {
    const auto& x = a.node();
    const auto& y = b.node();
    if (x.op != y.op) return false;
    if (x.op == Op::Constant) return std::bit_cast<std::uint64_t>(x.value) == std::bit_cast<std::uint64_t>(y.value);
    if (x.op == Op::Variable) return x.var == y.var;
    if (!structurally_equal(x.lhs, y.lhs)) return false;
    return !is_binary(x.op) || structurally_equal(x.rhs, y.rhs);
}

// ---------------------------------------------------------------------------
// Parser
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 't' | 'z'<int> | 'pi' | func '(' expr ')' | '(' expr ')'

namespace {

class Parser {
public:
    Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

    Expr parse_all() {
        skip_ws();
        if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
        return e;
    }

private:
    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = Expr(make_node(Op::Add, lhs, parse_term()));
            else if (accept('-'))
                lhs = Expr(make_node(Op::Sub, lhs, parse_term()));
            else
                return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = Expr(make_node(Op::Mul, lhs, parse_unary()));
            else if (accept('/'))
                lhs = Expr(make_node(Op::Div, lhs, parse_unary()));
            else
                return lhs;
        }
    }

    Expr parse_unary() {
        if (accept('-')) {
            Expr a = parse_unary();
            if (a.is_constant()) return Expr::constant(-a.constant_value());
            return Expr(make_node(Op::Neg, a));
        }
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        skip_ws();
        std::size_t at = pos_;
        if (accept('^')) {
            Expr exponent = simplify(parse_unary());
            if (!exponent.is_constant()) throw ParseError("exponent must be a constant", at + 1);
            return Expr(make_node(Op::Pow, base, Expr::constant(exponent.constant_value())));
        }
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        double value = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc{} || res.ptr != text_.data() + pos_) throw ParseError("malformed number", start);
        return Expr::constant(value);
    }

    Expr parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string_view id = text_.substr(start, pos_ - start);
        if (id == "t") return Expr::t();
        if (id == "pi") return Expr::constant(std::numbers::pi);
        if (id.size() >= 2 && id[0] == 'z' &&
            std::all_of(id.begin() + 1, id.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            int d = 0;
            std::from_chars(id.data() + 1, id.data() + id.size(), d);
            if (d < 1 || d > dim_)
                throw ParseError("variable index out of range: " + std::string(id) + " (dimension " +
                                     std::to_string(dim_) + ")",
                                 start);
            return Expr::z(d);
        }
        Op op;
        if (id == "sin")
            op = Op::Sin;
        else if (id == "cos")
            op = Op::Cos;
        else if (id == "exp")
            op = Op::Exp;
        else if (id == "log")
            op = Op::Log;
        else if (id == "sqrt")
            op = Op::Sqrt;
        else
            throw ParseError("unknown identifier '" + std::string(id) + "'", start);
        expect('(');
        Expr arg = parse_expr();
        expect(')');
        return Expr(make_node(op, arg));
    }
};

}  // namespace

Expr parse(std::string_view text, int dim) { return Parser(text, dim).parse_all(); }

}  // namespace lagvar

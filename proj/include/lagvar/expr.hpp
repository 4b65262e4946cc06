#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lagvar {

/// Thrown by parse() on malformed input. `position` is a 0-based byte offset.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Thrown by eval() when a node leaves its domain (division by zero, log or
/// sqrt of a nonpositive value, invalid power, non-finite result).
class DomainError : public std::runtime_error {
public:
    DomainError(const std::string& what, std::string node)
        : std::runtime_error(what + " in `" + node + "`"), node_(std::move(node)) {}

    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

enum class Op {
    Constant,
    Variable,
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
};

/// Variable id: 0 is time t, d >= 1 is coordinate z_d.
struct Var {
    int index = 0;

    static constexpr Var time() { return Var{0}; }
    static constexpr Var coord(int d) { return Var{d}; }
    bool is_time() const { return index == 0; }
    friend bool operator==(Var, Var) = default;
};

struct ExprNode;

/// Immutable scalar expression in t and z1..z_dim. Cheap to copy (shared tree).
class Expr {
public:
    Expr();  // constant zero
    explicit Expr(std::shared_ptr<const ExprNode> node);

    static Expr constant(double value);
    static Expr variable(Var v);
    static Expr t() { return variable(Var::time()); }
    static Expr z(int d) { return variable(Var::coord(d)); }

    const ExprNode& node() const { return *node_; }
    Op op() const;

    bool is_constant() const { return op() == Op::Constant; }
    bool is_constant(double value) const;
    /// Value of a constant node; throws std::logic_error otherwise.
    double constant_value() const;

    bool depends_on(Var v) const;
    /// Largest coordinate index referenced (0 if none).
    int max_coordinate() const;
    std::size_t node_count() const;

    /// Parsable textual form. parse(print()) reproduces the tree.
    std::string str() const;

private:
    std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
    Op op = Op::Constant;
    double value = 0.0;  // Constant
    Var var{};           // Variable
    Expr lhs{std::shared_ptr<const ExprNode>{}};
    Expr rhs{std::shared_ptr<const ExprNode>{}};
};

// Builders apply light simplification (constant folding, 0/1 identities).
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);
Expr operator/(const Expr& a, double b);
Expr operator/(double a, const Expr& b);
Expr pow(const Expr& base, double exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);

/// Parses `text` over variables t, z1..z{dim}. See docs/expr-grammar.md.
Expr parse(std::string_view text, int dim);

/// Evaluates at (t, z). z.size() must cover every referenced coordinate.
double eval(const Expr& e, double t, std::span<const double> z);

/// Exact symbolic derivative with respect to `v`.
Expr differentiate(const Expr& e, Var v);

/// Re-applies the builder simplifications bottom-up.
Expr simplify(const Expr& e);

/// Structural equality (same ops, same constants bit-for-bit, same shape).
bool structurally_equal(const Expr& a, const Expr& b);

}  // namespace lagvar

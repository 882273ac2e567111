#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qvi {

/// Raised by parse_expression. position() is the 0-based offset into the source.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Domain error during evaluation; subexpression() is the printed offending node.
class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& what, std::string subexpression)
        : std::runtime_error(what + " in '" + subexpression + "'"),
          subexpression_(std::move(subexpression)) {}
    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

enum class Var { X, Y, T, U };

enum class NodeKind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Sin, Cos, Exp, Log, Abs, Sqrt, Min, Max, Tanh };

struct Node {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;
    Var var = Var::X;
    Func func = Func::Sin;
    std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;

/// Evaluation point. y is only required when the expression references it.
struct Point {
    double x = 0.0;
    std::optional<double> y;
    double t = 0.0;
    double u = 0.0;
};

/// Immutable scalar expression in (x, y, t, u).
class Expression {
public:
    Expression();
    explicit Expression(NodePtr root);

    const Node& root() const { return *root_; }
    NodePtr root_ptr() const { return root_; }

    double operator()(const Point& p) const;

    bool depends_on(Var v) const;
    bool is_constant() const;

    /// Fully parenthesized text that parses back to the same tree.
    std::string to_string() const;

private:
    NodePtr root_;
    unsigned var_mask_ = 0;
};

Expression parse_expression(std::string_view source);

double evaluate(const Expression& e, const Point& p);

/// Centered difference of e in u with step h (> 0).
double partial_u(const Expression& e, const Point& at, double h = 1e-4);

bool structurally_equal(const Node& a, const Node& b);

// Tree builders, used by tests and generators.
NodePtr make_constant(double v);
NodePtr make_variable(Var v);
NodePtr make_unary(NodeKind kind, NodePtr a);
NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b);
NodePtr make_call(Func f, std::vector<NodePtr> args);

std::size_t function_arity(Func f);
const char* function_name(Func f);

}  // namespace qvi

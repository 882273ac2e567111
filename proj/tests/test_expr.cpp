#include "qvi/expr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

using namespace qvi;

namespace {

Point at_u(double u)
{
    Point p;
    p.u = u;
    return p;
}

NodePtr random_tree(std::mt19937_64& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, 9);
    // literals are unsigned in the grammar; negation comes from Negate nodes
    std::uniform_real_distribution<double> val(0.0, 3.0);
    if (depth == 0 || pick(rng) < 2) {
        if (pick(rng) < 5) return make_constant(std::round(val(rng) * 1000.0) / 1000.0);
        return make_variable(static_cast<Var>(pick(rng) % 4));
    }
    const int kind = pick(rng);
    if (kind == 0) return make_unary(NodeKind::Negate, random_tree(rng, depth - 1));
    if (kind <= 5) {
        static const NodeKind ops[] = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul, NodeKind::Div, NodeKind::Pow};
        return make_binary(ops[pick(rng) % 5], random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    }
    const Func f = static_cast<Func>(pick(rng) % 9);
    std::vector<NodePtr> args;
    for (std::size_t i = 0; i < function_arity(f); ++i) args.push_back(random_tree(rng, depth - 1));
    return make_call(f, std::move(args));
}

// Value or "threw"; NaN compared by bit pattern.
struct Outcome {
    bool threw = false;
    double value = 0.0;
};

Outcome run(const Expression& e, const Point& p)
{
    try {
        return {false, e(p)};
    } catch (const EvalError&) {
        return {true, 0.0};
    }
}

bool same(const Outcome& a, const Outcome& b)
{
    if (a.threw || b.threw) return a.threw == b.threw;
    return std::memcmp(&a.value, &b.value, sizeof(double)) == 0;
}

}  // namespace

TEST(Expr, LiteralParsesToConstant)
{
    const Expression e = parse_expression("1");
    EXPECT_EQ(e.root().kind, NodeKind::Constant);
    EXPECT_EQ(e.root().value, 1.0);
    EXPECT_TRUE(e.is_constant());
}

TEST(Expr, SubtractionTreeShape)
{
    const Expression e = parse_expression("1 - 0.5*u");
    ASSERT_EQ(e.root().kind, NodeKind::Sub);
    EXPECT_EQ(e.root().args[0]->kind, NodeKind::Constant);
    ASSERT_EQ(e.root().args[1]->kind, NodeKind::Mul);
    EXPECT_EQ(e.root().args[1]->args[0]->value, 0.5);
    EXPECT_EQ(e.root().args[1]->args[1]->var, Var::U);
    EXPECT_EQ(e(at_u(2.0)), 0.0);
}

TEST(Expr, GoldenEvaluations)
{
    Point p;
    p.x = 0.0;
    p.t = 2.0;
    EXPECT_DOUBLE_EQ(parse_expression("exp(-x^2) + min(t, 1)")(p), 2.0);
    EXPECT_EQ(parse_expression("u")(at_u(3.5)), 3.5);
    Point q;
    q.x = 2.0;
    q.t = 0.25;
    EXPECT_EQ(parse_expression("x*t")(q), 0.5);
    Point r;
    r.x = -0.25;
    EXPECT_EQ(parse_expression("abs(x) - 1")(r), -0.75);
    EXPECT_EQ(parse_expression("min(1, exp(0))")(Point{}), 1.0);
}

TEST(Expr, PowerIsRightAssociativeAndBindsTighterThanUnaryMinus)
{
    EXPECT_EQ(parse_expression("2^3^2")(Point{}), 512.0);
    EXPECT_EQ(parse_expression("-2^2")(Point{}), -4.0);
    EXPECT_EQ(parse_expression("2*-3")(Point{}), -6.0);
}

TEST(Expr, WhitespaceInsensitive)
{
    const Expression a = parse_expression("1+2*u");
    const Expression b = parse_expression("  1 +\t2 *   u ");
    EXPECT_TRUE(structurally_equal(a.root(), b.root()));
}

TEST(Expr, SyntaxErrorsCarryPosition)
{
    try {
        parse_expression("1 + * 2");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 4u);
    }
    EXPECT_THROW(parse_expression(""), ParseError);
    EXPECT_THROW(parse_expression("(1 + 2"), ParseError);
    EXPECT_THROW(parse_expression("1 2"), ParseError);
}

TEST(Expr, UnknownIdentifierAndArity)
{
    EXPECT_THROW(parse_expression("z + 1"), ParseError);
    EXPECT_THROW(parse_expression("foo(1)"), ParseError);
    EXPECT_THROW(parse_expression("min(1)"), ParseError);
    EXPECT_THROW(parse_expression("sin(1, 2)"), ParseError);
}

TEST(Expr, DomainErrorsNameTheSubexpression)
{
    try {
        parse_expression("1 + log(u)")(at_u(-1.0));
        FAIL() << "expected EvalError";
    } catch (const EvalError& e) {
        EXPECT_NE(e.subexpression().find("log"), std::string::npos);
    }
    EXPECT_THROW(parse_expression("1/u")(at_u(0.0)), EvalError);
    EXPECT_THROW(parse_expression("sqrt(u)")(at_u(-4.0)), EvalError);
}

TEST(Expr, MissingYIsAnError)
{
    EXPECT_THROW(parse_expression("x + y")(Point{}), EvalError);
    Point p;
    p.y = 2.0;
    EXPECT_EQ(parse_expression("x + y")(p), 2.0);
}

TEST(Expr, DependsOn)
{
    const Expression e = parse_expression("x * sin(u)");
    EXPECT_TRUE(e.depends_on(Var::X));
    EXPECT_TRUE(e.depends_on(Var::U));
    EXPECT_FALSE(e.depends_on(Var::T));
    EXPECT_FALSE(e.depends_on(Var::Y));
}

TEST(Expr, PartialUExamples)
{
    EXPECT_NEAR(partial_u(parse_expression("1 - u"), at_u(0.7), 1e-4), -1.0, 1e-8);
    EXPECT_NEAR(partial_u(parse_expression("u^2"), at_u(3.0), 1e-4), 6.0, 1e-6);
    EXPECT_NEAR(partial_u(parse_expression("exp(u)"), at_u(0.0), 1e-4), 1.0, 1e-6);
}

TEST(Expr, PartialUOnCubicsMatchesAnalyticDerivative)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = c(rng), b = c(rng), d = c(rng), e = c(rng), u = c(rng);
        char buf[256];
        std::snprintf(buf, sizeof buf, "(%.17g) + (%.17g)*u + (%.17g)*u^2 + (%.17g)*u^3", a, b, d, e);
        const double exact = b + 2 * d * u + 3 * e * u * u;
        EXPECT_NEAR(partial_u(parse_expression(buf), at_u(u), 1e-4), exact, 1e-6) << buf;
    }
}

TEST(Expr, PrecedenceMatchesTreeComposition)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = c(rng), b = c(rng), d = c(rng);
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.17g+%.17g*%.17g", a, b, d);
        const Expression tree(make_binary(NodeKind::Add, make_constant(a),
                                          make_binary(NodeKind::Mul, make_constant(b), make_constant(d))));
        EXPECT_EQ(parse_expression(buf)(Point{}), tree(Point{})) << buf;
    }
}

TEST(Expr, RandomTreesRoundTrip)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Expression tree(random_tree(rng, 6));
        const std::string text = tree.to_string();
        const Expression back = parse_expression(text);
        EXPECT_TRUE(structurally_equal(tree.root(), back.root())) << text;
        EXPECT_EQ(back.to_string(), text);
        for (int k = 0; k < 10; ++k) {
            Point p;
            p.x = coord(rng);
            p.y = coord(rng);
            p.t = coord(rng);
            p.u = coord(rng);
            EXPECT_TRUE(same(run(tree, p), run(back, p))) << text;
        }
    }
}

TEST(Expr, EvaluationIsBitReproducible)
{
    const Expression e = parse_expression("tanh(x*u) + exp(-t)*cos(3*u)^2 / (1 + u^2)");
    Point p;
    p.x = 0.3;
    p.t = 1.7;
    p.u = -0.9;
    const double first = e(p);
    for (int i = 0; i < 10; ++i) {
        const double again = e(p);
        EXPECT_EQ(std::memcmp(&first, &again, sizeof(double)), 0);
    }
}

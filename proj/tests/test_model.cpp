#include "qvi/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qvi;

namespace {

ProblemSpec make_spec(const char* f, const char* g, const char* u0 = "0")
{
    ProblemSpec s;
    s.grid = Grid::line(-1, 1, 81);
    s.phi[0] = parse_expression("0");
    s.phi[1] = parse_expression("0");
    s.f = parse_expression(f);
    s.g = parse_expression(g);
    s.u0 = parse_expression(u0);
    return s;
}

}  // namespace

TEST(Model, ConstantDataPassesEveryCheck)
{
    ProblemSpec s = make_spec("1", "1");
    s.c1 = 0.0;
    s.c2 = 1.0;
    s.lambda_min = 1.0;
    const ValidationReport r = validate(s, 200);
    EXPECT_TRUE(r.all_passed());
    ASSERT_NE(r.find("linear_growth"), nullptr);
    ASSERT_NE(r.find("threshold_floor"), nullptr);
    EXPECT_EQ(r.find("threshold_ceiling"), nullptr);
}

TEST(Model, BurgersGrowthCheckPasses)
{
    ProblemSpec s = make_spec("1-u", "1");
    s.phi[0] = parse_expression("u^2/2");
    s.c1 = 2.0;
    s.c2 = 2.0;
    s.horizon = 0.1;
    const ValidationReport r = validate(s, 200);
    EXPECT_TRUE(r.find("linear_growth")->passed) << r.find("linear_growth")->message;
}

TEST(Model, GrowthCheckCatchesUnderstatedConstants)
{
    ProblemSpec s = make_spec("1+5*u", "1");
    s.c1 = 0.0;
    s.c2 = 1.0;
    const ValidationReport r = validate(s, 200);
    EXPECT_FALSE(r.find("linear_growth")->passed);
    EXPECT_NE(r.find("linear_growth")->message.find("violated by"), std::string::npos);
}

TEST(Model, ThresholdBelowFloorIsReportedWithWitness)
{
    ProblemSpec s = make_spec("1", "0.5/(1+u^2)");
    s.lambda_min = 1.0;
    const ValidationReport r = validate(s, 200);
    const AssumptionCheck* floor = r.find("threshold_floor");
    ASSERT_NE(floor, nullptr);
    EXPECT_FALSE(floor->passed);
    EXPECT_FALSE(r.all_passed());
    // The witness carries the worst margin: G(witness) = lambda_min + worst.
    EXPECT_NEAR(s.g(floor->witness), s.lambda_min + floor->worst, 1e-12);
    // G is largest at u = 0, where it already falls short of the floor by 0.5.
    EXPECT_LE(floor->worst, -0.5);
    EXPECT_NEAR(s.g(s.at(0.0, 0.0, 0.0, 0.0)), 0.5, 1e-15);
}

TEST(Model, CeilingAndDecreaseChecks)
{
    ProblemSpec s = make_spec("1-u", "1+0.5*tanh(u)");
    s.c1 = 1.0;
    s.lambda_min = 0.5;
    s.lambda_max = 1.5;
    s.mu = 1.0;
    EXPECT_TRUE(validate(s, 200).all_passed());
    s.lambda_max = 1.2;
    EXPECT_FALSE(validate(s, 200).find("threshold_ceiling")->passed);
    s.lambda_max = 1.5;
    s.mu = 3.0;
    EXPECT_FALSE(validate(s, 200).find("strict_decrease")->passed);
}

TEST(Model, ValidateIsDeterministicGivenSeed)
{
    ProblemSpec s = make_spec("sin(3*u)+x", "1+0.1*u^2");
    s.c1 = 0.5;
    const ValidationReport a = validate(s, 300, 9);
    const ValidationReport b = validate(s, 300, 9);
    ASSERT_EQ(a.checks.size(), b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        EXPECT_EQ(a.checks[i].worst, b.checks[i].worst);
        EXPECT_EQ(a.checks[i].message, b.checks[i].message);
        EXPECT_EQ(a.checks[i].witness.u, b.checks[i].witness.u);
    }
}

TEST(Model, ValidateRejectsTooFewSamples)
{
    EXPECT_THROW(validate(make_spec("1", "1"), 99), std::invalid_argument);
}

TEST(Model, EvaluationErrorsNameTheAssumption)
{
    ProblemSpec s = make_spec("log(u)", "1");
    try {
        validate(s, 200);
        FAIL() << "expected EvalError";
    } catch (const EvalError& e) {
        EXPECT_NE(std::string(e.what()).find("linear_growth"), std::string::npos);
    }
}

TEST(Model, StructureChecks)
{
    EXPECT_NO_THROW(check_structure(make_spec("1", "1")));
    ProblemSpec s = make_spec("1", "1+t");
    try {
        check_structure(s);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_STREQ(e.what(), "constraint G may not depend on t");
    }
    ProblemSpec bad_floor = make_spec("1", "1");
    bad_floor.lambda_min = 0.0;
    EXPECT_THROW(check_structure(bad_floor), std::invalid_argument);
    EXPECT_THROW(check_structure(make_spec("y", "1")), std::invalid_argument);
}

TEST(Model, SupBoundDegenerateB2)
{
    // c2 = 0, c1 = 0: infimum e^{b1 T} (u0max + 1) with b1 = 1.
    EXPECT_NEAR(sup_bound(proof_constants(0.0, 0.0), 1.0, 0.0), std::exp(1.0), 1e-6);
}

TEST(Model, SupBoundClosedFormMinimum)
{
    // e^lambda / sqrt(lambda - 1) is stationary at lambda = 3/2.
    EXPECT_NEAR(sup_bound(proof_constants(0.0, 1.0), 1.0, 0.0), std::exp(1.5) * std::sqrt(2.0), 1e-3);
    ProblemSpec s = make_spec("1", "1");
    s.c1 = 0.0;
    s.c2 = 1.0;
    s.horizon = 1.0;
    EXPECT_NEAR(sup_bound_M(s), std::exp(1.5) * std::sqrt(2.0), 1e-3);
}

TEST(Model, SupBoundHorizonDoubling)
{
    const SupBoundConstants k = proof_constants(0.0, 1.0);
    EXPECT_GE(sup_bound(k, 2.0, 0.0) / sup_bound(k, 1.0, 0.0), std::exp(k.b1));
}

TEST(Model, SupBoundMonotoneOnLattice)
{
    const double u0s[] = {0.0, 0.5, 2.0};
    const double c1s[] = {0.0, 0.5, 1.0};
    const double c2s[] = {0.5, 1.0, 3.0};
    const double ts[] = {0.25, 1.0, 2.0};
    auto bound = [&](int a, int b, int c, int d) { return sup_bound(proof_constants(c1s[b], c2s[c]), ts[d], u0s[a]); };
    const double tol = 1e-9;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d) {
                    const double v = bound(a, b, c, d);
                    if (a < 2) EXPECT_LE(v, bound(a + 1, b, c, d) * (1 + tol));
                    if (b < 2) EXPECT_LE(v, bound(a, b + 1, c, d) * (1 + tol));
                    if (c < 2) EXPECT_LE(v, bound(a, b, c + 1, d) * (1 + tol));
                    if (d < 2) EXPECT_LE(v, bound(a, b, c, d + 1) * (1 + tol));
                }
}

TEST(Model, StatementConstantsGiveTheSmallerBound)
{
    ProblemSpec s = make_spec("1", "1");
    s.c1 = 0.3;
    s.c2 = 1.0;
    EXPECT_LE(sup_bound_M_statement(s), sup_bound_M(s));
}

TEST(Model, InitialSamplingPinsBoundary)
{
    const ProblemSpec s = make_spec("0", "1", "1+0.1*x");
    const ScalarField u = sample_initial(s);
    EXPECT_EQ(u[0], 0.0);
    EXPECT_EQ(u[u.size() - 1], 0.0);
    EXPECT_NEAR(u[40], 1.0, 1e-15);
}

TEST(Model, FaceThresholdUsesAdjacentMean)
{
    ProblemSpec s = make_spec("0", "1+u");
    s.grid = Grid::line(0, 1, 3);
    ScalarField u(s.grid);
    u[1] = 0.4;
    const FaceField g = face_threshold(u, s);
    EXPECT_NEAR(g[0][0], 1.2, 1e-15);
    EXPECT_NEAR(g[0][1], 1.2, 1e-15);
}

#include "qvi/asymptotic.hpp"
#include "qvi/diagnostics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qvi;

namespace {

ProblemSpec make_spec(const char* f, const char* g = "1", const char* u0 = "0")
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

std::vector<std::pair<double, double>> synthetic(double (*v)(double))
{
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < 50; ++i) {
        const double t = 5.0 * i / 49.0;
        out.emplace_back(t, v(t));
    }
    return out;
}

double tent_error(const ScalarField& u)
{
    const Grid& g = u.grid;
    double err = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) err = std::max(err, std::fabs(u[p] - (1 - std::fabs(g.x(g.ix(p))))));
    return err;
}

// f = 1 - u sandpile, shared by the decay and Holder checks.
const StationaryResult& relaxing_sandpile()
{
    static const StationaryResult r = [] {
        ProblemSpec s = make_spec("1-u");
        s.c1 = 1.0;
        s.mu = 1.0;
        s.lambda_max = 1.0;
        return solve_stationary(s, ContinuationSchedule{}, StepControls{}, 10.0, 1e-5);
    }();
    return r;
}

}  // namespace

TEST(Asymptotic, ExactExponentialRate)
{
    const DecayFit fit = decay_rate(synthetic([](double t) { return 3.0 * std::exp(-2.0 * t); }));
    EXPECT_NEAR(fit.fitted_rate, 2.0, 1e-6);
    EXPECT_NEAR(fit.fitted_amplitude, 3.0, 1e-6);
    EXPECT_NEAR(fit.t_start, 1.0, 1e-12);
    EXPECT_FALSE(fit.skipped);
}

TEST(Asymptotic, ModulatedExponentialRate)
{
    const DecayFit fit =
        decay_rate(synthetic([](double t) { return 3.0 * std::exp(-2.0 * t) * (1 + 0.05 * std::sin(10 * t)); }));
    EXPECT_GE(fit.fitted_rate, 1.8);
    EXPECT_LE(fit.fitted_rate, 2.2);
}

TEST(Asymptotic, WindowShrinksAtFirstNonpositiveValue)
{
    auto series = synthetic([](double t) { return std::exp(-t); });
    for (auto& [t, v] : series)
        if (t > 4.0) v = 0.0;
    const DecayFit fit = decay_rate(series);
    EXPECT_LE(fit.t_end, 4.0);
    EXPECT_NEAR(fit.fitted_rate, 1.0, 1e-9);
    EXPECT_THROW(decay_rate(series, std::make_pair(4.5, 5.0)), std::invalid_argument);
    EXPECT_THROW(decay_rate({}), std::invalid_argument);
}

TEST(Asymptotic, UnforcedProblemIsStationaryFromTheStart)
{
    ProblemSpec s = make_spec("0");
    s.lambda_max = 1.0;
    ContinuationSchedule sch;
    sch.delta_min = 0.05;
    const StationaryResult r = solve_stationary(s, sch, StepControls{}, 1.0, 1e-5);
    EXPECT_EQ(r.u_inf.values, sample_initial(s).values);
    for (const auto& [t, nu] : nu_series(r.run.trajectory)) EXPECT_EQ(nu, 0.0) << t;
    EXPECT_TRUE(r.stalled);
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_TRUE(r.fit->skipped);
}

TEST(Asymptotic, StationarySolveRejectsTimeDependentFluxAndMissingHypotheses)
{
    ProblemSpec s = make_spec("1");
    s.lambda_max = 1.0;
    s.phi[0] = parse_expression("t*u");
    EXPECT_THROW(solve_stationary(s, ContinuationSchedule{}, StepControls{}, 1.0, 1e-5), std::invalid_argument);
    ProblemSpec bare = make_spec("1");
    EXPECT_THROW(solve_stationary(bare, ContinuationSchedule{}, StepControls{}, 1.0, 1e-5), std::invalid_argument);
}

TEST(Asymptotic, SandpileSteadyState)
{
    ProblemSpec s = make_spec("1-0.1*u");
    s.c1 = 0.1;
    s.mu = 0.1;
    s.lambda_max = 1.0;
    const StationaryResult r = solve_stationary(s, ContinuationSchedule{}, StepControls{}, 10.0, 1e-5);
    EXPECT_TRUE(r.stalled);
    EXPECT_LE(tent_error(r.u_inf), 0.02);
    EXPECT_LE(constraint_violation(r.u_inf, s).max, 1e-2);
    EXPECT_GE(stationary_residual(r.u_inf, s, 64, 1, r.t_stall), -0.05 * s.grid.measure());
}

TEST(Asymptotic, StationaryResidualOnExactAndCorruptedSolutions)
{
    const ProblemSpec s = make_spec("1-0.1*u");
    const ScalarField exact = sample(s.grid, [](double x, double) { return 1 - std::fabs(x); });
    EXPECT_EQ(variational_residual(exact, nullptr, exact, s, 0.0, s.f), 0.0);
    EXPECT_GE(stationary_residual(exact, s, 64, 1), -0.02 * s.grid.measure());
    ScalarField half = exact;
    for (double& v : half.values) v *= 0.5;
    EXPECT_LT(stationary_residual(half, s, 64, 1), -0.1 * s.grid.measure());
}

TEST(Asymptotic, StationaryResidualPrefersFInf)
{
    ProblemSpec s = make_spec("1-0.1*u+exp(-t)");
    s.f_inf = parse_expression("1-0.1*u");
    const ScalarField exact = sample(s.grid, [](double x, double) { return 1 - std::fabs(x); });
    EXPECT_GE(stationary_residual(exact, s, 64, 1), -0.02 * s.grid.measure());
}

TEST(Asymptotic, ContractionOfIdenticalData)
{
    ProblemSpec s = make_spec("1-u");
    const Expression bump = parse_expression("0.3*(1-x^2)");
    const ContractionResult c = contraction_test(s, ContinuationSchedule{}, StepControls{}, bump, bump, 0.5);
    EXPECT_EQ(c.measured, 0.0);
    EXPECT_EQ(c.initial_distance, 0.0);
}

TEST(Asymptotic, ContractionWithFrozenDynamics)
{
    const ProblemSpec s = make_spec("0");
    const ContractionResult c =
        contraction_test(s, ContinuationSchedule{}, StepControls{}, parse_expression("0.3*(1-x^2)"),
                         parse_expression("0.2*(1-abs(x))"), 1.0);
    EXPECT_GT(c.initial_distance, 0.0);
    EXPECT_DOUBLE_EQ(c.measured, c.initial_distance);
}

TEST(Asymptotic, ContractionDecaysWithMu)
{
    ProblemSpec s = make_spec("1-u");
    s.mu = 1.0;
    const Expression a = parse_expression("0.5*(1-x^2)");
    const Expression b = parse_expression("0.4*exp(-8*x^2)*(1-x^2)");
    const ContractionResult c = contraction_test(s, ContinuationSchedule{}, StepControls{}, a, b, 2.0);
    EXPECT_NEAR(c.lipschitz, 1.0, 1e-6);
    EXPECT_LE(c.measured, c.bound);
    ASSERT_TRUE(c.decay_bound.has_value());
    EXPECT_LE(c.measured, 1.5 * std::exp(-2.0) * c.initial_distance);

    double previous = c.initial_distance;
    for (double probe : {0.25, 0.5, 1.0, 2.0}) {
        const double m = contraction_test(s, ContinuationSchedule{}, StepControls{}, a, b, probe).measured;
        EXPECT_LE(m, previous) << probe;
        previous = m;
    }
}

TEST(Asymptotic, ContractionRejectsStateDependentThreshold)
{
    const ProblemSpec s = make_spec("1-u", "1+0.1*u");
    const Expression z = parse_expression("0");
    EXPECT_THROW(contraction_test(s, ContinuationSchedule{}, StepControls{}, z, z, 1.0), std::invalid_argument);
}

TEST(Asymptotic, SourceLipschitz)
{
    EXPECT_NEAR(source_lipschitz(make_spec("1-10*u"), 2.0), 10.0, 1e-6);
    EXPECT_NEAR(source_lipschitz(make_spec("u^2"), 2.0), 4.0, 1e-3);
}

TEST(Asymptotic, DecayRateOfRelaxingSandpile)
{
    const StationaryResult& r = relaxing_sandpile();
    ASSERT_TRUE(r.stalled);
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_GE(r.fit->fitted_rate, 0.8);
}

TEST(Asymptotic, HolderRates)
{
    const StationaryResult& r = relaxing_sandpile();
    const HolderResult h0 = holder_convergence(r.run.trajectory, r.u_inf, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(h0.floor, 0.5);
    EXPECT_GE(h0.fit.fitted_rate, 0.8 * h0.floor);
    const HolderResult h5 = holder_convergence(r.run.trajectory, r.u_inf, 0.5, 1.0);
    EXPECT_DOUBLE_EQ(h5.floor, 0.25);
    EXPECT_GE(h5.fit.fitted_rate, 0.8 * h5.floor);
    EXPECT_THROW(holder_convergence(r.run.trajectory, r.u_inf, 1.0, 1.0), std::invalid_argument);
}

TEST(Asymptotic, HolderOfConstantTrajectoryIsSkipped)
{
    const Grid g = Grid::line(-1, 1, 21);
    Trajectory traj;
    const ScalarField u = sample(g, [](double x, double) { return 0.2 * (1 - x * x); });
    for (int k = 0; k < 6; ++k) {
        traj.times.push_back(k);
        traj.snapshots.push_back(u);
    }
    const HolderResult h = holder_convergence(traj, u, 0.5, 1.0);
    EXPECT_TRUE(h.fit.skipped);
    EXPECT_TRUE(std::isinf(h.fit.fitted_rate));
    for (const auto& [t, d] : h.distances) EXPECT_EQ(d, 0.0);
}

TEST(Asymptotic, HolderDistance)
{
    const Grid g = Grid::line(0, 1, 11);
    const ScalarField zero(g);
    const ScalarField shift(g, 0.25);
    EXPECT_EQ(holder_distance(shift, zero, 0.0), 0.25);
    EXPECT_EQ(holder_distance(shift, zero, 0.5), 0.25);
    const ScalarField ramp = sample(g, [](double x, double) { return x; });
    // |x - y| / |x - y|^0.5 is largest at the widest pair within 5h
    EXPECT_NEAR(holder_distance(ramp, zero, 0.5), 1.0 + std::sqrt(0.5), 1e-12);
}

TEST(Asymptotic, DataHypotheses)
{
    ProblemSpec autonomous = make_spec("1-u");
    EXPECT_EQ(xi_R(autonomous, 2.0, 0.5), 0.0);
    EXPECT_EQ(eta_M(autonomous, 2.0, 0.5), 0.0);
    autonomous.f_inf = parse_expression("1-u");
    EXPECT_EQ(eta_M(autonomous, 2.0, 0.5), 0.0);

    ProblemSpec forced = make_spec("1-u+exp(-t)");
    forced.f_inf = parse_expression("1-u");
    EXPECT_NEAR(xi_R(forced, 2.0, 1.0), std::exp(-1.0), 1e-6);
    EXPECT_NEAR(eta_M(forced, 2.0, 1.0), std::exp(-1.0), 1e-12);
}

#pragma once

#include "qvi/continuation.hpp"
#include "qvi/model.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace qvi {

/// Exponential fit value ~ amplitude * exp(-rate * t) over a window.
struct DecayFit {
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<std::pair<double, double>> samples;  // samples inside the window
    double fitted_rate = std::numeric_limits<double>::infinity();
    double fitted_amplitude = 0.0;
    double residual = 0.0;  // RMS of log-residuals
    /// True when there was nothing to fit (identically zero data).
    bool skipped = false;
};

/// Least-squares line through (t, log v) on [t_start, t_end]. Without a
/// window the first 20% of the sampled time span is discarded. The window is
/// cut short at the first nonpositive value after its start. Throws
/// std::invalid_argument when fewer than two samples remain.
DecayFit decay_rate(const std::vector<std::pair<double, double>>& series,
                    std::optional<std::pair<double, double>> window = std::nullopt);

/// (t, ||dw/dt||_1) per accepted step.
std::vector<std::pair<double, double>> nu_series(const Trajectory& traj);

struct StationaryResult {
    ScalarField u_inf;
    std::optional<DecayFit> fit;
    bool stalled = false;
    double t_stall = 0.0;
    ContinuationResult run;
};

/// Long-time continuation solve on [0, t_max] that stops once
/// ||dw/dt||_1 < stall_tol * |Omega|, plus an exponential fit of that rate.
StationaryResult solve_stationary(const ProblemSpec& spec, const ContinuationSchedule& schedule,
                                  const StepControls& ctl, double t_max, double stall_tol, int snapshots = 50);

/// Smallest stationary residual over sampled feasible test functions, with
/// source f_inf (or f at time t_final when f_inf is unset).
double stationary_residual(const ScalarField& u_inf, const ProblemSpec& spec, int n_tests, std::uint64_t seed,
                           double t_final = 0.0);

struct ContractionResult {
    double measured = 0.0;
    double bound = 0.0;
    double initial_distance = 0.0;
    double lipschitz = 0.0;
    /// e^{-mu t_probe} * initial distance, when mu is set.
    std::optional<double> decay_bound;
    /// The two solves, a then b.
    std::vector<ContinuationResult> runs;
};

/// Two VI solves differing only in the initial datum, compared in L1 at t_probe.
ContractionResult contraction_test(const ProblemSpec& spec, const ContinuationSchedule& schedule,
                                   const StepControls& ctl, const Expression& u0_a, const Expression& u0_b,
                                   double t_probe);

/// Largest sampled |df/du| over the grid, t in [0, horizon], |u| <= R.
double source_lipschitz(const ProblemSpec& spec, double R);

struct HolderResult {
    DecayFit fit;
    double floor = 0.0;  // ((1 - alpha) / (dim + 1)) * nu
    std::vector<std::pair<double, double>> distances;
};

/// d(t) = ||u(t) - u_inf||_inf + alpha-Holder seminorm of u(t) - u_inf over
/// node pairs within 5h (alpha > 0 only), fitted exponentially.
HolderResult holder_convergence(const Trajectory& traj, const ScalarField& u_inf, double alpha,
                                std::optional<double> mu, std::optional<double> gamma = std::nullopt);

/// d(t) for a single field pair.
double holder_distance(const ScalarField& u, const ScalarField& u_inf, double alpha);

/// Data hypotheses sampled on a 33-point u lattice: xi_R(t) = sup |df/dt| and
/// eta_M(t) = sup |f - f_inf| over |u| <= R (resp. M) and the grid.
double xi_R(const ProblemSpec& spec, double R, double t);
double eta_M(const ProblemSpec& spec, double M, double t);

}  // namespace qvi

#pragma once

#include "qvi/parabolic.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qvi {

/// Geometric eps/delta schedules; eps is driven down before delta.
struct ContinuationSchedule {
    double eps_init = 0.1;
    double eps_factor = 0.5;
    double eps_min = 1e-3;
    double delta_init = 0.1;
    double delta_factor = 0.5;
    double delta_min = 1e-3;
    double violation_target = 1e-2;
    bool warm_start = true;
    /// Stop the eps sweep once the violation target is met.
    bool early_stop = true;
    int g_smoothing = 0;

    void check() const;
    std::vector<double> eps_values() const;
    std::vector<double> delta_values() const;
};

/// init, init*factor, ... while above min, then min itself.
std::vector<double> geometric_schedule(double init, double factor, double min);

struct Trajectory {
    std::vector<double> times;
    std::vector<ScalarField> snapshots;
    std::vector<StepRecord> series;
    RegularizationParams reg_used;
    bool stalled = false;

    double t_end() const { return times.empty() ? 0.0 : times.back(); }
    /// Largest max_violation over all steps (and the initial state).
    double max_violation() const;
    double max_abs() const;
    /// sqrt(sum dt * ||dw/dt||_2^2): discrete L2(Q) norm of the time derivative.
    double time_derivative_l2() const;
    double mean_picard_iters() const;
};

/// Horizon and output controls for one integration over [0, horizon].
struct IntegrationOptions {
    double horizon = 1.0;
    int snapshots = 50;
    /// Stop once ||dw/dt||_1 < stall_tol * |Omega|.
    std::optional<double> stall_tol;
};

/// Runs the stepper over [0, horizon] at fixed (eps, delta). Snapshots land
/// exactly on the equispaced instants k * horizon / snapshots. With a warm
/// trajectory the inner iteration at each step is seeded from it.
Trajectory integrate(const ProblemSpec& spec, const RegularizationParams& reg, const StepControls& ctl,
                     const IntegrationOptions& opts, const Trajectory* warm = nullptr);

/// Linear interpolation in time between stored snapshots (clamped to the ends).
ScalarField interpolate(const Trajectory& traj, double t);

struct StageRecord {
    double epsilon = 0.0;
    double delta = 0.0;
    double max_violation = 0.0;
    double final_violation = 0.0;
    int steps = 0;
    int first_step_iters = 0;
    double mean_iters = 0.0;
    double t_end = 0.0;
    bool stalled = false;
    double wall_seconds = 0.0;
};

struct ContinuationResult {
    Trajectory trajectory;
    std::vector<StageRecord> stages;
    bool target_met = false;
    double achieved_violation = 0.0;
    /// Filled by solve_vi.
    std::optional<double> time_derivative_l2;
};

/// Hard stepper failure annotated with the stage it happened in.
class ContinuationFailure : public std::runtime_error {
public:
    ContinuationFailure(const std::string& what, StageRecord stage, ScalarField snapshot)
        : std::runtime_error(what), stage_(stage), snapshot_(std::move(snapshot)) {}
    const StageRecord& stage() const noexcept { return stage_; }
    const ScalarField& snapshot() const noexcept { return snapshot_; }

private:
    StageRecord stage_;
    ScalarField snapshot_;
};

/// eps sweep at fixed delta (default: schedule.delta_init).
ContinuationResult solve_parabolic_qvi(const ProblemSpec& spec, const ContinuationSchedule& schedule,
                                       const StepControls& ctl, const IntegrationOptions& opts,
                                       std::optional<double> delta = std::nullopt,
                                       const Trajectory* warm = nullptr);

/// delta sweep (outer) over eps sweeps (inner).
ContinuationResult solve_qvi(const ProblemSpec& spec, const ContinuationSchedule& schedule, const StepControls& ctl,
                             const IntegrationOptions& opts);

/// solve_qvi for a threshold that does not depend on u; also records the L2(Q)
/// norm of the time derivative. Throws std::invalid_argument for u-dependent G.
ContinuationResult solve_vi(const ProblemSpec& spec, const ContinuationSchedule& schedule, const StepControls& ctl,
                            const IntegrationOptions& opts);

}  // namespace qvi

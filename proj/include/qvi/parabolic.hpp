#pragma once

#include "qvi/grid.hpp"
#include "qvi/model.hpp"
#include "qvi/penalty.hpp"

#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace qvi {

/// How the penalty conductance is linearized inside each implicit step.
enum class Linearization {
    /// Coefficient lagged from the previous inner iterate (plain fixed point).
    Picard,
    /// Face conductance delta * (k + 2 g_n^2 k'), i.e. the derivative of the
    /// normal flux, with a backtracking line search on the residual.
    Newton,
};

struct StepControls {
    double dt_init = 1e-3;
    double cfl = 0.5;
    double picard_tol = 1e-10;
    int picard_max = 30;
    double dt_min = 1e-9;
    double dt_max = 1e-2;
    Linearization linearization = Linearization::Newton;

    void check() const;
};

struct StepperState {
    double t = 0.0;
    ScalarField w;
    /// Proposed size of the next step.
    double dt = 0.0;
    /// Size of the step that produced this state (0 for the initial state).
    double last_dt = 0.0;
    int picard_iters = 0;
    /// Retries caused by penalty overflow, accumulated over the run.
    int clamp_events = 0;
    /// Retries caused by inner non-convergence, accumulated over the run.
    int rejected_steps = 0;
};

/// Per-step diagnostics row.
struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    int picard_iters = 0;
    double max_abs = 0.0;
    double rate_l1 = 0.0;        // sum vol |dw/dt|
    double penalty_mass = 0.0;   // face sum vol k_eps(|grad w|^2 - G_eps^2)
    double max_violation = 0.0;  // max (|grad w| - G)^+
    double grad_l2 = 0.0;
    double grad_l4 = 0.0;
    double rate_l2sq = 0.0;      // sum vol (dw/dt)^2
};

/// Raised when halving the step falls below dt_min.
class StiffnessCollapse : public std::runtime_error {
public:
    StiffnessCollapse(const std::string& what, double t, double dt, ScalarField snapshot)
        : std::runtime_error(what), t_(t), dt_(dt), snapshot_(std::move(snapshot)) {}
    double t() const noexcept { return t_; }
    double dt() const noexcept { return dt_; }
    const ScalarField& snapshot() const noexcept { return snapshot_; }

private:
    double t_;
    double dt_;
    ScalarField snapshot_;
};

/// Face quantities entering the penalty term for a given iterate.
struct PenaltyFaces {
    FaceField normal;      // two-point normal difference
    FaceField magnitude;   // |grad w| with transverse averaging
    FaceField threshold;   // G_eps(w) after smoothing
    FaceField k;           // k_eps(|grad w|^2 - G_eps^2)
    FaceField k_prime;
    bool clamped = false;
};

PenaltyFaces penalty_faces(const ScalarField& w, const ProblemSpec& spec, const RegularizationParams& reg);

/// Time stepper for
///   dw/dt - div[delta k_eps(|grad w|^2 - G_eps(w)^2) grad w + Phi(w)] = f(w),  w = 0 on the boundary.
/// Diffusion is implicit, convection (local Lax-Friedrichs) and reaction explicit.
class Stepper {
public:
    Stepper(const ProblemSpec& spec, const RegularizationParams& reg, const StepControls& ctl);

    /// Sampled u0, rescaled into the constraint set when sampling violates it.
    StepperState initial_state() const;

    /// One accepted step no longer than dt_limit (and state.dt). An optional
    /// guess seeds the inner iteration when its residual is smaller.
    StepperState step(const StepperState& state, double dt_limit = std::numeric_limits<double>::infinity(),
                      const ScalarField* guess = nullptr) const;

    double cfl_dt(const StepperState& state) const;

    StepRecord record(const StepperState& before, const StepperState& after) const;

    const ProblemSpec& spec() const { return spec_; }
    const RegularizationParams& reg() const { return reg_; }
    const StepControls& controls() const { return ctl_; }

private:
    struct Attempt {
        bool ok = false;
        bool clamped = false;
        int iters = 0;
        ScalarField w;
    };

    /// Explicit stability limit (convection CFL and reaction), capped by dt_max.
    double explicit_limit(const StepperState& state) const;
    ScalarField explicit_update(const ScalarField& w, double t, double dt) const;
    Attempt implicit_solve(const ScalarField& w_star, const ScalarField& start, double dt) const;

    struct LinearSystem;

    const ProblemSpec& spec_;
    RegularizationParams reg_;
    StepControls ctl_;
    std::shared_ptr<LinearSystem> linear_;
};

StepperState step(const StepperState& state, const ProblemSpec& spec, const RegularizationParams& reg,
                  const StepControls& ctl);

/// min(dt_max, cfl h / max|d Phi/du|, 0.5 / max|df/du|), never below dt_min.
double cfl_dt(const StepperState& state, const ProblemSpec& spec, const StepControls& ctl);

/// lambda_h = delta k_eps(|grad w|^2 - G_eps(w)^2) per face; always >= delta.
FaceField discrete_multiplier(const ScalarField& w, const ProblemSpec& spec, const RegularizationParams& reg);

}  // namespace qvi

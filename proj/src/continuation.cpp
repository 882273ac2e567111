#include "qvi/continuation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace qvi {

void ContinuationSchedule::check() const
{
    auto factor_ok = [](double f) { return f > 0.0 && f < 1.0; };
    if (!factor_ok(eps_factor) || !factor_ok(delta_factor)) {
        throw std::invalid_argument("schedule factors must lie in (0, 1)");
    }
    if (!(eps_min > 0.0 && delta_min > 0.0)) throw std::invalid_argument("schedule minima must be positive");
    if (!(eps_init < 1.0 && delta_init < 1.0)) throw std::invalid_argument("eps_init and delta_init must be below 1");
    if (!(violation_target > 0.0)) throw std::invalid_argument("violation_target must be positive");
}

std::vector<double> geometric_schedule(double init, double factor, double min)
{
    std::vector<double> out;
    double v = init;
    while (v > min * (1.0 + 1e-12)) {
        out.push_back(v);
        v *= factor;
    }
    out.push_back(min);
    return out;
}

std::vector<double> ContinuationSchedule::eps_values() const
{
    return geometric_schedule(eps_init, eps_factor, eps_min);
}

std::vector<double> ContinuationSchedule::delta_values() const
{
    return geometric_schedule(delta_init, delta_factor, delta_min);
}

double Trajectory::max_violation() const
{
    double m = 0.0;
    for (const auto& r : series) m = std::max(m, r.max_violation);
    return m;
}

double Trajectory::max_abs() const
{
    double m = 0.0;
    for (const auto& s : snapshots) m = std::max(m, qvi::max_abs(s));
    for (const auto& r : series) m = std::max(m, r.max_abs);
    return m;
}

double Trajectory::time_derivative_l2() const
{
    double s = 0.0;
    for (const auto& r : series) s += r.dt * r.rate_l2sq;
    return std::sqrt(s);
}

double Trajectory::mean_picard_iters() const
{
    if (series.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : series) s += r.picard_iters;
    return s / static_cast<double>(series.size());
}

ScalarField interpolate(const Trajectory& traj, double t)
{
    if (traj.times.empty()) throw std::invalid_argument("interpolate: empty trajectory");
    if (t <= traj.times.front()) return traj.snapshots.front();
    if (t >= traj.times.back()) return traj.snapshots.back();
    const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - traj.times.begin());
    const double t0 = traj.times[k - 1];
    const double t1 = traj.times[k];
    const double theta = (t - t0) / (t1 - t0);
    ScalarField out = traj.snapshots[k - 1];
    const ScalarField& b = traj.snapshots[k];
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = (1.0 - theta) * out[p] + theta * b[p];
    return out;
}

Trajectory integrate(const ProblemSpec& spec, const RegularizationParams& reg, const StepControls& ctl,
                     const IntegrationOptions& opts, const Trajectory* warm)
{
    if (!(opts.horizon > 0.0) || opts.snapshots < 1) throw std::invalid_argument("integrate: bad horizon/snapshots");
    const Stepper stepper(spec, reg, ctl);
    Trajectory traj;
    traj.reg_used = reg;

    StepperState state = stepper.initial_state();
    traj.times.push_back(0.0);
    traj.snapshots.push_back(state.w);

    const double measure = spec.grid.measure();
    int next_snap = 1;
    auto snap_time = [&](int k) { return k == opts.snapshots ? opts.horizon : opts.horizon * k / opts.snapshots; };

    bool use_warm = warm != nullptr && !warm->snapshots.empty() && warm->snapshots.front().grid == spec.grid;

    while (next_snap <= opts.snapshots) {
        const double target = snap_time(next_snap);
        const double limit = target - state.t;
        std::optional<ScalarField> guess;
        if (use_warm) guess = interpolate(*warm, std::min(state.t + std::min(state.dt, limit), warm->t_end()));
        StepperState next = stepper.step(state, limit, guess ? &*guess : nullptr);
        const StepRecord rec = stepper.record(state, next);
        traj.series.push_back(rec);
        state = std::move(next);

        const bool landed = state.t >= target;
        if (landed) {
            state.t = target;
            traj.series.back().t = target;
            traj.times.push_back(target);
            traj.snapshots.push_back(state.w);
            ++next_snap;
        }
        if (opts.stall_tol && rec.rate_l1 < *opts.stall_tol * measure) {
            traj.stalled = true;
            if (!landed) {
                traj.times.push_back(state.t);
                traj.snapshots.push_back(state.w);
            }
            break;
        }
    }
    return traj;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

StageRecord summarize(const Trajectory& traj, double wall)
{
    StageRecord s;
    s.epsilon = traj.reg_used.epsilon;
    s.delta = traj.reg_used.delta;
    s.max_violation = traj.max_violation();
    s.final_violation = traj.series.empty() ? 0.0 : traj.series.back().max_violation;
    s.steps = static_cast<int>(traj.series.size());
    s.first_step_iters = traj.series.empty() ? 0 : traj.series.front().picard_iters;
    s.mean_iters = traj.mean_picard_iters();
    s.t_end = traj.t_end();
    s.stalled = traj.stalled;
    s.wall_seconds = wall;
    return s;
}

}  // namespace

ContinuationResult solve_parabolic_qvi(const ProblemSpec& spec, const ContinuationSchedule& schedule,
                                       const StepControls& ctl, const IntegrationOptions& opts,
                                       std::optional<double> delta, const Trajectory* warm)
{
    schedule.check();
    const double d = delta.value_or(schedule.delta_init);
    ContinuationResult result;
    std::optional<Trajectory> previous;
    if (warm != nullptr) previous = *warm;

    for (double eps : schedule.eps_values()) {
        RegularizationParams reg;
        reg.epsilon = eps;
        reg.delta = d;
        reg.g_smoothing = schedule.g_smoothing;
        const auto t0 = std::chrono::steady_clock::now();
        Trajectory traj;
        try {
            traj = integrate(spec, reg, ctl, opts, schedule.warm_start && previous ? &*previous : nullptr);
        } catch (const StiffnessCollapse& e) {
            StageRecord failed;
            failed.epsilon = eps;
            failed.delta = d;
            failed.t_end = e.t();
            failed.wall_seconds = seconds_since(t0);
            std::ostringstream msg;
            msg << "stage " << result.stages.size() << " (eps=" << eps << ", delta=" << d << "): " << e.what();
            throw ContinuationFailure(msg.str(), failed, e.snapshot());
        }
        result.stages.push_back(summarize(traj, seconds_since(t0)));
        result.achieved_violation = traj.max_violation();
        result.target_met = result.achieved_violation <= schedule.violation_target;
        previous = std::move(traj);
        if (schedule.early_stop && result.target_met) break;
    }
    result.trajectory = std::move(*previous);
    return result;
}

ContinuationResult solve_qvi(const ProblemSpec& spec, const ContinuationSchedule& schedule, const StepControls& ctl,
                             const IntegrationOptions& opts)
{
    schedule.check();
    ContinuationResult result;
    std::optional<Trajectory> previous;
    for (double d : schedule.delta_values()) {
        ContinuationResult inner =
            solve_parabolic_qvi(spec, schedule, ctl, opts, d, schedule.warm_start && previous ? &*previous : nullptr);
        result.stages.insert(result.stages.end(), inner.stages.begin(), inner.stages.end());
        result.target_met = inner.target_met;
        result.achieved_violation = inner.achieved_violation;
        previous = std::move(inner.trajectory);
    }
    result.trajectory = std::move(*previous);
    return result;
}

ContinuationResult solve_vi(const ProblemSpec& spec, const ContinuationSchedule& schedule, const StepControls& ctl,
                            const IntegrationOptions& opts)
{
    if (!spec.variational()) {
        throw std::invalid_argument("solve_vi: the threshold G depends on u; use solve_qvi");
    }
    ContinuationResult result = solve_qvi(spec, schedule, ctl, opts);
    result.time_derivative_l2 = result.trajectory.time_derivative_l2();
    return result;
}

}  // namespace qvi

#include "qvi/asymptotic.hpp"

#include "qvi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qvi {

DecayFit decay_rate(const std::vector<std::pair<double, double>>& series,
                    std::optional<std::pair<double, double>> window)
{
    if (series.empty()) throw std::invalid_argument("decay_rate: empty series");
    double t0 = 0.0;
    double t1 = 0.0;
    if (window) {
        t0 = window->first;
        t1 = window->second;
    } else {
        const double a = series.front().first;
        const double b = series.back().first;
        t0 = a + 0.2 * (b - a);
        t1 = b;
    }
    if (!(t1 > t0)) throw std::invalid_argument("decay_rate: empty window");

    DecayFit fit;
    fit.t_start = t0;
    fit.t_end = t1;
    for (const auto& [t, v] : series) {
        if (t < t0 || t > t1) continue;
        if (!(v > 0.0) || !std::isfinite(v)) {
            // shrink the window to end before the first unusable value
            fit.t_end = fit.samples.empty() ? t0 : fit.samples.back().first;
            break;
        }
        fit.samples.emplace_back(t, v);
    }
    if (fit.samples.size() < 2) throw std::invalid_argument("decay_rate: fewer than two positive samples in window");
    if (fit.t_end == t1 && !fit.samples.empty()) fit.t_end = std::min(t1, fit.samples.back().first);

    const double n = static_cast<double>(fit.samples.size());
    double st = 0.0, sy = 0.0;
    for (const auto& [t, v] : fit.samples) {
        st += t;
        sy += std::log(v);
    }
    const double tm = st / n;
    const double ym = sy / n;
    double stt = 0.0, sty = 0.0;
    for (const auto& [t, v] : fit.samples) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (std::log(v) - ym);
    }
    if (!(stt > 0.0)) throw std::invalid_argument("decay_rate: degenerate window");
    const double slope = sty / stt;
    const double intercept = ym - slope * tm;
    fit.fitted_rate = -slope;
    fit.fitted_amplitude = std::exp(intercept);
    double ss = 0.0;
    for (const auto& [t, v] : fit.samples) {
        const double e = std::log(v) - (intercept + slope * t);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

std::vector<std::pair<double, double>> nu_series(const Trajectory& traj)
{
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.series.size());
    for (const auto& r : traj.series) out.emplace_back(r.t, r.rate_l1);
    return out;
}

namespace {

bool all_nonpositive(const std::vector<std::pair<double, double>>& s)
{
    return std::all_of(s.begin(), s.end(), [](const auto& p) { return !(p.second > 0.0); });
}

}  // namespace

StationaryResult solve_stationary(const ProblemSpec& spec, const ContinuationSchedule& schedule,
                                  const StepControls& ctl, double t_max, double stall_tol, int snapshots)
{
    for (int a = 0; a < spec.grid.dim; ++a) {
        if (spec.phi[a].depends_on(Var::T)) throw std::invalid_argument("solve_stationary: flux Phi depends on t");
    }
    if (!spec.mu && !spec.lambda_max) {
        throw std::invalid_argument("solve_stationary: need mu (df/du <= -mu) or a bounded threshold (lambda_max)");
    }
    if (!(t_max > 0.0) || !(stall_tol > 0.0)) throw std::invalid_argument("solve_stationary: bad t_max/stall_tol");

    IntegrationOptions opts;
    opts.horizon = t_max;
    opts.snapshots = snapshots;
    opts.stall_tol = stall_tol;

    StationaryResult out;
    out.run = solve_qvi(spec, schedule, ctl, opts);
    const Trajectory& traj = out.run.trajectory;
    out.u_inf = traj.snapshots.back();
    out.stalled = traj.stalled;
    out.t_stall = traj.t_end();

    const auto nu = nu_series(traj);
    if (nu.empty() || all_nonpositive(nu)) {
        DecayFit skipped;
        skipped.skipped = true;
        skipped.t_end = out.t_stall;
        out.fit = skipped;
    } else {
        try {
            out.fit = decay_rate(nu, std::make_pair(0.2 * out.t_stall, out.t_stall));
        } catch (const std::invalid_argument&) {
            out.fit.reset();
        }
    }
    return out;
}

double stationary_residual(const ScalarField& u_inf, const ProblemSpec& spec, int n_tests, std::uint64_t seed,
                           double t_final)
{
    const Expression& source = spec.f_inf ? *spec.f_inf : spec.f;
    return stationary_worst_residual(u_inf, spec, source, t_final, n_tests, seed);
}

namespace {

// At most ~max_nodes grid nodes, evenly strided.
std::vector<std::size_t> sample_nodes(const Grid& g, std::size_t max_nodes)
{
    const std::size_t n = g.node_count();
    const std::size_t stride = std::max<std::size_t>(1, n / max_nodes);
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < n; p += stride) out.push_back(p);
    return out;
}

double l1_distance(const ScalarField& a, const ScalarField& b)
{
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) s += a.grid.node_weight(p) * std::fabs(a[p] - b[p]);
    return s;
}

template <class F>
double sup_over_samples(const ProblemSpec& spec, double R, const std::vector<double>& times, F&& f)
{
    const Grid& g = spec.grid;
    double m = 0.0;
    for (std::size_t p : sample_nodes(g, 400)) {
        const double x = g.x(g.ix(p));
        const double y = g.dim == 2 ? g.y(g.iy(p)) : 0.0;
        for (double t : times) {
            for (int k = 0; k <= 32; ++k) {
                const double u = -R + 2.0 * R * k / 32.0;
                m = std::max(m, f(spec.at(x, y, t, u)));
            }
        }
    }
    return m;
}

}  // namespace

double source_lipschitz(const ProblemSpec& spec, double R)
{
    std::vector<double> times;
    for (int k = 0; k <= 8; ++k) times.push_back(spec.horizon * k / 8.0);
    return sup_over_samples(spec, R, times, [&](const Point& p) {
        return std::fabs(partial_u(spec.f, p, 1e-6 * std::max(1.0, std::fabs(p.u))));
    });
}

ContractionResult contraction_test(const ProblemSpec& spec, const ContinuationSchedule& schedule,
                                   const StepControls& ctl, const Expression& u0_a, const Expression& u0_b,
                                   double t_probe)
{
    if (!spec.variational()) throw std::invalid_argument("contraction_test: threshold depends on u (QVI mode)");
    if (!(t_probe > 0.0)) throw std::invalid_argument("contraction_test: t_probe must be positive");

    IntegrationOptions opts;
    opts.horizon = t_probe;
    opts.snapshots = 10;

    ProblemSpec a = spec;
    a.u0 = u0_a;
    a.horizon = t_probe;
    ProblemSpec b = spec;
    b.u0 = u0_b;
    b.horizon = t_probe;
    const ContinuationResult ra = solve_vi(a, schedule, ctl, opts);
    const ContinuationResult rb = solve_vi(b, schedule, ctl, opts);

    ContractionResult out;
    out.initial_distance = l1_distance(ra.trajectory.snapshots.front(), rb.trajectory.snapshots.front());
    out.measured = l1_distance(ra.trajectory.snapshots.back(), rb.trajectory.snapshots.back());
    const double R = std::max({1.0, ra.trajectory.max_abs(), rb.trajectory.max_abs()});
    out.lipschitz = source_lipschitz(a, R);
    out.bound = std::exp(out.lipschitz * t_probe) * out.initial_distance;
    if (spec.mu) out.decay_bound = std::exp(-*spec.mu * t_probe) * out.initial_distance;
    out.runs = {ra, rb};
    return out;
}

double holder_distance(const ScalarField& u, const ScalarField& u_inf, double alpha)
{
    check_same_grid(u.grid, u_inf.grid, "holder_distance");
    const Grid& g = u.grid;
    std::vector<double> e(u.size());
    double sup = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        e[p] = u[p] - u_inf[p];
        sup = std::max(sup, std::fabs(e[p]));
    }
    if (alpha <= 0.0) return sup;

    const double hx = g.h(0);
    const double hy = g.dim == 2 ? g.h(1) : 0.0;
    const double reach = 5.0 * g.min_h() * (1.0 + 1e-12);
    const int jmax = g.dim == 2 ? 5 : 0;
    double semi = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        const int i = g.ix(p);
        const int j = g.iy(p);
        for (int dj = 0; dj <= jmax; ++dj) {
            for (int di = (dj == 0 ? 1 : -5); di <= 5; ++di) {
                const int i2 = i + di;
                const int j2 = j + dj;
                if (i2 < 0 || i2 >= g.n[0] || (g.dim == 2 && j2 >= g.n[1])) continue;
                const double dist = std::hypot(di * hx, dj * hy);
                if (dist > reach) continue;
                const std::size_t q = g.node(i2, j2);
                semi = std::max(semi, std::fabs(e[p] - e[q]) / std::pow(dist, alpha));
            }
        }
    }
    return sup + semi;
}

HolderResult holder_convergence(const Trajectory& traj, const ScalarField& u_inf, double alpha,
                                std::optional<double> mu, std::optional<double> gamma)
{
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("holder_convergence: alpha must lie in [0, 1)");
    HolderResult out;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        out.distances.emplace_back(traj.times[k], holder_distance(traj.snapshots[k], u_inf, alpha));
    }
    const double inf = std::numeric_limits<double>::infinity();
    const double nu = std::min(mu.value_or(inf), gamma.value_or(inf));
    out.floor = std::isfinite(nu) ? (1.0 - alpha) / (u_inf.grid.dim + 1) * nu : 0.0;
    if (all_nonpositive(out.distances)) {
        out.fit.skipped = true;
        if (!out.distances.empty()) {
            out.fit.t_start = out.distances.front().first;
            out.fit.t_end = out.distances.back().first;
        }
        return out;
    }
    out.fit = decay_rate(out.distances);
    return out;
}

double xi_R(const ProblemSpec& spec, double R, double t)
{
    const double h = 1e-6 * std::max(1.0, std::fabs(t));
    return sup_over_samples(spec, R, {t}, [&](const Point& p) {
        Point a = p;
        Point b = p;
        a.t += h;
        b.t -= h;
        return std::fabs(spec.f(a) - spec.f(b)) / (2.0 * h);
    });
}

double eta_M(const ProblemSpec& spec, double M, double t)
{
    if (!spec.f_inf) return 0.0;
    return sup_over_samples(spec, M, {t}, [&](const Point& p) { return std::fabs(spec.f(p) - (*spec.f_inf)(p)); });
}

}  // namespace qvi

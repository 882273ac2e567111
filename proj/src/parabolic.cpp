#include "qvi/parabolic.hpp"

#include "qvi/diagnostics.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qvi {

void StepControls::check() const
{
    if (!(dt_init > 0.0 && dt_min > 0.0 && dt_max > 0.0)) throw std::invalid_argument("time steps must be positive");
    if (!(dt_min <= dt_init && dt_init <= dt_max)) throw std::invalid_argument("need dt_min <= dt_init <= dt_max");
    if (!(cfl > 0.0 && cfl <= 0.9)) throw std::invalid_argument("cfl must lie in (0, 0.9]");
    if (!(picard_tol > 0.0)) throw std::invalid_argument("picard_tol must be positive");
    if (picard_max < 1) throw std::invalid_argument("picard_max must be at least 1");
}

namespace {

double du_step(double u) { return 1e-6 * std::max(1.0, std::fabs(u)); }

double flux_speed(const Expression& phi, const Point& p)
{
    return std::fabs(partial_u(phi, p, du_step(p.u)));
}

// Scaled 2-norm that survives entries near the double range.
double merit(const std::vector<double>& r)
{
    double m = 0.0;
    for (double v : r) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::fabs(v));
    }
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (double v : r) {
        const double q = v / m;
        s += q * q;
    }
    return m * std::sqrt(s);
}

double max_abs_vec(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

// Interior-node numbering used by the implicit system.
struct InteriorMap {
    std::vector<int> index;  // -1 on boundary
    std::vector<std::size_t> nodes;

    explicit InteriorMap(const Grid& g) : index(g.node_count(), -1)
    {
        for (std::size_t p = 0; p < g.node_count(); ++p) {
            if (!g.on_boundary(p)) {
                index[p] = static_cast<int>(nodes.size());
                nodes.push_back(p);
            }
        }
    }
};

// R_p = (w_p - w*_p)/dt - div(delta k grad_n w)_p on interior nodes
std::vector<double> residual(const ScalarField& w, const ScalarField& w_star, const PenaltyFaces& faces,
                             double delta, double dt, const InteriorMap& map)
{
    const Grid& g = w.grid;
    FaceField flux(g);
    for (int a = 0; a < g.dim; ++a) {
        for (std::size_t f = 0; f < flux[a].size(); ++f) {
            flux[a][f] = delta * faces.k[a][f] * faces.normal[a][f];
        }
    }
    const ScalarField div = divergence(flux);
    std::vector<double> r(map.nodes.size());
    const double inv_dt = 1.0 / dt;
    for (std::size_t q = 0; q < map.nodes.size(); ++q) {
        const std::size_t p = map.nodes[q];
        r[q] = (w[p] - w_star[p]) * inv_dt - div[p];
    }
    return r;
}

}  // namespace

// J = I/dt + sum_f c_f/h^2 (graph Laplacian on interior nodes). The sparsity
// pattern depends only on the grid, so the symbolic factorization is done once.
struct Stepper::LinearSystem {
    InteriorMap map;
    Eigen::SparseMatrix<double> A;
    std::array<std::vector<std::array<Eigen::Index, 4>>, 2> slots;  // (aa, bb, ab, ba) value offsets, -1 if absent
    std::vector<Eigen::Index> diag_slot;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;

    explicit LinearSystem(const Grid& g) : map(g)
    {
        const auto m = static_cast<Eigen::Index>(map.nodes.size());
        if (g.dim == 1 || m == 0) return;
        std::vector<Eigen::Triplet<double>> triplets;
        for (Eigen::Index i = 0; i < m; ++i) triplets.emplace_back(i, i, 1.0);
        for (int a = 0; a < g.dim; ++a) {
            for (std::size_t f = 0; f < g.face_count(a); ++f) {
                const auto [lo, hi] = g.face_nodes(a, f);
                const int ia = map.index[lo];
                const int ib = map.index[hi];
                if (ia >= 0 && ib >= 0) {
                    triplets.emplace_back(ia, ib, 1.0);
                    triplets.emplace_back(ib, ia, 1.0);
                }
            }
        }
        A.resize(m, m);
        A.setFromTriplets(triplets.begin(), triplets.end());
        A.makeCompressed();
        auto offset = [&](int r, int c) -> Eigen::Index {
            if (r < 0 || c < 0) return -1;
            return &A.coeffRef(r, c) - A.valuePtr();
        };
        diag_slot.resize(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) diag_slot[static_cast<std::size_t>(i)] = offset(static_cast<int>(i), static_cast<int>(i));
        for (int a = 0; a < g.dim; ++a) {
            slots[a].resize(g.face_count(a));
            for (std::size_t f = 0; f < g.face_count(a); ++f) {
                const auto [lo, hi] = g.face_nodes(a, f);
                const int ia = map.index[lo];
                const int ib = map.index[hi];
                slots[a][f] = {offset(ia, ia), offset(ib, ib), ia >= 0 && ib >= 0 ? offset(ia, ib) : -1,
                               ia >= 0 && ib >= 0 ? offset(ib, ia) : -1};
            }
        }
        ldlt.analyzePattern(A);
    }

    std::vector<double> solve(const FaceField& conductance, double dt, const std::vector<double>& rhs)
    {
        const Grid& g = conductance.grid;
        const std::size_t m = map.nodes.size();
        if (g.dim == 1) return solve_tridiagonal(conductance, dt, rhs);

        double* v = A.valuePtr();
        std::fill(v, v + A.nonZeros(), 0.0);
        for (Eigen::Index s : diag_slot) v[s] = 1.0 / dt;
        for (int a = 0; a < g.dim; ++a) {
            const double inv_h2 = 1.0 / (g.h(a) * g.h(a));
            for (std::size_t f = 0; f < conductance[a].size(); ++f) {
                const double c = conductance[a][f] * inv_h2;
                const auto& sl = slots[a][f];
                if (sl[0] >= 0) v[sl[0]] += c;
                if (sl[1] >= 0) v[sl[1]] += c;
                if (sl[2] >= 0) v[sl[2]] -= c;
                if (sl[3] >= 0) v[sl[3]] -= c;
            }
        }
        ldlt.factorize(A);
        if (ldlt.info() != Eigen::Success) return std::vector<double>(m, std::numeric_limits<double>::quiet_NaN());
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(m));
        Eigen::VectorXd x = ldlt.solve(b);
        return std::vector<double>(x.data(), x.data() + m);
    }

    // Thomas algorithm
    std::vector<double> solve_tridiagonal(const FaceField& conductance, double dt, const std::vector<double>& rhs) const
    {
        const Grid& g = conductance.grid;
        const std::size_t m = map.nodes.size();
        std::vector<double> diag(m, 1.0 / dt), lower(m, 0.0), upper(m, 0.0);
        const double inv_h2 = 1.0 / (g.h(0) * g.h(0));
        for (std::size_t f = 0; f < conductance[0].size(); ++f) {
            const auto [lo, hi] = g.face_nodes(0, f);
            const double c = conductance[0][f] * inv_h2;
            const int a = map.index[lo];
            const int b = map.index[hi];
            if (a >= 0) diag[a] += c;
            if (b >= 0) diag[b] += c;
            if (a >= 0 && b >= 0) {
                upper[a] = -c;
                lower[b] = -c;
            }
        }
        std::vector<double> cp(m), dp(m), x(m);
        cp[0] = upper[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for (std::size_t i = 1; i < m; ++i) {
            const double den = diag[i] - lower[i] * cp[i - 1];
            cp[i] = upper[i] / den;
            dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / den;
        }
        x[m - 1] = dp[m - 1];
        for (std::size_t i = m - 1; i-- > 0;) {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        return x;
    }
};

PenaltyFaces penalty_faces(const ScalarField& w, const ProblemSpec& spec, const RegularizationParams& reg)
{
    PenaltyFaces pf;
    pf.normal = gradient(w);
    pf.magnitude = face_gradient_magnitude(w);
    pf.threshold = smooth_constraint(face_threshold(w, spec), reg, spec.lambda_min);
    pf.k = FaceField(w.grid);
    pf.k_prime = FaceField(w.grid);
    for (int a = 0; a < w.grid.dim; ++a) {
        for (std::size_t f = 0; f < pf.k[a].size(); ++f) {
            const double m = pf.magnitude[a][f];
            const double gth = pf.threshold[a][f];
            const double s = m * m - gth * gth;
            pf.k[a][f] = penalty_k(s, reg.epsilon);
            pf.k_prime[a][f] = penalty_k_prime(s, reg.epsilon);
            if (penalty_clamped(s, reg.epsilon)) pf.clamped = true;
        }
    }
    return pf;
}

Stepper::Stepper(const ProblemSpec& spec, const RegularizationParams& reg, const StepControls& ctl)
    : spec_(spec), reg_(reg), ctl_(ctl)
{
    reg_.check();
    ctl_.check();
    linear_ = std::make_shared<LinearSystem>(spec_.grid);
}

StepperState Stepper::initial_state() const
{
    StepperState s;
    s.t = 0.0;
    s.w = sample_initial(spec_);
    for (int pass = 0; pass < 20; ++pass) {
        const FaceField g = face_threshold(s.w, spec_);
        const FaceField m = face_gradient_magnitude(s.w);
        double worst = 0.0;
        for (int a = 0; a < s.w.grid.dim; ++a) {
            for (std::size_t f = 0; f < g[a].size(); ++f) worst = std::max(worst, m[a][f] - g[a][f]);
        }
        if (worst <= 1e-12) break;
        s.w = rescale_into(s.w, g, spec_.lambda_min);
    }
    s.dt = ctl_.dt_init;
    return s;
}

double Stepper::cfl_dt(const StepperState& state) const
{
    return std::max(explicit_limit(state), ctl_.dt_min);
}

double Stepper::explicit_limit(const StepperState& state) const
{
    const Grid& g = state.w.grid;
    double speed = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        const Expression& phi = spec_.phi[a];
        if (!phi.depends_on(Var::U)) continue;
        for (std::size_t p = 0; p < g.node_count(); ++p) {
            const Point pt = spec_.at(g.x(g.ix(p)), g.dim == 2 ? g.y(g.iy(p)) : 0.0, state.t, state.w[p]);
            speed = std::max(speed, flux_speed(phi, pt));
        }
    }
    double lf = 0.0;
    if (spec_.f.depends_on(Var::U)) {
        for (std::size_t p = 0; p < g.node_count(); ++p) {
            const Point pt = spec_.at(g.x(g.ix(p)), g.dim == 2 ? g.y(g.iy(p)) : 0.0, state.t, state.w[p]);
            lf = std::max(lf, std::fabs(partial_u(spec_.f, pt, du_step(state.w[p]))));
        }
    }
    double dt = ctl_.dt_max;
    if (speed > 0.0) dt = std::min(dt, ctl_.cfl * g.min_h() / speed);
    if (lf > 0.0) dt = std::min(dt, 0.5 / lf);
    return dt;
}

ScalarField Stepper::explicit_update(const ScalarField& w, double t, double dt) const
{
    const Grid& g = w.grid;
    ScalarField rate(g);
    if (spec_.has_flux()) {
        FaceField flux(g);
        for (int a = 0; a < g.dim; ++a) {
            const Expression& phi = spec_.phi[a];
            for (std::size_t f = 0; f < flux[a].size(); ++f) {
                const auto [lo, hi] = g.face_nodes(a, f);
                const auto xm = g.face_midpoint(a, f);
                const Point pl = spec_.at(xm[0], xm[1], t, w[lo]);
                const Point pr = spec_.at(xm[0], xm[1], t, w[hi]);
                const double fl = phi(pl);
                const double fr = phi(pr);
                double alpha = 0.0;
                if (phi.depends_on(Var::U)) alpha = std::max(flux_speed(phi, pl), flux_speed(phi, pr));
                flux[a][f] = 0.5 * (fl + fr) + 0.5 * alpha * (w[hi] - w[lo]);
            }
        }
        rate = divergence(flux);
    }
    ScalarField out = w;
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        if (g.on_boundary(p)) {
            out[p] = 0.0;
            continue;
        }
        const Point pt = spec_.at(g.x(g.ix(p)), g.dim == 2 ? g.y(g.iy(p)) : 0.0, t, w[p]);
        out[p] = w[p] + dt * (rate[p] + spec_.f(pt));
    }
    return out;
}

Stepper::Attempt Stepper::implicit_solve(const ScalarField& w_star, const ScalarField& start, double dt) const
{
    const Grid& g = w_star.grid;
    const InteriorMap& map = linear_->map;
    const double delta = reg_.delta;
    const bool newton = ctl_.linearization == Linearization::Newton;

    Attempt out;
    ScalarField w = start;
    pin_boundary(w);
    if (map.nodes.empty()) {
        out.ok = true;
        out.w = w;
        return out;
    }

    PenaltyFaces faces = penalty_faces(w, spec_, reg_);
    std::vector<double> r = residual(w, w_star, faces, delta, dt, map);
    double rnorm = merit(r);

    for (int it = 0; it < ctl_.picard_max; ++it) {
        if (!std::isfinite(rnorm)) return out;
        if (max_abs_vec(r) * dt <= 0.1 * ctl_.picard_tol) {
            out.ok = true;
            out.iters = it;
            break;
        }

        FaceField conductance(g);
        for (int a = 0; a < g.dim; ++a) {
            for (std::size_t f = 0; f < conductance[a].size(); ++f) {
                double c = faces.k[a][f];
                if (newton) {
                    const double gn = faces.normal[a][f];
                    c += 2.0 * gn * gn * faces.k_prime[a][f];
                }
                conductance[a][f] = delta * c;
            }
        }
        std::vector<double> rhs(r.size());
        for (std::size_t q = 0; q < r.size(); ++q) rhs[q] = -r[q];
        const std::vector<double> d = linear_->solve(conductance, dt, rhs);
        const double dmax = max_abs_vec(d);
        if (!std::isfinite(dmax)) return out;

        double alpha = 1.0;
        ScalarField trial = w;
        PenaltyFaces trial_faces;
        std::vector<double> trial_r;
        double trial_norm = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t q = 0; q < d.size(); ++q) trial[map.nodes[q]] = w[map.nodes[q]] + alpha * d[q];
            trial_faces = penalty_faces(trial, spec_, reg_);
            trial_r = residual(trial, w_star, trial_faces, delta, dt, map);
            trial_norm = merit(trial_r);
            if (!newton) {
                accepted = std::isfinite(trial_norm);
                break;
            }
            if (std::isfinite(trial_norm) && !trial_faces.clamped && trial_norm <= (1.0 - 1e-4 * alpha) * rnorm) {
                accepted = true;
                break;
            }
            if (alpha * dmax <= ctl_.picard_tol) {
                // below the tolerance the residual sits at its rounding floor
                accepted = std::isfinite(trial_norm);
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) return out;

        w = trial;
        faces = std::move(trial_faces);
        r = std::move(trial_r);
        rnorm = trial_norm;
        if (alpha * dmax <= ctl_.picard_tol * std::max(1.0, max_abs(w))) {
            out.ok = true;
            out.iters = it + 1;
            break;
        }
    }
    if (!out.ok) return out;
    out.clamped = faces.clamped;
    out.w = std::move(w);
    return out;
}

StepperState Stepper::step(const StepperState& state, double dt_limit, const ScalarField* guess) const
{
    const double stable = explicit_limit(state);
    if (stable < ctl_.dt_min) {
        std::ostringstream msg;
        msg << "stiffness collapse: explicit stability limit " << stable << " is below dt_min " << ctl_.dt_min
            << " at t=" << state.t;
        throw StiffnessCollapse(msg.str(), state.t, stable, state.w);
    }

    const double proposal =
        std::min(std::max(state.dt > 0.0 ? state.dt : ctl_.dt_init, ctl_.dt_min), ctl_.dt_max);
    double dt = std::min(proposal, stable);
    bool landing = false;
    if (dt_limit <= dt) {
        dt = dt_limit;
        landing = true;
    }

    StepperState next = state;
    int failures = 0;
    for (;;) {
        const ScalarField w_star = explicit_update(state.w, state.t, dt);

        // pick the better of the previous state and the caller's guess
        const ScalarField* start = &state.w;
        if (guess != nullptr && guess->grid == state.w.grid) {
            const InteriorMap& map = linear_->map;
            const PenaltyFaces fa = penalty_faces(state.w, spec_, reg_);
            const PenaltyFaces fb = penalty_faces(*guess, spec_, reg_);
            const double ra = merit(residual(state.w, w_star, fa, reg_.delta, dt, map));
            const double rb = merit(residual(*guess, w_star, fb, reg_.delta, dt, map));
            if (!fb.clamped && std::isfinite(rb) && rb < ra) start = guess;
        }

        Attempt attempt = implicit_solve(w_star, *start, dt);
        if (attempt.ok && !attempt.clamped) {
            next.w = std::move(attempt.w);
            next.picard_iters = attempt.iters;
            break;
        }
        if (attempt.ok && attempt.clamped) {
            ++next.clamp_events;
        } else {
            ++next.rejected_steps;
        }
        ++failures;
        dt *= 0.5;
        landing = false;
        if (dt < ctl_.dt_min) {
            std::ostringstream msg;
            msg << "stiffness collapse: step size " << dt << " fell below dt_min " << ctl_.dt_min << " at t="
                << state.t;
            throw StiffnessCollapse(msg.str(), state.t, dt, state.w);
        }
    }

    next.t = landing ? state.t + dt_limit : state.t + dt;
    next.last_dt = dt;
    double base = failures > 0 ? dt : proposal;
    if (next.picard_iters <= 5) {
        base *= 1.25;
    } else if (next.picard_iters >= 8) {
        base *= 0.7;
    }
    next.dt = std::min(std::max(base, ctl_.dt_min), ctl_.dt_max);
    return next;
}

StepRecord Stepper::record(const StepperState& before, const StepperState& after) const
{
    const Grid& g = after.w.grid;
    StepRecord rec;
    rec.t = after.t;
    rec.dt = after.last_dt;
    rec.picard_iters = after.picard_iters;
    rec.max_abs = max_abs(after.w);
    if (after.last_dt > 0.0) {
        for (std::size_t p = 0; p < g.node_count(); ++p) {
            const double rate = (after.w[p] - before.w[p]) / after.last_dt;
            rec.rate_l1 += g.node_weight(p) * std::fabs(rate);
            rec.rate_l2sq += g.node_weight(p) * rate * rate;
        }
    }
    const PenaltyFaces pf = penalty_faces(after.w, spec_, reg_);
    const FaceField gth = face_threshold(after.w, spec_);
    FaceField m2(g), m4(g);
    for (int a = 0; a < g.dim; ++a) {
        for (std::size_t f = 0; f < m2[a].size(); ++f) {
            const double m = pf.magnitude[a][f];
            m2[a][f] = m * m;
            m4[a][f] = m * m * m * m;
            rec.max_violation = std::max(rec.max_violation, m - gth[a][f]);
        }
    }
    rec.penalty_mass = face_integral(pf.k);
    rec.grad_l2 = std::sqrt(face_integral(m2));
    rec.grad_l4 = std::pow(face_integral(m4), 0.25);
    return rec;
}

StepperState step(const StepperState& state, const ProblemSpec& spec, const RegularizationParams& reg,
                  const StepControls& ctl)
{
    return Stepper(spec, reg, ctl).step(state);
}

double cfl_dt(const StepperState& state, const ProblemSpec& spec, const StepControls& ctl)
{
    return Stepper(spec, RegularizationParams{}, ctl).cfl_dt(state);
}

FaceField discrete_multiplier(const ScalarField& w, const ProblemSpec& spec, const RegularizationParams& reg)
{
    PenaltyFaces pf = penalty_faces(w, spec, reg);
    for (int a = 0; a < w.grid.dim; ++a) {
        for (double& v : pf.k[a]) v *= reg.delta;
    }
    return pf.k;
}

}  // namespace qvi

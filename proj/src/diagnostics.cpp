#include "qvi/diagnostics.hpp"

#include "qvi/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qvi {

Violation constraint_violation(const ScalarField& u, const ProblemSpec& spec)
{
    const FaceField m = face_gradient_magnitude(u);
    const FaceField g = face_threshold(u, spec);
    FaceField excess(u.grid);
    Violation v;
    for (int a = 0; a < u.grid.dim; ++a) {
        for (std::size_t f = 0; f < m[a].size(); ++f) {
            const double e = std::max(0.0, m[a][f] - g[a][f]);
            excess[a][f] = e;
            v.max = std::max(v.max, e);
        }
    }
    v.mass = face_integral(excess);
    return v;
}

std::size_t RegionMap::count(Region r) const
{
    std::size_t c = 0;
    for (int a = 0; a < grid.dim; ++a) c += static_cast<std::size_t>(std::count(faces[a].begin(), faces[a].end(), r));
    return c;
}

RegionMap classify_regions(const ScalarField& u, const ProblemSpec& spec, double band)
{
    if (!(band > 0.0)) throw std::invalid_argument("classify_regions: band must be positive");
    const FaceField m = face_gradient_magnitude(u);
    const FaceField g = face_threshold(u, spec);
    RegionMap out;
    out.grid = u.grid;
    for (int a = 0; a < u.grid.dim; ++a) {
        out.faces[a].resize(m[a].size());
        for (std::size_t f = 0; f < m[a].size(); ++f) {
            out.faces[a][f] = g[a][f] - m[a][f] <= band ? Region::Coincidence : Region::Free;
        }
    }
    return out;
}

ScalarField rescale_into(const ScalarField& v, const FaceField& target_g, double lambda_floor)
{
    check_same_grid(v.grid, target_g.grid, "rescale_into");
    const FaceField m = face_gradient_magnitude(v);
    double beta = 1.0;
    for (int a = 0; a < v.grid.dim; ++a) {
        for (std::size_t f = 0; f < m[a].size(); ++f) {
            const double g = std::max(target_g[a][f], lambda_floor);
            if (m[a][f] > g) beta = std::min(beta, g / (m[a][f] + 1e-15));
        }
    }
    if (beta >= 1.0) return v;
    ScalarField out = v;
    for (double& x : out.values) x *= beta;
    return out;
}

namespace {

// Normalized distance to the boundary: 0 on the boundary, 1 at its maximum.
ScalarField boundary_profile(const Grid& g)
{
    ScalarField d(g);
    double top = 0.0;
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        const int i = g.ix(p);
        double dist = std::min(i, g.n[0] - 1 - i) * g.h(0);
        if (g.dim == 2) {
            const int j = g.iy(p);
            dist = std::min(dist, std::min(j, g.n[1] - 1 - j) * g.h(1));
        }
        d[p] = dist;
        top = std::max(top, dist);
    }
    if (top > 0.0) {
        for (double& x : d.values) x /= top;
    }
    return d;
}

}  // namespace

std::vector<ScalarField> random_bumps(const Grid& g, int count, double amplitude, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const ScalarField profile = boundary_profile(g);
    double extent = g.hi[0] - g.lo[0];
    if (g.dim == 2) extent = std::min(extent, g.hi[1] - g.lo[1]);

    std::vector<ScalarField> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int k = 0; k < count; ++k) {
        const int bumps = 3 + static_cast<int>(rng() % 6);
        struct Bump {
            double cx, cy, sigma, amp;
        };
        std::vector<Bump> bs;
        for (int b = 0; b < bumps; ++b) {
            Bump bump{};
            bump.cx = g.lo[0] + unit(rng) * (g.hi[0] - g.lo[0]);
            bump.cy = g.dim == 2 ? g.lo[1] + unit(rng) * (g.hi[1] - g.lo[1]) : 0.0;
            bump.sigma = (0.05 + 0.25 * unit(rng)) * extent;
            bump.amp = amplitude * (2.0 * unit(rng) - 1.0);
            bs.push_back(bump);
        }
        ScalarField v(g);
        for (std::size_t p = 0; p < g.node_count(); ++p) {
            const double x = g.x(g.ix(p));
            const double y = g.dim == 2 ? g.y(g.iy(p)) : 0.0;
            double s = 0.0;
            for (const Bump& b : bs) {
                const double r2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
                s += b.amp * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
            }
            v[p] = s * profile[p];
        }
        out.push_back(std::move(v));
    }
    return out;
}

double variational_residual(const ScalarField& u, const ScalarField* dudt, const ScalarField& v,
                            const ProblemSpec& spec, double t, const Expression& source)
{
    const Grid& g = u.grid;
    check_same_grid(g, v.grid, "variational_residual");
    ScalarField diff(g);
    for (std::size_t p = 0; p < g.node_count(); ++p) diff[p] = v[p] - u[p];

    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        if (diff[p] == 0.0) continue;
        const double w = g.node_weight(p);
        const double x = g.x(g.ix(p));
        const double y = g.dim == 2 ? g.y(g.iy(p)) : 0.0;
        if (dudt != nullptr) lhs += w * (*dudt)[p] * diff[p];
        rhs += w * source(spec.at(x, y, t, u[p])) * diff[p];
    }
    if (spec.has_flux()) {
        const FaceField ubar = face_average(u);
        const FaceField grad = gradient(diff);
        FaceField flux(g);
        for (int a = 0; a < g.dim; ++a) {
            for (std::size_t f = 0; f < flux[a].size(); ++f) {
                const auto mid = g.face_midpoint(a, f);
                flux[a][f] = spec.phi[a](spec.at(mid[0], mid[1], t, ubar[a][f]));
            }
        }
        lhs += face_inner_product(flux, grad);
    }
    return lhs - rhs;
}

namespace {

double interval_rate(const Trajectory& traj, std::size_t k)
{
    const ScalarField& a = traj.snapshots[k];
    const ScalarField& b = traj.snapshots[k + 1];
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) s += a.grid.node_weight(p) * std::fabs(b[p] - a[p]);
    return s / (traj.times[k + 1] - traj.times[k]);
}

std::vector<ScalarField> test_family(const ScalarField& u, const FaceField& target, double lambda_floor, int n_tests,
                                     std::uint64_t seed)
{
    std::vector<ScalarField> tests;
    const double amplitude = std::max(1.0, max_abs(u));
    for (ScalarField& v : random_bumps(u.grid, n_tests, amplitude, seed)) {
        tests.push_back(rescale_into(v, target, lambda_floor));
    }
    for (double scale : {0.0, 0.5, 2.0}) {
        ScalarField v = u;
        for (double& x : v.values) x *= scale;
        pin_boundary(v);
        tests.push_back(rescale_into(v, target, lambda_floor));
    }
    return tests;
}

}  // namespace

QviResidual qvi_residual(const Trajectory& traj, const ProblemSpec& spec, int n_tests, std::uint64_t seed)
{
    const std::size_t K = traj.snapshots.size();
    if (K < 3) throw std::invalid_argument("qvi_residual: need at least 3 snapshots");
    std::vector<double> nu(K - 1);
    for (std::size_t k = 0; k + 1 < K; ++k) nu[k] = interval_rate(traj, k);
    const double quiet = 1e-9 * spec.grid.measure();

    QviResidual out;
    out.worst = std::numeric_limits<double>::infinity();
    out.worst_all = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < K; ++k) {
        const ScalarField& u = traj.snapshots[k];
        const double t = traj.times[k];
        ScalarField dudt(u.grid);
        const double span = traj.times[k + 1] - traj.times[k - 1];
        for (std::size_t p = 0; p < u.size(); ++p) {
            dudt[p] = (traj.snapshots[k + 1][p] - traj.snapshots[k - 1][p]) / span;
        }
        const double lo = std::min(nu[k - 1], nu[k]);
        const double hi = std::max(nu[k - 1], nu[k]);
        const bool flagged = hi > quiet && hi > 3.0 * lo;
        if (flagged) out.flagged_times.push_back(t);

        out.identity_error =
            std::max(out.identity_error, std::fabs(variational_residual(u, &dudt, u, spec, t, spec.f)));
        const FaceField target = face_threshold(u, spec);
        for (const ScalarField& v : test_family(u, target, spec.lambda_min, n_tests, seed + k)) {
            const double r = variational_residual(u, &dudt, v, spec, t, spec.f);
            ++out.tests;
            if (r < out.worst_all) out.worst_all = r;
            if (!flagged && r < out.worst) {
                out.worst = r;
                out.worst_time = t;
            }
        }
    }
    if (!std::isfinite(out.worst)) out.worst = 0.0;
    return out;
}

double stationary_worst_residual(const ScalarField& u, const ProblemSpec& spec, const Expression& source, double t,
                                int n_tests, std::uint64_t seed)
{
    const FaceField target = face_threshold(u, spec);
    double worst = variational_residual(u, nullptr, u, spec, t, source);
    for (const ScalarField& v : test_family(u, target, spec.lambda_min, n_tests, seed)) {
        worst = std::min(worst, variational_residual(u, nullptr, v, spec, t, source));
    }
    return worst;
}

double complementarity_residual(const ScalarField& u, const ProblemSpec& spec, const RegularizationParams& reg)
{
    const FaceField lambda = discrete_multiplier(u, spec, reg);
    const FaceField m = face_gradient_magnitude(u);
    const FaceField g = face_threshold(u, spec);
    FaceField c(u.grid);
    for (int a = 0; a < u.grid.dim; ++a) {
        for (std::size_t f = 0; f < c[a].size(); ++f) {
            c[a][f] = (lambda[a][f] - reg.delta) * std::max(0.0, g[a][f] - m[a][f]);
        }
    }
    return face_integral(c);
}

bool DiagnosticsReport::all_passed() const
{
    return std::all_of(entries.begin(), entries.end(), [](const DiagnosticEntry& e) { return e.passed; });
}

const DiagnosticEntry* DiagnosticsReport::find(const std::string& name) const
{
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

namespace {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string DiagnosticsReport::serialize() const
{
    std::ostringstream out;
    for (const auto& e : entries) {
        out << e.name << " | " << fmt(e.measured) << " | " << (e.has_bound ? fmt(e.bound) : "-") << " | "
            << (e.passed ? "PASS" : "FAIL") << " | " << e.tag << " | " << e.context << '\n';
    }
    return out.str();
}

DiagnosticsReport DiagnosticsReport::parse(const std::string& text)
{
    DiagnosticsReport r;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (int k = 0; k < 5; ++k) {
            const auto bar = line.find(" | ", start);
            if (bar == std::string::npos) throw std::invalid_argument("diagnostics: malformed line: " + line);
            parts.push_back(line.substr(start, bar - start));
            start = bar + 3;
        }
        parts.push_back(line.substr(start));
        DiagnosticEntry e;
        e.name = trim(parts[0]);
        e.measured = std::stod(trim(parts[1]));
        const std::string b = trim(parts[2]);
        e.has_bound = b != "-";
        if (e.has_bound) e.bound = std::stod(b);
        const std::string flag = trim(parts[3]);
        if (flag != "PASS" && flag != "FAIL") throw std::invalid_argument("diagnostics: bad pass flag: " + flag);
        e.passed = flag == "PASS";
        e.tag = trim(parts[4]);
        e.context = trim(parts[5]);
        r.entries.push_back(std::move(e));
    }
    return r;
}

DiagnosticsReport estimate_ledger(const Trajectory& traj, const ProblemSpec& spec, const RegularizationParams& reg,
                                  const LedgerOptions& opts)
{
    if (traj.snapshots.empty()) throw std::invalid_argument("estimate_ledger: empty trajectory");
    const Grid& g = spec.grid;
    const double measure = g.measure();
    const double d2 = reg.delta * reg.delta;

    std::ostringstream ctx;
    ctx << "eps=" << fmt(reg.epsilon) << " delta=" << fmt(reg.delta) << " grid=" << g.n[0];
    if (g.dim == 2) ctx << 'x' << g.n[1];
    ctx << " t=[" << fmt(traj.times.front()) << "," << fmt(traj.times.back()) << "]";
    const std::string context = ctx.str();

    DiagnosticsReport r;
    auto add = [&](const std::string& name, double measured, std::optional<double> bound, bool passed,
                   const char* tag) {
        DiagnosticEntry e;
        e.name = name;
        e.measured = measured;
        e.has_bound = bound.has_value();
        e.bound = bound.value_or(0.0);
        e.passed = passed;
        e.tag = tag;
        e.context = context;
        r.entries.push_back(std::move(e));
    };

    double sup = 0.0;
    double pmass = 0.0;
    double gl2 = 0.0;
    double gl4 = 0.0;
    for (const ScalarField& u : traj.snapshots) {
        sup = std::max(sup, max_abs(u));
        const PenaltyFaces pf = penalty_faces(u, spec, reg);
        FaceField m2(g), m4(g);
        for (int a = 0; a < g.dim; ++a) {
            for (std::size_t f = 0; f < m2[a].size(); ++f) {
                const double m = pf.magnitude[a][f];
                m2[a][f] = m * m;
                m4[a][f] = m2[a][f] * m2[a][f];
            }
        }
        pmass = std::max(pmass, face_integral(pf.k));
        gl2 = std::max(gl2, std::sqrt(face_integral(m2)));
        gl4 = std::max(gl4, std::pow(face_integral(m4), 0.25));
    }

    const double M = sup_bound_M(spec);
    add("sup_bound", sup, M + 1e-3, sup <= M + 1e-3, "estimate");
    const double M_stated = sup_bound_M_statement(spec);
    add("sup_bound_stated_constants", sup, M_stated, sup <= M_stated + 1e-3, "estimate");

    double rate = 0.0;
    double variation = 0.0;
    for (std::size_t k = 0; k + 1 < traj.snapshots.size(); ++k) {
        const double nu = interval_rate(traj, k);
        rate = std::max(rate, nu);
        variation += nu * (traj.times[k + 1] - traj.times[k]);
    }
    add("time_derivative_l1", rate, std::nullopt, std::isfinite(rate), "estimate");
    add("time_variation_l1", variation, std::nullopt, std::isfinite(variation), "plumbing");

    add("penalty_mass", pmass, std::nullopt, std::isfinite(pmass), "estimate");
    add("penalty_mass_delta2", pmass * d2, std::nullopt, std::isfinite(pmass), "estimate");
    add("grad_l2", gl2, std::nullopt, std::isfinite(gl2), "estimate");
    add("grad_l2_delta2", gl2 * d2, std::nullopt, std::isfinite(gl2), "estimate");
    add("grad_l4", gl4, std::nullopt, std::isfinite(gl4), "estimate");
    add("grad_l4_delta2", gl4 * d2, std::nullopt, std::isfinite(gl4), "estimate");

    const ScalarField& last = traj.snapshots.back();
    const Violation viol = constraint_violation(last, spec);
    add("constraint_violation", viol.max, opts.violation_target, viol.max <= opts.violation_target, "estimate");
    const double mass_bound = 2.0 * measure * opts.violation_target;
    add("constraint_violation_mass", viol.mass, mass_bound, viol.mass <= mass_bound, "plumbing");

    const double comp = complementarity_residual(last, spec, reg);
    const double comp_bound = 0.05 * reg.delta * measure;
    add("complementarity", comp, comp_bound, comp <= comp_bound, "estimate");

    if (traj.snapshots.size() >= 3) {
        double fmax = 0.0;
        for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
            const ScalarField& u = traj.snapshots[k];
            for (std::size_t p = 0; p < u.size(); ++p) {
                const double x = g.x(g.ix(p));
                const double y = g.dim == 2 ? g.y(g.iy(p)) : 0.0;
                fmax = std::max(fmax, std::fabs(spec.f(spec.at(x, y, traj.times[k], u[p]))));
            }
        }
        const QviResidual q = qvi_residual(traj, spec, opts.n_tests, opts.seed);
        const double tol = -0.05 * std::max(fmax, 1e-12) * measure;
        add("qvi_residual", q.worst, tol, q.worst >= tol, "estimate");
        add("qvi_residual_identity", q.identity_error, 1e-12 * std::max(1.0, fmax) * measure,
            q.identity_error <= 1e-12 * std::max(1.0, fmax) * measure, "plumbing");
        add("qvi_residual_flagged_times", static_cast<double>(q.flagged_times.size()), std::nullopt, true, "plumbing");
    }
    return r;
}

}  // namespace qvi

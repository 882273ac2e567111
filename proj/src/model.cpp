#include "qvi/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <limits>
#include <random>
#include <stdexcept>

namespace qvi {

bool ProblemSpec::has_flux() const
{
    for (int a = 0; a < grid.dim; ++a) {
        if (!(phi[a].is_constant() && phi[a](Point{}) == 0.0)) return true;
    }
    return false;
}

void check_structure(const ProblemSpec& spec)
{
    if (!(spec.lambda_min > 0.0)) {
        throw std::invalid_argument("lambda_min must be positive");
    }
    if (spec.g.depends_on(Var::T)) {
        throw std::invalid_argument("constraint G may not depend on t");
    }
    if (spec.lambda_max && *spec.lambda_max < spec.lambda_min) {
        throw std::invalid_argument("lambda_max must not be below lambda_min");
    }
    if (!(spec.horizon > 0.0)) {
        throw std::invalid_argument("horizon must be positive");
    }
    if (spec.grid.dim == 1) {
        const Expression* all[] = {&spec.phi[0], &spec.f, &spec.g, &spec.u0};
        for (const Expression* e : all) {
            if (e->depends_on(Var::Y)) throw std::invalid_argument("variable y used in a 1D problem");
        }
    }
    if (spec.g.depends_on(Var::U) == false && spec.f_inf && spec.f_inf->depends_on(Var::T)) {
        throw std::invalid_argument("f_inf may not depend on t");
    }
}

ScalarField sample_initial(const ProblemSpec& spec)
{
    const Grid& g = spec.grid;
    ScalarField u(g);
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        if (g.on_boundary(p)) continue;
        u[p] = spec.u0(spec.at(g.x(g.ix(p)), g.dim == 2 ? g.y(g.iy(p)) : 0.0, 0.0, 0.0));
    }
    return u;
}

FaceField face_threshold(const ScalarField& u, const ProblemSpec& spec)
{
    const Grid& g = u.grid;
    FaceField out(g);
    if (spec.g.is_constant()) {
        const double v = spec.g(Point{});
        for (int a = 0; a < g.dim; ++a) std::fill(out[a].begin(), out[a].end(), v);
        return out;
    }
    for (int a = 0; a < g.dim; ++a) {
        for (std::size_t f = 0; f < out[a].size(); ++f) {
            const auto [lo, hi] = g.face_nodes(a, f);
            const auto xm = g.face_midpoint(a, f);
            out[a][f] = spec.g(spec.at(xm[0], xm[1], 0.0, 0.5 * (u[lo] + u[hi])));
        }
    }
    return out;
}

bool ValidationReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const
{
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

namespace {

double divergence_phi(const ProblemSpec& spec, const Point& p)
{
    // partial in x at fixed u
    double div = 0.0;
    for (int a = 0; a < spec.grid.dim; ++a) {
        const Expression& e = spec.phi[a];
        if (e.is_constant()) continue;
        const double hx = 1e-5 * std::max(1.0, spec.grid.hi[a] - spec.grid.lo[a]);
        Point lo = p;
        Point hi = p;
        if (a == 0) {
            lo.x -= hx;
            hi.x += hx;
        } else {
            lo.y = *p.y - hx;
            hi.y = *p.y + hx;
        }
        div += (e(hi) - e(lo)) / (2.0 * hx);
    }
    return div;
}

void record(AssumptionCheck& c, double margin, const Point& p)
{
    // "unset" marks a check that has not seen a sample yet
    if (c.message == "unset" || margin < c.worst) {
        c.worst = margin;
        c.witness = p;
        c.message.clear();
    }
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec, int samples, std::uint64_t seed)
{
    if (samples < 100) throw std::invalid_argument("validate: need at least 100 samples");
    check_structure(spec);

    const double m_hat = sup_bound_M(spec);
    const double u_range = 2.0 * std::max(m_hat, 1.0);
    const Grid& g = spec.grid;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(g.lo[0], g.hi[0]);
    std::uniform_real_distribution<double> uy(g.lo[1], g.hi[1]);
    std::uniform_real_distribution<double> ut(0.0, spec.horizon);
    std::uniform_real_distribution<double> uu(-u_range, u_range);

    // structured part: lattice in u (odd count so u = 0 is included) at domain corners/centre
    std::vector<Point> points;
    const int lattice = 33;
    for (int k = 0; k < lattice; ++k) {
        const double u = -u_range + 2.0 * u_range * k / (lattice - 1);
        const double xc = 0.5 * (g.lo[0] + g.hi[0]);
        const double yc = 0.5 * (g.lo[1] + g.hi[1]);
        points.push_back(spec.at(xc, yc, 0.0, u));
        points.push_back(spec.at(xc, yc, spec.horizon, u));
    }
    for (int s = 0; s < samples; ++s) {
        const double x = ux(rng);
        const double y = g.dim == 2 ? uy(rng) : 0.0;
        const double t = ut(rng);
        const double u = uu(rng);
        points.push_back(spec.at(x, y, t, u));
    }

    auto make = [](const char* name) {
        AssumptionCheck c;
        c.name = name;
        c.message = "unset";
        return c;
    };
    AssumptionCheck growth = make("linear_growth");
    AssumptionCheck floor = make("threshold_floor");
    std::optional<AssumptionCheck> ceiling;
    if (spec.lambda_max) ceiling = make("threshold_ceiling");
    std::optional<AssumptionCheck> decrease;
    if (spec.mu) decrease = make("strict_decrease");

    auto guarded = [](AssumptionCheck& c, auto&& body) {
        try {
            body();
        } catch (const EvalError& e) {
            c.passed = false;
            c.message = std::string("evaluation error: ") + e.what();
            throw EvalError(std::string("assumption ") + c.name + ": " + e.what(), e.subexpression());
        }
    };

    for (const Point& p : points) {
        guarded(growth, [&] {
            const double lhs = std::fabs(divergence_phi(spec, p) + spec.f(p));
            record(growth, spec.c1 * std::fabs(p.u) + spec.c2 - lhs, p);
        });
        guarded(floor, [&] { record(floor, spec.g(p) - spec.lambda_min, p); });
        if (ceiling) {
            guarded(*ceiling, [&] { record(*ceiling, *spec.lambda_max - spec.g(p), p); });
        }
        if (decrease) {
            guarded(*decrease, [&] {
                const double h = 1e-4 * std::max(1.0, std::fabs(p.u));
                record(*decrease, -0.5 * *spec.mu - partial_u(spec.f, p, h), p);
            });
        }
    }

    ValidationReport report;
    auto finish = [&](AssumptionCheck c) {
        c.passed = c.worst >= 0.0;
        if (c.passed) {
            c.message = "ok";
        } else {
            std::ostringstream msg;
            msg << "violated by " << -c.worst << " at x=" << c.witness.x;
            if (c.witness.y) msg << " y=" << *c.witness.y;
            msg << " t=" << c.witness.t << " u=" << c.witness.u;
            c.message = msg.str();
        }
        report.checks.push_back(std::move(c));
    };
    finish(growth);
    finish(floor);
    if (ceiling) finish(*ceiling);
    if (decrease) finish(*decrease);
    return report;
}

SupBoundConstants proof_constants(double c1, double c2)
{
    return {2.0 * c1 + 1.0, c2 * c2};
}

SupBoundConstants statement_constants(double c1, double c2)
{
    return {c1 + 0.5, 0.5 * c2 * c2};
}

double sup_bound(SupBoundConstants k, double horizon, double u0_max)
{
    const double base = u0_max + 1.0;
    auto objective = [&](double lambda) {
        const double r = k.b2 > 0.0 ? std::sqrt(k.b2 / (lambda - k.b1)) : 0.0;
        return std::exp(lambda * horizon) * std::max(base, r);
    };
    if (k.b2 == 0.0) {
        // objective increases in lambda; infimum is the limit at b1
        return std::exp(k.b1 * horizon) * base;
    }
    // golden-section on (b1 + 1e-6, b1 + 50]; the objective is unimodal there
    double a = k.b1 + 1e-6;
    double b = k.b1 + 50.0;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, std::fabs(b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
    }
    return std::min({objective(0.5 * (a + b)), objective(k.b1 + 1e-6), objective(k.b1 + 50.0)});
}

namespace {

double max_abs_initial(const ProblemSpec& spec)
{
    return max_abs(sample_initial(spec));
}

}  // namespace

double sup_bound_M(const ProblemSpec& spec)
{
    return sup_bound(proof_constants(spec.c1, spec.c2), spec.horizon, max_abs_initial(spec));
}

double sup_bound_M_statement(const ProblemSpec& spec)
{
    return sup_bound(statement_constants(spec.c1, spec.c2), spec.horizon, max_abs_initial(spec));
}

}  // namespace qvi

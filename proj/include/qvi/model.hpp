#pragma once

#include "qvi/expr.hpp"
#include "qvi/grid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qvi {

/// Continuous problem data: flux Phi, source f, threshold G, initial datum,
/// horizon, and the structural constants the a priori bounds depend on.
struct ProblemSpec {
    Grid grid;
    double horizon = 1.0;
    std::array<Expression, 2> phi{};  // phi[1] unused in 1D
    Expression f;
    Expression g;
    Expression u0;
    double c1 = 0.0;
    double c2 = 1.0;
    double lambda_min = 0.1;
    std::optional<double> lambda_max;
    std::optional<double> mu;
    std::optional<Expression> f_inf;

    Point at(double x, double y, double t, double u) const
    {
        Point p{x, std::nullopt, t, u};
        if (grid.dim == 2) p.y = y;
        return p;
    }

    /// True when the threshold does not depend on u (variational case).
    bool variational() const { return !g.depends_on(Var::U); }
    bool has_flux() const;
};

/// Throws std::invalid_argument if the spec is structurally invalid
/// (lambda_min <= 0, G depends on t, y used in 1D).
void check_structure(const ProblemSpec& spec);

/// Nodal sample of u0 with boundary nodes pinned to zero.
ScalarField sample_initial(const ProblemSpec& spec);

/// G(x_f, mean of adjacent u) at every face.
FaceField face_threshold(const ScalarField& u, const ProblemSpec& spec);

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    double worst = 0.0;  // worst margin (negative means violated)
    Point witness;
    std::string message;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    bool all_passed() const;
    const AssumptionCheck* find(const std::string& name) const;
};

/// Samples the standing assumptions on a seeded lattice of (x, t, u) with |u| <= 2M.
ValidationReport validate(const ProblemSpec& spec, int samples, std::uint64_t seed = 1);

struct SupBoundConstants {
    double b1;
    double b2;
};

/// Constants used by the proof of the sup bound: b1 = 2 c1 + 1, b2 = c2^2.
SupBoundConstants proof_constants(double c1, double c2);
/// Constants as stated with the bound: b1 = c1 + 1/2, b2 = c2^2 / 2.
SupBoundConstants statement_constants(double c1, double c2);

/// inf over lambda > b1 of e^{lambda T} max{u0max + 1, sqrt(b2 / (lambda - b1))}.
double sup_bound(SupBoundConstants k, double horizon, double u0_max);

/// sup_bound with proof constants and max|u0| sampled on the grid.
double sup_bound_M(const ProblemSpec& spec);
double sup_bound_M_statement(const ProblemSpec& spec);

}  // namespace qvi

#pragma once

#include "qvi/continuation.hpp"
#include "qvi/grid.hpp"
#include "qvi/model.hpp"
#include "qvi/penalty.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qvi {

struct Violation {
    double max = 0.0;
    double mass = 0.0;
};

/// max and volume-weighted face sum of (|grad u| - G(u))^+.
Violation constraint_violation(const ScalarField& u, const ProblemSpec& spec);

enum class Region { Free, Coincidence };

struct RegionMap {
    Grid grid;
    std::array<std::vector<Region>, 2> faces;
    std::size_t count(Region r) const;
};

/// COINCIDENCE where G - |grad u| <= band, FREE elsewhere.
RegionMap classify_regions(const ScalarField& u, const ProblemSpec& spec, double band);

/// beta * v with beta = min(1, min_f target_g / (|grad v| + 1e-15)).
ScalarField rescale_into(const ScalarField& v, const FaceField& target_g, double lambda_floor);

/// Random smooth test functions with zero boundary values: 3-8 Gaussian bumps
/// times the normalized distance-to-boundary profile. Not yet rescaled.
std::vector<ScalarField> random_bumps(const Grid& g, int count, double amplitude, std::uint64_t seed);

/// sum_nodes vol * dudt (v-u) + sum_faces vol * Phi(u).grad(v-u) - sum_nodes vol * f(u)(v-u)
double variational_residual(const ScalarField& u, const ScalarField* dudt, const ScalarField& v,
                            const ProblemSpec& spec, double t, const Expression& source);

struct QviResidual {
    double worst = 0.0;            // min over unflagged snapshots
    double worst_all = 0.0;        // min over every snapshot
    double worst_time = 0.0;
    double identity_error = 0.0;   // max |r(v = u)|
    int tests = 0;
    std::vector<double> flagged_times;
};

/// Samples n_tests feasible test functions per interior snapshot (plus v = u
/// and scaled copies of u) and returns the smallest residual.
QviResidual qvi_residual(const Trajectory& traj, const ProblemSpec& spec, int n_tests, std::uint64_t seed);

/// Time-independent residual (no dudt term) with source evaluated at t,
/// minimized over the same test family as qvi_residual.
double stationary_worst_residual(const ScalarField& u, const ProblemSpec& spec, const Expression& source, double t,
                                 int n_tests, std::uint64_t seed);

/// Volume-weighted face sum of (lambda_h - delta) (G - |grad u|)^+.
double complementarity_residual(const ScalarField& u, const ProblemSpec& spec, const RegularizationParams& reg);

struct DiagnosticEntry {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool has_bound = false;
    bool passed = true;
    std::string tag;      // "estimate" (a priori bound) or "plumbing"
    std::string context;
};

struct DiagnosticsReport {
    std::vector<DiagnosticEntry> entries;

    bool all_passed() const;
    const DiagnosticEntry* find(const std::string& name) const;
    /// One line per entry: name | measured | bound | PASS/FAIL | tag | context
    std::string serialize() const;
    static DiagnosticsReport parse(const std::string& text);
};

struct LedgerOptions {
    int n_tests = 64;
    std::uint64_t seed = 1;
    double violation_target = 1e-2;
};

/// Assembles the estimate ledger from the trajectory's snapshots alone, so a
/// stored run can be re-checked bit for bit.
DiagnosticsReport estimate_ledger(const Trajectory& traj, const ProblemSpec& spec, const RegularizationParams& reg,
                                  const LedgerOptions& opts = {});

}  // namespace qvi

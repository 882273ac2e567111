#pragma once

#include "qvi/asymptotic.hpp"
#include "qvi/config.hpp"
#include "qvi/continuation.hpp"
#include "qvi/diagnostics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qvi {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitTargetMissed = 2 };

struct AppOptions {
    bool strict = false;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

/// Output directory: --out when given, else <directory>/<prefix>.
std::string run_directory(const RunConfig& cfg, const AppOptions& opts);

/// Number of sampled test functions per snapshot in the stored ledger.
inline constexpr int kLedgerTests = 64;

struct RunSummary {
    int status = kExitOk;
    std::string message;
    std::optional<ContinuationResult> result;
    DiagnosticsReport report;
    double penalty_mass = 0.0;  // max over the final stage's steps
    double grad_l2 = 0.0;
    double grad_l4 = 0.0;
    double violation = 0.0;     // final step
    double delta = 0.0;
    double wall_seconds = 0.0;
};

/// Solves (VI when G ignores u, QVI otherwise), writes snapshots, series and
/// manifest into dir, and returns the outcome. Never throws for solver failures.
RunSummary execute_run(const RunConfig& cfg, const std::string& dir);

int cmd_run(RunConfig cfg, const AppOptions& opts, std::ostream& out, std::ostream& err);

/// axis is one of delta (fixed delta), eps_min, n, dt_init.
int cmd_sweep(RunConfig cfg, const std::string& axis, const std::vector<std::string>& values, const AppOptions& opts,
              std::ostream& out, std::ostream& err);

int cmd_steady(RunConfig cfg, const AppOptions& opts, std::ostream& out, std::ostream& err);

/// Recomputes the diagnostics ledger from stored snapshots and compares it
/// with the manifest: prints MATCH (exit 0) or MISMATCH with the differing checks (exit 1).
int cmd_diagnose(const std::string& run_dir, std::ostream& out, std::ostream& err);

/// bindings are "name=value" for x, y, t, u (default 0).
int cmd_eval_expr(const std::string& expression, const std::vector<std::string>& bindings, std::ostream& out,
                  std::ostream& err);

}  // namespace qvi

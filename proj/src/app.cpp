#include "qvi/app.hpp"

#include "qvi/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <thread>

namespace qvi {

namespace fs = std::filesystem;

std::string run_directory(const RunConfig& cfg, const AppOptions& opts)
{
    if (opts.out) return *opts.out;
    return (fs::path(cfg.directory) / cfg.prefix).string();
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string snapshot_name(std::size_t k)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%04zu.csv", k);
    return buf;
}

std::string stage_line(const StageRecord& s)
{
    std::ostringstream o;
    o << "epsilon=" << format_real(s.epsilon) << " delta=" << format_real(s.delta)
      << " max_violation=" << format_real(s.max_violation) << " final_violation=" << format_real(s.final_violation)
      << " steps=" << s.steps << " first_step_iters=" << s.first_step_iters
      << " mean_iters=" << format_real(s.mean_iters) << " t_end=" << format_real(s.t_end)
      << " stalled=" << (s.stalled ? "true" : "false");
    return o.str();
}

std::string fit_line(const DecayFit& f)
{
    std::ostringstream o;
    o << "t_start=" << format_real(f.t_start) << " t_end=" << format_real(f.t_end)
      << " rate=" << format_real(f.fitted_rate) << " amplitude=" << format_real(f.fitted_amplitude)
      << " residual=" << format_real(f.residual) << " samples=" << f.samples.size()
      << " skipped=" << (f.skipped ? "true" : "false");
    return o.str();
}

ContinuationResult solve_for(const ProblemSpec& spec, const RunConfig& cfg, const IntegrationOptions& opts)
{
    if (spec.variational()) return solve_vi(spec, cfg.continuation, cfg.solver, opts);
    return solve_qvi(spec, cfg.continuation, cfg.solver, opts);
}

// Snapshots, series, ledger, and the shared manifest sections of a finished solve.
DiagnosticsReport write_trajectory(Manifest& m, const ContinuationResult& res, const RunConfig& cfg,
                                   const ProblemSpec& spec, const std::string& dir)
{
    const Trajectory& traj = res.trajectory;
    const RegularizationParams& reg = traj.reg_used;
    m.set("run", "epsilon", format_real(reg.epsilon));
    m.set("run", "delta", format_real(reg.delta));
    m.set("run", "target_met", res.target_met ? "true" : "false");
    m.set("run", "achieved_violation", format_real(res.achieved_violation));
    m.set("run", "stalled", traj.stalled ? "true" : "false");
    if (res.time_derivative_l2) m.set("run", "time_derivative_l2", format_real(*res.time_derivative_l2));
    m.set("run", "seed", std::to_string(cfg.seed));
    m.set("run", "ledger_tests", std::to_string(kLedgerTests));

    for (std::size_t k = 0; k < res.stages.size(); ++k) {
        m.set("stages", "stage." + std::to_string(k), stage_line(res.stages[k]));
        m.set("timing", "stage." + std::to_string(k), format_real(res.stages[k].wall_seconds));
    }

    m.set("snapshots", "count", std::to_string(traj.snapshots.size()));
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const std::string name = snapshot_name(k);
        write_file_atomic((fs::path(dir) / name).string(), snapshot_csv(traj.snapshots[k], spec, reg));
        m.set("snapshots", "time." + std::to_string(k), format_real(traj.times[k]));
        m.set("snapshots", "file." + std::to_string(k), name);
    }
    write_file_atomic((fs::path(dir) / "series.csv").string(), series_csv(traj.series));

    LedgerOptions lo;
    lo.n_tests = kLedgerTests;
    lo.seed = cfg.seed;
    lo.violation_target = cfg.continuation.violation_target;
    DiagnosticsReport report = estimate_ledger(traj, spec, reg, lo);
    std::istringstream lines(report.serialize());
    std::string line;
    for (int k = 0; std::getline(lines, line); ++k) m.set("diagnostics", "line." + std::to_string(k), line);
    return report;
}

void fill_metrics(RunSummary& s)
{
    const Trajectory& traj = s.result->trajectory;
    for (const auto& r : traj.series) {
        s.penalty_mass = std::max(s.penalty_mass, r.penalty_mass);
        s.grad_l2 = std::max(s.grad_l2, r.grad_l2);
        s.grad_l4 = std::max(s.grad_l4, r.grad_l4);
    }
    s.violation = traj.series.empty() ? 0.0 : traj.series.back().max_violation;
    s.delta = traj.reg_used.delta;
}

}  // namespace

RunSummary execute_run(const RunConfig& cfg, const std::string& dir)
{
    RunSummary s;
    const auto t0 = std::chrono::steady_clock::now();
    Manifest m;
    m.add_block(cfg.serialize("config."));
    try {
        const ProblemSpec spec = cfg.to_spec();
        m.set("run", "mode", spec.variational() ? "vi" : "qvi");
        try {
            s.result = solve_for(spec, cfg, cfg.integration());
        } catch (const ContinuationFailure& e) {
            s.status = kExitFailure;
            s.message = e.what();
            m.set("run", "status", "failed");
            m.set("run", "message", s.message);
            m.set("run", "failed_stage", stage_line(e.stage()));
            if (!e.snapshot().values.empty()) {
                const RegularizationParams reg{e.stage().epsilon, e.stage().delta, cfg.continuation.g_smoothing};
                write_file_atomic((fs::path(dir) / "failure_snapshot.csv").string(),
                                  snapshot_csv(e.snapshot(), spec, reg));
            }
            m.set("timing", "total", format_real(seconds_since(t0)));
            write_file_atomic((fs::path(dir) / "manifest.txt").string(), m.serialize());
            s.wall_seconds = seconds_since(t0);
            return s;
        }
        s.report = write_trajectory(m, *s.result, cfg, spec, dir);
        fill_metrics(s);
        if (s.result->target_met) {
            m.set("run", "status", "ok");
        } else {
            s.status = kExitTargetMissed;
            std::ostringstream msg;
            msg << "constraint saturation residual: achieved violation " << format_real(s.result->achieved_violation)
                << " > target " << format_real(cfg.continuation.violation_target);
            s.message = msg.str();
            m.set("run", "status", "target_not_reached");
            m.set("run", "message", s.message);
        }
    } catch (const std::exception& e) {
        s.status = kExitFailure;
        s.message = e.what();
        m.set("run", "status", "failed");
        m.set("run", "message", s.message);
    }
    s.wall_seconds = seconds_since(t0);
    m.set("timing", "total", format_real(s.wall_seconds));
    try {
        write_file_atomic((fs::path(dir) / "manifest.txt").string(), m.serialize());
    } catch (const std::exception& e) {
        s.status = kExitFailure;
        s.message = e.what();
    }
    return s;
}

namespace {

void print_report(const DiagnosticsReport& r, std::ostream& out)
{
    for (const auto& e : r.entries) {
        out << "  " << (e.passed ? "PASS " : "FAIL ") << e.name << " = " << format_real(e.measured);
        if (e.has_bound) out << " (bound " << format_real(e.bound) << ")";
        out << '\n';
    }
}

}  // namespace

int cmd_run(RunConfig cfg, const AppOptions& opts, std::ostream& out, std::ostream& err)
{
    if (opts.seed) cfg.seed = *opts.seed;
    const std::string dir = run_directory(cfg, opts);
    const RunSummary s = execute_run(cfg, dir);
    if (s.status == kExitFailure) {
        err << "error: " << s.message << '\n';
        return kExitFailure;
    }
    for (std::size_t k = 0; k < s.result->stages.size(); ++k) {
        out << "stage " << k << ": " << stage_line(s.result->stages[k]) << '\n';
    }
    out << "diagnostics:\n";
    print_report(s.report, out);
    if (s.status == kExitTargetMissed) err << "warning: " << s.message << '\n';
    out << "wrote " << dir << '\n';
    return s.status;
}

int cmd_sweep(RunConfig cfg, const std::string& axis, const std::vector<std::string>& values, const AppOptions& opts,
              std::ostream& out, std::ostream& err)
{
    if (values.empty()) {
        err << "error: sweep needs at least one value\n";
        return kExitFailure;
    }
    if (opts.seed) cfg.seed = *opts.seed;

    std::vector<RunConfig> children;
    try {
        for (const std::string& v : values) {
            RunConfig c = cfg;
            if (axis == "delta") {
                set_config_value(c, "continuation.delta_init", v);
                set_config_value(c, "continuation.delta_min", v);
            } else if (axis == "eps_min") {
                set_config_value(c, "continuation.eps_min", v);
            } else if (axis == "n") {
                set_config_value(c, "domain.n", c.dim == 2 ? "[" + v + ", " + v + "]" : "[" + v + "]");
            } else if (axis == "dt_init") {
                set_config_value(c, "solver.dt_init", v);
            } else {
                err << "error: unknown sweep axis '" << axis << "' (expected delta, eps_min, n, dt_init)\n";
                return kExitFailure;
            }
            c.continuation.check();
            c.solver.check();
            children.push_back(std::move(c));
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }

    const std::string dir = run_directory(cfg, opts);
    std::vector<RunSummary> results(children.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < children.size(); i = next++) {
            const std::string sub = (fs::path(dir) / (axis + "_" + std::to_string(i))).string();
            results[i] = execute_run(children[i], sub);
        }
    };
    const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(children.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string table =
        "value,status,delta,penalty_mass,penalty_mass_delta2,grad_l2,grad_l2_delta2,grad_l4,grad_l4_delta2,violation,"
        "wall_seconds\n";
    int status = kExitOk;
    double pmin = INFINITY, pmax = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const RunSummary& r = results[i];
        const double d2 = r.delta * r.delta;
        table += values[i] + ',' + std::to_string(r.status) + ',' + format_real(r.delta) + ',' +
                 format_real(r.penalty_mass) + ',' + format_real(r.penalty_mass * d2) + ',' + format_real(r.grad_l2) +
                 ',' + format_real(r.grad_l2 * d2) + ',' + format_real(r.grad_l4) + ',' + format_real(r.grad_l4 * d2) +
                 ',' + format_real(r.violation) + ',' + format_real(r.wall_seconds) + '\n';
        if (r.status == kExitFailure) {
            err << "error: " << axis << "=" << values[i] << ": " << r.message << '\n';
            status = kExitFailure;
        } else {
            if (r.status == kExitTargetMissed && status == kExitOk) status = kExitTargetMissed;
            pmin = std::min(pmin, r.penalty_mass * d2);
            pmax = std::max(pmax, r.penalty_mass * d2);
        }
    }
    try {
        write_file_atomic((fs::path(dir) / "sweep.csv").string(), table);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    out << table;
    if (pmax > 0.0) out << "penalty_mass_delta2 spread = " << format_real(pmax / pmin) << '\n';
    out << "wrote " << dir << '\n';
    return status;
}

int cmd_steady(RunConfig cfg, const AppOptions& opts, std::ostream& out, std::ostream& err)
{
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.horizon = cfg.t_max;
    const std::string dir = run_directory(cfg, opts);
    const auto t0 = std::chrono::steady_clock::now();
    Manifest m;
    m.add_block(cfg.serialize("config."));
    int status = kExitOk;
    try {
        const ProblemSpec spec = cfg.to_spec();
        m.set("run", "mode", spec.variational() ? "vi" : "qvi");
        const StationaryResult st =
            solve_stationary(spec, cfg.continuation, cfg.solver, cfg.t_max, cfg.stall_tol, cfg.snapshots);
        write_trajectory(m, st.run, cfg, spec, dir);
        const RegularizationParams& reg = st.run.trajectory.reg_used;
        write_file_atomic((fs::path(dir) / "u_inf.csv").string(), snapshot_csv(st.u_inf, spec, reg));

        std::string nu = "t,nu\n";
        for (const auto& [t, v] : nu_series(st.run.trajectory)) nu += format_real(t) + ',' + format_real(v) + '\n';
        write_file_atomic((fs::path(dir) / "nu.csv").string(), nu);

        const double residual = stationary_residual(st.u_inf, spec, kLedgerTests, cfg.seed, st.t_stall);
        const double R = std::max(1.0, max_abs(st.u_inf));
        m.set("steady", "stalled", st.stalled ? "true" : "false");
        m.set("steady", "t_stall", format_real(st.t_stall));
        m.set("steady", "stationary_residual", format_real(residual));
        m.set("steady", "residual_floor", format_real(-0.05 * spec.grid.measure()));
        m.set("steady", "xi_R", format_real(xi_R(spec, R, st.t_stall)));
        m.set("steady", "eta_M", format_real(eta_M(spec, R, st.t_stall)));
        if (st.fit) m.set("decay", "nu", fit_line(*st.fit));
        else m.set("decay", "nu", "unavailable");
        try {
            const HolderResult h = holder_convergence(st.run.trajectory, st.u_inf, cfg.alpha, spec.mu);
            m.set("decay", "holder", fit_line(h.fit) + " alpha=" + format_real(cfg.alpha) + " floor=" + format_real(h.floor));
        } catch (const std::invalid_argument& e) {
            m.set("decay", "holder", std::string("unavailable: ") + e.what());
        }

        out << "stalled: " << (st.stalled ? "yes" : "no") << " at t=" << format_real(st.t_stall) << '\n';
        out << "stationary residual: " << format_real(residual) << '\n';
        for (const auto& [k, v] : *m.section("decay")) out << k << ": " << v << '\n';
        if (!st.stalled) {
            status = kExitTargetMissed;
            m.set("run", "status", "not_stalled");
            err << "warning: not stalled by t_max=" << format_real(cfg.t_max) << '\n';
        } else {
            m.set("run", "status", "ok");
        }
    } catch (const std::exception& e) {
        m.set("run", "status", "failed");
        m.set("run", "message", e.what());
        err << "error: " << e.what() << '\n';
        status = kExitFailure;
    }
    m.set("timing", "total", format_real(seconds_since(t0)));
    try {
        write_file_atomic((fs::path(dir) / "manifest.txt").string(), m.serialize());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    out << "wrote " << dir << '\n';
    return status;
}

int cmd_diagnose(const std::string& run_dir, std::ostream& out, std::ostream& err)
{
    try {
        if (!fs::is_directory(run_dir)) throw IoError("run directory '" + run_dir + "' does not exist");
        const Manifest m = Manifest::parse(read_file((fs::path(run_dir) / "manifest.txt").string()));
        const RunConfig cfg = parse_config(m.serialize(), "config.");
        const ProblemSpec spec = cfg.to_spec();
        const std::string* status = m.get("run", "status");
        if (status == nullptr || *status == "failed") throw IoError("manifest records no completed run");

        auto need = [&](const std::string& sec, const std::string& key) -> const std::string& {
            const std::string* v = m.get(sec, key);
            if (v == nullptr) throw IoError("manifest: missing " + sec + "." + key);
            return *v;
        };
        RegularizationParams reg;
        reg.epsilon = std::stod(need("run", "epsilon"));
        reg.delta = std::stod(need("run", "delta"));
        reg.g_smoothing = cfg.continuation.g_smoothing;

        Trajectory traj;
        traj.reg_used = reg;
        const std::size_t count = std::stoul(need("snapshots", "count"));
        for (std::size_t k = 0; k < count; ++k) {
            traj.times.push_back(std::stod(need("snapshots", "time." + std::to_string(k))));
            const std::string file = need("snapshots", "file." + std::to_string(k));
            traj.snapshots.push_back(read_snapshot_csv(read_file((fs::path(run_dir) / file).string()), spec.grid));
        }

        LedgerOptions lo;
        lo.n_tests = static_cast<int>(std::stol(need("run", "ledger_tests")));
        lo.seed = std::stoull(need("run", "seed"));
        lo.violation_target = cfg.continuation.violation_target;
        const DiagnosticsReport replay = estimate_ledger(traj, spec, reg, lo);

        std::vector<std::string> stored;
        if (const auto* sec = m.section("diagnostics")) {
            for (const auto& kv : *sec) stored.push_back(kv.second);
        }
        std::vector<std::string> fresh;
        {
            std::istringstream lines(replay.serialize());
            std::string line;
            while (std::getline(lines, line)) fresh.push_back(line);
        }
        std::vector<std::string> differing;
        const std::size_t n = std::max(stored.size(), fresh.size());
        for (std::size_t k = 0; k < n; ++k) {
            const bool same = k < stored.size() && k < fresh.size() && stored[k] == fresh[k];
            if (same) continue;
            const std::string& src = k < fresh.size() ? fresh[k] : stored[k];
            differing.push_back(src.substr(0, src.find(" | ")));
        }
        if (differing.empty()) {
            out << "MATCH\n";
            return kExitOk;
        }
        out << "MISMATCH:";
        for (const auto& d : differing) out << ' ' << d;
        out << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int cmd_eval_expr(const std::string& expression, const std::vector<std::string>& bindings, std::ostream& out,
                  std::ostream& err)
{
    try {
        const Expression e = parse_expression(expression);
        Point p;
        for (const std::string& b : bindings) {
            const auto eq = b.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("binding '" + b + "' is not name=value");
            const std::string name = b.substr(0, eq);
            std::size_t used = 0;
            const std::string text = b.substr(eq + 1);
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument("binding '" + b + "' has a malformed value");
            if (name == "x") p.x = v;
            else if (name == "y") p.y = v;
            else if (name == "t") p.t = v;
            else if (name == "u") p.u = v;
            else throw std::invalid_argument("unknown variable '" + name + "' (expected x, y, t, u)");
        }
        out << format_real(e(p)) << '\n';
        return kExitOk;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace qvi

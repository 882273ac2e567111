#include "qvi/app.hpp"
#include "qvi/config.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

qvi::RunConfig load_or_default(const std::string& path, const qvi::AppOptions& opts)
{
    std::vector<std::string> warnings;
    qvi::RunConfig cfg = path.empty() ? qvi::RunConfig{} : qvi::load_config(path, opts.strict, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gradient-constrained evolution QVI solver"};
    app.require_subcommand(1);

    qvi::AppOptions opts;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Config file (INI)")->required()->check(CLI::ExistingFile);
        sub->add_flag("--strict", opts.strict, "Treat failed assumption checks as errors");
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--out", out_dir, "Output directory");
    };

    CLI::App* run = app.add_subcommand("run", "Solve once and write snapshots, series and manifest");
    add_common(run);

    CLI::App* sweep = app.add_subcommand("sweep", "Run the config once per value of one parameter");
    add_common(sweep);
    std::string axis;
    std::vector<std::string> values;
    sweep->add_option("--axis", axis, "delta | eps_min | n | dt_init")->required();
    sweep->add_option("--values", values, "Comma-separated values")->delimiter(',');
    sweep->add_option("--jobs", opts.jobs, "Parallel runs")->check(CLI::PositiveNumber);

    CLI::App* steady = app.add_subcommand("steady", "Integrate to a stationary state and fit decay rates");
    add_common(steady);

    CLI::App* diagnose = app.add_subcommand("diagnose", "Recompute a run's diagnostics and compare with its manifest");
    std::string run_dir;
    diagnose->add_option("run_dir", run_dir, "Run directory")->required();

    CLI::App* eval = app.add_subcommand("eval-expr", "Evaluate an expression");
    std::string expression;
    std::vector<std::string> bindings;
    eval->add_option("expression", expression, "Expression in x, y, t, u")->required();
    eval->add_option("bindings", bindings, "name=value pairs");

    CLI11_PARSE(app, argc, argv);

    if (run->count("--seed") + sweep->count("--seed") + steady->count("--seed") > 0) opts.seed = seed;
    if (!out_dir.empty()) opts.out = out_dir;

    try {
        if (*eval) return qvi::cmd_eval_expr(expression, bindings, std::cout, std::cerr);
        if (*diagnose) return qvi::cmd_diagnose(run_dir, std::cout, std::cerr);
        const qvi::RunConfig cfg = load_or_default(config_path, opts);
        if (*run) return qvi::cmd_run(cfg, opts, std::cout, std::cerr);
        if (*sweep) return qvi::cmd_sweep(cfg, axis, values, opts, std::cout, std::cerr);
        if (*steady) return qvi::cmd_steady(cfg, opts, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return qvi::kExitFailure;
    }
    return qvi::kExitFailure;
}

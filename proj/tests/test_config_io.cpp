#include "qvi/config.hpp"
#include "qvi/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace qvi;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("qvi_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string write_config(const std::string& name, const std::string& text)
{
    const std::string path = temp_dir(name) + "/config.ini";
    write_file_atomic(path, text);
    return path;
}

std::string error_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, MinimalConfigUsesDefaults)
{
    const std::string path = write_config("minimal", "[model]\nf = \"1\"\ng = \"1\"\nu0 = \"0\"\n");
    const RunConfig cfg = load_config(path);
    EXPECT_EQ(cfg.dim, 1);
    EXPECT_EQ(cfg.extents, (std::vector<double>{-1.0, 1.0}));
    EXPECT_EQ(cfg.n, std::vector<int>{81});
    EXPECT_EQ(cfg.continuation.eps_init, 0.1);
    EXPECT_EQ(cfg.continuation.delta_min, 1e-3);
    EXPECT_EQ(cfg.continuation.violation_target, 1e-2);
    EXPECT_EQ(cfg.snapshots, 50);
    EXPECT_EQ(cfg.stall_tol, 1e-5);
    const ProblemSpec spec = cfg.to_spec();
    EXPECT_EQ(spec.grid.node_count(), 81u);
    EXPECT_EQ(spec.grid.lo[0], -1.0);
}

TEST(Config, UnknownKeySuggestsNearest)
{
    const std::string msg = error_of([] { parse_config("[continuation]\nepsilon_init = 0.2\n"); });
    EXPECT_NE(msg.find("epsilon_init"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'eps_init'"), std::string::npos) << msg;
    EXPECT_NE(error_of([] { parse_config("[modle]\nf = \"1\"\n"); }).find("[model]"), std::string::npos);
}

TEST(Config, TimeDependentThresholdIsRejected)
{
    const std::string path = write_config("gt", "[model]\nf = \"1\"\ng = \"1+t\"\n");
    const std::string msg = error_of([&] { load_config(path); });
    EXPECT_NE(msg.find("constraint G may not depend on t"), std::string::npos) << msg;
}

TEST(Config, TypeMismatch)
{
    const std::string msg = error_of([] { parse_config("[domain]\nn = eighty\n"); });
    EXPECT_NE(msg.find("type mismatch"), std::string::npos) << msg;
    EXPECT_THROW(parse_config("[solver]\npicard_max = 2.5\n"), ConfigError);
    EXPECT_THROW(parse_config("[continuation]\nwarm_start = maybe\n"), ConfigError);
    EXPECT_THROW(parse_config("[model]\nf = \"1 +\"\n").to_spec(), ConfigError);
}

TEST(Config, ListsAndOptionalValues)
{
    const RunConfig cfg = parse_config(
        "[domain]\ndim = 2\nextents = [0, 1, 0, 2]\nn = 17, 33\n[model]\nlambda_max = 2\nmu = none\n");
    EXPECT_EQ(cfg.extents, (std::vector<double>{0, 1, 0, 2}));
    EXPECT_EQ(cfg.n, (std::vector<int>{17, 33}));
    EXPECT_EQ(cfg.lambda_max, 2.0);
    EXPECT_FALSE(cfg.mu.has_value());
    EXPECT_EQ(cfg.to_spec().grid.node_count(), 17u * 33u);
    EXPECT_EQ(parse_config("[domain]\ndim = 2\nn = 17\n").n, (std::vector<int>{17, 17}));
    EXPECT_THROW(parse_config("[domain]\ndim = 2\nn = 17, 17, 17\n"), ConfigError);
    EXPECT_THROW(parse_config("[domain]\nextents = [0, 1, 2]\n"), ConfigError);
}

TEST(Config, NormalizationIsIdempotent)
{
    const RunConfig cfg = parse_config(
        "# comment\n[model]\nf = \"1 - 0.1*u\"\nc1 = 0.1\nf_inf = \"1-0.1*u\"\n[solver]\ndt_init = 0.0005\n"
        "[continuation]\nwarm_start = false\n[output]\nseed = 7\n");
    const std::string once = cfg.serialize();
    const std::string twice = parse_config(once).serialize();
    EXPECT_EQ(once, twice);
    EXPECT_EQ(parse_config(once).solver.dt_init, 0.0005);
    EXPECT_FALSE(parse_config(once).continuation.warm_start);
}

TEST(Config, PrefixedSections)
{
    RunConfig cfg;
    cfg.f = "1-u";
    cfg.seed = 99;
    const std::string text = "[run]\nstatus = ok\n" + cfg.serialize("config.");
    const RunConfig back = parse_config(text, "config.");
    EXPECT_EQ(back.f, "1-u");
    EXPECT_EQ(back.seed, 99u);
}

TEST(Config, SetValueByKey)
{
    RunConfig cfg;
    set_config_value(cfg, "continuation.delta_init", "0.05");
    set_config_value(cfg, "eps_min", "0.01");
    EXPECT_EQ(cfg.continuation.delta_init, 0.05);
    EXPECT_EQ(cfg.continuation.eps_min, 0.01);
    EXPECT_THROW(set_config_value(cfg, "delta_inti", "1"), ConfigError);
}

TEST(Config, NearestKeyAndRealFormatting)
{
    EXPECT_EQ(nearest_key("epsilon_init", {"eps_init", "eps_min", "delta_init"}), "eps_init");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (int i = 0; i < 200; ++i) {
        const double v = d(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        EXPECT_EQ(std::stod(format_real(v)), v);
    }
    EXPECT_EQ(format_real(0.1), "0.1");
}

TEST(Config, StrictTurnsAssumptionWarningsIntoErrors)
{
    const std::string path = write_config("strict", "[model]\nf = \"1+5*u\"\nc1 = 0\n");
    std::vector<std::string> warnings;
    EXPECT_NO_THROW(load_config(path, false, &warnings));
    ASSERT_FALSE(warnings.empty());
    EXPECT_NE(warnings.front().find("linear_growth"), std::string::npos);
    EXPECT_THROW(load_config(path, true), ConfigError);
}

TEST(Config, BadControlsRejected)
{
    EXPECT_THROW(load_config(write_config("cfl", "[solver]\ncfl = 2\n")), ConfigError);
    EXPECT_THROW(load_config(write_config("snap", "[solver]\nsnapshots = 1\n")), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/qvi.ini"), ConfigError);
}

TEST(Io, AtomicWriteAndRead)
{
    const std::string dir = temp_dir("atomic");
    const std::string path = dir + "/nested/file.txt";
    write_file_atomic(path, "hello\n");
    EXPECT_EQ(read_file(path), "hello\n");
    write_file_atomic(path, "again\n");
    EXPECT_EQ(read_file(path), "again\n");
    EXPECT_FALSE(fs::exists(path + ".tmp"));
    EXPECT_THROW(read_file(dir + "/missing"), IoError);
}

TEST(Io, SnapshotColumnsAndRoundTrip)
{
    ProblemSpec s;
    s.grid = Grid::rectangle(0, 1, 0, 1, 4, 3);
    s.phi[0] = parse_expression("0");
    s.phi[1] = parse_expression("0");
    s.f = parse_expression("1");
    s.g = parse_expression("1+u");
    s.u0 = parse_expression("0");
    ScalarField u = sample(s.grid, [](double x, double y) { return x * y / 3.0; });
    pin_boundary(u);
    const std::string csv = snapshot_csv(u, s, RegularizationParams{0.1, 0.1});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,u,grad_norm,g,slack,multiplier");
    // rows ordered by y, then x
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "0,0,");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, line.find(',', line.find(',') + 1)), "0.33333333333333331,0");
    const ScalarField back = read_snapshot_csv(csv, s.grid);
    EXPECT_EQ(back.values, u.values);
    EXPECT_THROW(read_snapshot_csv(csv, Grid::rectangle(0, 1, 0, 1, 4, 4)), IoError);

    ProblemSpec line_spec = s;
    line_spec.grid = Grid::line(-1, 1, 5);
    EXPECT_EQ(snapshot_csv(ScalarField(line_spec.grid), line_spec, RegularizationParams{}).substr(0, 30),
              "x,u,grad_norm,g,slack,multipli");
}

TEST(Io, SeriesHeader)
{
    const std::string csv = series_csv({StepRecord{}});
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "t,dt,picard_iters,max_abs,rate_l1,penalty_mass,max_violation,grad_l2,grad_l4,rate_l2sq");
}

TEST(Io, ManifestRoundTripAndTimingExclusion)
{
    Manifest m;
    m.set("run", "status", "ok");
    m.set("run", "epsilon", "0.001");
    m.set("timing", "wall_seconds", "1.5");
    m.add_block("[config.model]\nf = \"1\"\n");
    const std::string text = m.serialize();
    EXPECT_EQ(text.substr(0, text.find('\n')), "schema_version = 1");
    const Manifest back = Manifest::parse(text);
    EXPECT_EQ(back.serialize(), text);
    EXPECT_EQ(*back.get("config.model", "f"), "\"1\"");
    EXPECT_EQ(back.get("run", "missing"), nullptr);

    Manifest other = back;
    other.set("timing", "wall_seconds", "9.0");
    EXPECT_EQ(other.comparable(), back.comparable());
    EXPECT_EQ(back.comparable().find("[timing]"), std::string::npos);
}

TEST(Io, ManifestSchemaMismatch)
{
    const std::string msg = error_of([] { Manifest::parse("schema_version = 2\n[run]\nstatus = ok\n"); });
    EXPECT_NE(msg.find("schema mismatch"), std::string::npos) << msg;
    EXPECT_THROW(Manifest::parse("[run]\nstatus = ok\n"), IoError);
    EXPECT_THROW(Manifest::parse(""), IoError);
}

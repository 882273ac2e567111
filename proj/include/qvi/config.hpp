#pragma once

#include "qvi/continuation.hpp"
#include "qvi/model.hpp"
#include "qvi/parabolic.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qvi {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every run setting, with defaults. Expressions keep their source text.
struct RunConfig {
    // [domain]
    int dim = 1;
    std::vector<double> extents{-1.0, 1.0};  // a, b (, c, d)
    std::vector<int> n{81};                  // nx (, ny)

    // [model]
    std::string phi_x = "0";
    std::string phi_y = "0";
    std::string f = "0";
    std::string g = "1";
    std::string u0 = "0";
    double c1 = 0.0;
    double c2 = 1.0;
    double lambda_min = 0.1;
    std::optional<double> lambda_max;
    std::optional<double> mu;
    std::optional<std::string> f_inf;
    double horizon = 1.0;

    // [solver]
    StepControls solver;
    int snapshots = 50;

    // [continuation]
    ContinuationSchedule continuation;

    // [asymptotic]
    double t_max = 10.0;
    double stall_tol = 1e-5;
    double alpha = 0.0;
    double t_probe = 2.0;

    // [output]
    std::string directory = "out";
    std::string prefix = "run";
    std::uint64_t seed = 12345;

    /// Builds the problem; throws ConfigError for malformed expressions or a
    /// structurally invalid model.
    ProblemSpec to_spec() const;
    IntegrationOptions integration() const;

    /// Canonical text: every key in a fixed order, reals as %.17g. Section
    /// headers are written as [<section_prefix><section>].
    std::string serialize(const std::string& section_prefix = "") const;
};

/// Parses INI text. Sections/keys are matched after stripping section_prefix
/// from section names; sections not starting with it are ignored when
/// section_prefix is non-empty. Unknown keys are errors naming the nearest key.
RunConfig parse_config(const std::string& text, const std::string& section_prefix = "");

/// Reads and parses a config file, then checks the model. Assumption check
/// failures become warnings, or a ConfigError when strict.
RunConfig load_config(const std::string& path, bool strict = false, std::vector<std::string>* warnings = nullptr);

/// Runs model.validate on the config's problem and returns one message per failed check.
std::vector<std::string> assumption_warnings(const RunConfig& cfg);

/// Sets section.key (or a bare key when unambiguous) from text, as in a config file.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Closest candidate by edit distance.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

/// Shortest decimal text that reads back to the same double.
std::string format_real(double v);

}  // namespace qvi

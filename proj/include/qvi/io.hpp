#pragma once

#include "qvi/continuation.hpp"
#include "qvi/model.hpp"
#include "qvi/penalty.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qvi {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes to a sibling temp file, then renames over path.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Columns x,(y),u,grad_norm,g,slack,multiplier; rows in node order (x fastest).
std::string snapshot_csv(const ScalarField& u, const ProblemSpec& spec, const RegularizationParams& reg);
/// Reads the u column back onto the given grid.
ScalarField read_snapshot_csv(const std::string& text, const Grid& grid);

/// Columns t,dt,picard_iters,max_abs,rate_l1,penalty_mass,max_violation,grad_l2,grad_l4,rate_l2sq.
std::string series_csv(const std::vector<StepRecord>& series);

/// Ordered key/value sections. The first line of the text form is
/// "schema_version = <n>"; [timing] is excluded from comparisons.
struct Manifest {
    static constexpr int kSchemaVersion = 1;

    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

    void set(const std::string& section, const std::string& key, const std::string& value);
    /// Appends raw lines (e.g. an embedded config) verbatim under a section header.
    void add_block(const std::string& text);
    const std::string* get(const std::string& section, const std::string& key) const;
    const std::vector<std::pair<std::string, std::string>>* section(const std::string& name) const;

    std::string serialize() const;
    static Manifest parse(const std::string& text);

    /// Serialized text without the [timing] section.
    std::string comparable() const;

private:
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>::iterator find_or_add(
        const std::string& name);
};

}  // namespace qvi

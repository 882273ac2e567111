#include "qvi/io.hpp"

#include "qvi/parabolic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qvi {

namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& content)
{
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace {

void put(std::string& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string snapshot_csv(const ScalarField& u, const ProblemSpec& spec, const RegularizationParams& reg)
{
    const Grid& g = u.grid;
    const ScalarField grad = node_average(face_gradient_magnitude(u));
    const ScalarField lambda = node_average(discrete_multiplier(u, spec, reg));
    std::string out = g.dim == 2 ? "x,y,u,grad_norm,g,slack,multiplier\n" : "x,u,grad_norm,g,slack,multiplier\n";
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        const double x = g.x(g.ix(p));
        const double y = g.dim == 2 ? g.y(g.iy(p)) : 0.0;
        const double gv = spec.g(spec.at(x, y, 0.0, u[p]));
        put(out, x);
        out += ',';
        if (g.dim == 2) {
            put(out, y);
            out += ',';
        }
        put(out, u[p]);
        out += ',';
        put(out, grad[p]);
        out += ',';
        put(out, gv);
        out += ',';
        put(out, gv - grad[p]);
        out += ',';
        put(out, lambda[p]);
        out += '\n';
    }
    return out;
}

ScalarField read_snapshot_csv(const std::string& text, const Grid& grid)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("snapshot: empty file");
    const std::size_t ucol = grid.dim == 2 ? 2 : 1;
    ScalarField u(grid);
    std::size_t p = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (p >= u.size()) throw IoError("snapshot: more rows than grid nodes");
        std::size_t start = 0;
        for (std::size_t c = 0; c < ucol; ++c) {
            start = line.find(',', start);
            if (start == std::string::npos) throw IoError("snapshot: malformed row");
            ++start;
        }
        const std::size_t end = line.find(',', start);
        try {
            u[p++] = std::stod(line.substr(start, end - start));
        } catch (const std::exception&) {
            throw IoError("snapshot: bad value in row " + std::to_string(p));
        }
    }
    if (p != u.size()) throw IoError("snapshot: expected " + std::to_string(u.size()) + " rows, found " + std::to_string(p));
    return u;
}

std::string series_csv(const std::vector<StepRecord>& series)
{
    std::string out = "t,dt,picard_iters,max_abs,rate_l1,penalty_mass,max_violation,grad_l2,grad_l4,rate_l2sq\n";
    for (const auto& r : series) {
        put(out, r.t);
        out += ',';
        put(out, r.dt);
        out += ',' + std::to_string(r.picard_iters) + ',';
        for (double v : {r.max_abs, r.rate_l1, r.penalty_mass, r.max_violation, r.grad_l2, r.grad_l4}) {
            put(out, v);
            out += ',';
        }
        put(out, r.rate_l2sq);
        out += '\n';
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>::iterator Manifest::find_or_add(
    const std::string& name)
{
    for (auto it = sections.begin(); it != sections.end(); ++it) {
        if (it->first == name) return it;
    }
    sections.emplace_back(name, std::vector<std::pair<std::string, std::string>>{});
    return sections.end() - 1;
}

void Manifest::set(const std::string& section, const std::string& key, const std::string& value)
{
    auto& entries = find_or_add(section)->second;
    for (auto& kv : entries) {
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    }
    entries.emplace_back(key, value);
}

void Manifest::add_block(const std::string& text)
{
    const Manifest m = parse("schema_version = " + std::to_string(kSchemaVersion) + "\n" + text);
    for (const auto& [name, entries] : m.sections) {
        for (const auto& [k, v] : entries) set(name, k, v);
    }
}

const std::string* Manifest::get(const std::string& sec, const std::string& key) const
{
    const auto* entries = section(sec);
    if (entries == nullptr) return nullptr;
    for (const auto& kv : *entries) {
        if (kv.first == key) return &kv.second;
    }
    return nullptr;
}

const std::vector<std::pair<std::string, std::string>>* Manifest::section(const std::string& name) const
{
    for (const auto& s : sections) {
        if (s.first == name) return &s.second;
    }
    return nullptr;
}

namespace {

std::string render(const Manifest& m, bool with_timing)
{
    std::ostringstream out;
    out << "schema_version = " << Manifest::kSchemaVersion << '\n';
    for (const auto& [name, entries] : m.sections) {
        if (!with_timing && name == "timing") continue;
        out << "\n[" << name << "]\n";
        for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
    }
    return out.str();
}

}  // namespace

std::string Manifest::serialize() const { return render(*this, true); }

std::string Manifest::comparable() const { return render(*this, false); }

Manifest Manifest::parse(const std::string& text)
{
    Manifest m;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    std::string current;
    while (std::getline(in, line)) {
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (first) {
            first = false;
            const std::string want = "schema_version = " + std::to_string(kSchemaVersion);
            if (s.rfind("schema_version", 0) != 0) throw IoError("manifest: missing schema_version line");
            if (s != want) throw IoError("manifest schema mismatch: found '" + s + "', expected '" + want + "'");
            continue;
        }
        if (s.front() == '[' && s.back() == ']') {
            current = s.substr(1, s.size() - 2);
            m.find_or_add(current);
            continue;
        }
        const auto eq = line.find(" = ");
        if (eq == std::string::npos || current.empty()) throw IoError("manifest: malformed line: " + line);
        m.set(current, trim(line.substr(0, eq)), line.substr(eq + 3));
    }
    if (first) throw IoError("manifest: empty file");
    return m;
}

}  // namespace qvi

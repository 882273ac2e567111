#include "qvi/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace qvi {

std::string format_real(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates)
{
    auto distance = [](const std::string& a, const std::string& b) {
        std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
        for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            cur[0] = i;
            for (std::size_t j = 1; j <= b.size(); ++j) {
                const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
                cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
            }
            std::swap(prev, cur);
        }
        return prev[b.size()];
    };
    std::string best;
    std::size_t best_d = std::string::npos;
    for (const auto& c : candidates) {
        const std::size_t d = distance(key, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& raw)
{
    const std::string s = trim(raw);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

[[noreturn]] void type_mismatch(const std::string& key, const char* expected, const std::string& value)
{
    throw ConfigError("type mismatch for '" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_real(const std::string& key, const std::string& raw)
{
    const std::string s = unquote(raw);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) type_mismatch(key, "a real number", s);
    return v;
}

long long to_int(const std::string& key, const std::string& raw)
{
    const std::string s = unquote(raw);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) type_mismatch(key, "an integer", s);
    return v;
}

bool to_bool(const std::string& key, const std::string& raw)
{
    std::string s = unquote(raw);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    type_mismatch(key, "a boolean (true/false)", s);
}

bool is_none(const std::string& raw)
{
    const std::string s = unquote(raw);
    return s.empty() || s == "none";
}

std::vector<std::string> split_list(const std::string& raw)
{
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw ConfigError("unterminated list: " + s);
        s = s.substr(1, s.size() - 2);
    }
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!trim(item).empty()) out.push_back(trim(item));
    }
    return out;
}

std::string join_reals(const std::vector<double>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
    return s + "]";
}

std::string join_ints(const std::vector<int>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : "none"; }

struct KeySpec {
    const char* section;
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define QVI_REAL(sec, name, field)                                                          \
    KeySpec{sec, name, [](RunConfig& c, const std::string& v) { c.field = to_real(name, v); }, \
            [](const RunConfig& c) { return format_real(c.field); }}
#define QVI_OPT_REAL(sec, name, field)                                                        \
    KeySpec{sec, name,                                                                          \
            [](RunConfig& c, const std::string& v) {                                            \
                if (is_none(v)) c.field.reset();                                                \
                else c.field = to_real(name, v);                                                \
            },                                                                                  \
            [](const RunConfig& c) { return opt_real(c.field); }}
#define QVI_INT(sec, name, field)                                                                               \
    KeySpec{sec, name, [](RunConfig& c, const std::string& v) { c.field = static_cast<int>(to_int(name, v)); }, \
            [](const RunConfig& c) { return std::to_string(c.field); }}
#define QVI_BOOL(sec, name, field)                                                          \
    KeySpec{sec, name, [](RunConfig& c, const std::string& v) { c.field = to_bool(name, v); }, \
            [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}
#define QVI_STR(sec, name, field)                                                         \
    KeySpec{sec, name, [](RunConfig& c, const std::string& v) { c.field = unquote(v); }, \
            [](const RunConfig& c) { return quote(c.field); }}

const std::vector<KeySpec>& key_table()
{
    static const std::vector<KeySpec> table = {
        QVI_INT("domain", "dim", dim),
        KeySpec{"domain", "extents",
                [](RunConfig& c, const std::string& v) {
                    c.extents.clear();
                    for (const auto& item : split_list(v)) c.extents.push_back(to_real("extents", item));
                },
                [](const RunConfig& c) { return join_reals(c.extents); }},
        KeySpec{"domain", "n",
                [](RunConfig& c, const std::string& v) {
                    c.n.clear();
                    for (const auto& item : split_list(v)) c.n.push_back(static_cast<int>(to_int("n", item)));
                },
                [](const RunConfig& c) { return join_ints(c.n); }},

        QVI_STR("model", "phi_x", phi_x),
        QVI_STR("model", "phi_y", phi_y),
        QVI_STR("model", "f", f),
        QVI_STR("model", "g", g),
        QVI_STR("model", "u0", u0),
        QVI_REAL("model", "c1", c1),
        QVI_REAL("model", "c2", c2),
        QVI_REAL("model", "lambda_min", lambda_min),
        QVI_OPT_REAL("model", "lambda_max", lambda_max),
        QVI_OPT_REAL("model", "mu", mu),
        KeySpec{"model", "f_inf",
                [](RunConfig& c, const std::string& v) {
                    if (is_none(v)) c.f_inf.reset();
                    else c.f_inf = unquote(v);
                },
                [](const RunConfig& c) { return c.f_inf ? quote(*c.f_inf) : std::string("none"); }},
        QVI_REAL("model", "horizon", horizon),

        QVI_REAL("solver", "dt_init", solver.dt_init),
        QVI_REAL("solver", "cfl", solver.cfl),
        QVI_REAL("solver", "picard_tol", solver.picard_tol),
        QVI_INT("solver", "picard_max", solver.picard_max),
        QVI_REAL("solver", "dt_min", solver.dt_min),
        QVI_REAL("solver", "dt_max", solver.dt_max),
        QVI_INT("solver", "snapshots", snapshots),
        KeySpec{"solver", "linearization",
                [](RunConfig& c, const std::string& v) {
                    const std::string s = unquote(v);
                    if (s == "newton") c.solver.linearization = Linearization::Newton;
                    else if (s == "picard") c.solver.linearization = Linearization::Picard;
                    else type_mismatch("linearization", "newton or picard", s);
                },
                [](const RunConfig& c) {
                    return std::string(c.solver.linearization == Linearization::Newton ? "newton" : "picard");
                }},

        QVI_REAL("continuation", "eps_init", continuation.eps_init),
        QVI_REAL("continuation", "eps_factor", continuation.eps_factor),
        QVI_REAL("continuation", "eps_min", continuation.eps_min),
        QVI_REAL("continuation", "delta_init", continuation.delta_init),
        QVI_REAL("continuation", "delta_factor", continuation.delta_factor),
        QVI_REAL("continuation", "delta_min", continuation.delta_min),
        QVI_REAL("continuation", "violation_target", continuation.violation_target),
        QVI_BOOL("continuation", "warm_start", continuation.warm_start),
        QVI_BOOL("continuation", "early_stop", continuation.early_stop),
        QVI_INT("continuation", "g_smoothing", continuation.g_smoothing),

        QVI_REAL("asymptotic", "t_max", t_max),
        QVI_REAL("asymptotic", "stall_tol", stall_tol),
        QVI_REAL("asymptotic", "alpha", alpha),
        QVI_REAL("asymptotic", "t_probe", t_probe),

        QVI_STR("output", "directory", directory),
        QVI_STR("output", "prefix", prefix),
        KeySpec{"output", "seed",
                [](RunConfig& c, const std::string& v) {
                    const long long s = to_int("seed", v);
                    if (s < 0) type_mismatch("seed", "a nonnegative integer", v);
                    c.seed = static_cast<std::uint64_t>(s);
                },
                [](const RunConfig& c) { return std::to_string(c.seed); }},
    };
    return table;
}

#undef QVI_REAL
#undef QVI_OPT_REAL
#undef QVI_INT
#undef QVI_BOOL
#undef QVI_STR

const char* const kSections[] = {"domain", "model", "solver", "continuation", "asymptotic", "output"};

const KeySpec* find_key(const std::string& section, const std::string& key)
{
    for (const auto& k : key_table()) {
        if (section == k.section && key == k.key) return &k;
    }
    return nullptr;
}

// Fills list defaults that depend on dim (2D defaults to the unit square, 65 x 65).
void resolve_domain(RunConfig& cfg, bool extents_set, bool n_set)
{
    if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("dim must be 1 or 2");
    const std::size_t want = cfg.dim == 1 ? 2 : 4;
    if (!extents_set) cfg.extents = cfg.dim == 1 ? std::vector<double>{-1.0, 1.0} : std::vector<double>{0.0, 1.0, 0.0, 1.0};
    if (!n_set) cfg.n = cfg.dim == 1 ? std::vector<int>{81} : std::vector<int>{65, 65};
    if (cfg.dim == 2 && cfg.n.size() == 1) cfg.n.push_back(cfg.n[0]);
    if (cfg.extents.size() != want) {
        throw ConfigError("extents must list " + std::to_string(want) + " values for dim " + std::to_string(cfg.dim));
    }
    if (cfg.n.size() != static_cast<std::size_t>(cfg.dim)) {
        throw ConfigError("n must list " + std::to_string(cfg.dim) + " value(s) for dim " + std::to_string(cfg.dim));
    }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& section_prefix)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    bool active = section_prefix.empty();
    bool extents_set = false;
    bool n_set = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            std::string name = trim(s.substr(1, s.size() - 2));
            if (!section_prefix.empty()) {
                active = name.rfind(section_prefix, 0) == 0;
                if (!active) continue;
                name = name.substr(section_prefix.size());
            }
            if (std::find(std::begin(kSections), std::end(kSections), name) == std::end(kSections)) {
                const std::vector<std::string> names(std::begin(kSections), std::end(kSections));
                throw ConfigError("unknown section [" + name + "]; did you mean [" + nearest_key(name, names) + "]?");
            }
            section = name;
            continue;
        }
        if (!active) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' outside a section");
        const KeySpec* spec = find_key(section, key);
        if (spec == nullptr) {
            std::vector<std::string> keys;
            for (const auto& k : key_table()) {
                if (section == k.section) keys.emplace_back(k.key);
            }
            throw ConfigError("unknown key '" + key + "' in [" + section + "]; did you mean '" +
                              nearest_key(key, keys) + "'?");
        }
        spec->set(cfg, value);
        if (section == "domain" && key == "extents") extents_set = true;
        if (section == "domain" && key == "n") n_set = true;
    }
    resolve_domain(cfg, extents_set, n_set);
    return cfg;
}

std::string RunConfig::serialize(const std::string& section_prefix) const
{
    std::ostringstream out;
    std::string current;
    for (const auto& k : key_table()) {
        if (current != k.section) {
            if (!current.empty()) out << '\n';
            current = k.section;
            out << '[' << section_prefix << current << "]\n";
        }
        out << k.key << " = " << k.get(*this) << '\n';
    }
    return out.str();
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    std::string section;
    std::string name = key;
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
        section = key.substr(0, dot);
        name = key.substr(dot + 1);
    }
    const KeySpec* match = nullptr;
    std::vector<std::string> all;
    for (const auto& k : key_table()) {
        all.push_back(std::string(k.section) + "." + k.key);
        if (name == k.key && (section.empty() || section == k.section)) {
            if (match != nullptr) throw ConfigError("ambiguous key '" + key + "'");
            match = &k;
        }
    }
    if (match == nullptr) throw ConfigError("unknown key '" + key + "'; did you mean '" + nearest_key(key, all) + "'?");
    match->set(cfg, value);
    resolve_domain(cfg, true, true);
}

ProblemSpec RunConfig::to_spec() const
{
    ProblemSpec spec;
    try {
        if (dim == 1) {
            spec.grid = Grid::line(extents.at(0), extents.at(1), n.at(0));
        } else {
            spec.grid = Grid::rectangle(extents.at(0), extents.at(1), extents.at(2), extents.at(3), n.at(0), n.at(1));
        }
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid domain: ") + e.what());
    }
    auto expr = [](const char* name, const std::string& src) {
        try {
            return parse_expression(src);
        } catch (const ParseError& e) {
            throw ConfigError(std::string("cannot parse ") + name + " = \"" + src + "\": " + e.what());
        }
    };
    spec.horizon = horizon;
    spec.phi[0] = expr("phi_x", phi_x);
    spec.phi[1] = expr("phi_y", phi_y);
    spec.f = expr("f", f);
    spec.g = expr("g", g);
    spec.u0 = expr("u0", u0);
    spec.c1 = c1;
    spec.c2 = c2;
    spec.lambda_min = lambda_min;
    spec.lambda_max = lambda_max;
    spec.mu = mu;
    if (f_inf) spec.f_inf = expr("f_inf", *f_inf);
    try {
        check_structure(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

IntegrationOptions RunConfig::integration() const
{
    IntegrationOptions opts;
    opts.horizon = horizon;
    opts.snapshots = snapshots;
    return opts;
}

std::vector<std::string> assumption_warnings(const RunConfig& cfg)
{
    const ProblemSpec spec = cfg.to_spec();
    std::vector<std::string> out;
    const ValidationReport report = validate(spec, 200, cfg.seed);
    for (const auto& c : report.checks) {
        if (!c.passed) out.push_back("assumption '" + c.name + "' failed: " + c.message);
    }
    return out;
}

RunConfig load_config(const std::string& path, bool strict, std::vector<std::string>* warnings)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg = parse_config(buf.str());
    if (!(cfg.horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (cfg.snapshots < 2) throw ConfigError("snapshots must be at least 2");
    try {
        cfg.solver.check();
        cfg.continuation.check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const std::vector<std::string> w = assumption_warnings(cfg);
    if (strict && !w.empty()) throw ConfigError(w.front());
    if (warnings != nullptr) warnings->insert(warnings->end(), w.begin(), w.end());
    return cfg;
}

}  // namespace qvi

#include "hmflow/config.hpp"

#include "hmflow/benchmarks.hpp"
#include "hmflow/error.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace hmflow {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"source", {"family", "radius", "radius_value", "radius_base", "radius_amplitude", "radius_frequency", "n_theta",
                    "n_lat", "n_lon"}},
        {"target", {"family", "dim", "tube_radius"}},
        {"terminal", {"benchmark", "map", "winding", "amplitude", "mode", "tilt", "tolerance"}},
        {"solver", {"horizon", "dt", "tolerance", "max_iter", "ratio_trigger", "min_horizon", "backend", "mc_paths",
                    "quadrature_order", "flat_override", "implicit_driver", "implicit_sweeps", "sample_paths"}},
        {"run", {"seed", "threads", "out", "field_format", "svg", "wall_time"}},
        {"forward", {"start_time", "horizon", "dt", "n_paths", "start_node", "dump_paths", "antithetic"}},
        {"verify", {"field", "sample_paths", "tension_tolerance", "distance_tolerance", "weak_tolerance"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class Reader {
public:
    explicit Reader(const ConfigTable& t) : t_(t) {}

    [[nodiscard]] const std::string* raw(const std::string& sec, const std::string& key) const {
        const auto s = t_.find(sec);
        if (s == t_.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }
    [[nodiscard]] bool has(const std::string& sec, const std::string& key) const { return raw(sec, key) != nullptr; }

    [[nodiscard]] std::string text(const std::string& sec, const std::string& key, const std::string& def) const {
        const auto* v = raw(sec, key);
        return v ? *v : def;
    }

    [[nodiscard]] double real(const std::string& sec, const std::string& key, double def, bool positive = false) const {
        const auto* v = raw(sec, key);
        if (!v) return def;
        double out = 0.0;
        const auto r = std::from_chars(v->data(), v->data() + v->size(), out);
        if (r.ec != std::errc() || r.ptr != v->data() + v->size() || !std::isfinite(out)) bad(sec, key, "a number");
        if (positive && !(out > 0.0)) bad(sec, key, "a positive number");
        return out;
    }

    template <typename Int>
    [[nodiscard]] Int integer(const std::string& sec, const std::string& key, Int def, bool positive = false) const {
        const auto* v = raw(sec, key);
        if (!v) return def;
        Int out{};
        const auto r = std::from_chars(v->data(), v->data() + v->size(), out);
        if (r.ec != std::errc() || r.ptr != v->data() + v->size()) bad(sec, key, "an integer");
        if (positive && !(out > 0)) bad(sec, key, "a positive integer");
        return out;
    }

    [[nodiscard]] bool flag(const std::string& sec, const std::string& key, bool def) const {
        const auto* v = raw(sec, key);
        if (!v) return def;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        bad(sec, key, "true or false");
    }

    [[noreturn]] static void bad(const std::string& sec, const std::string& key, const std::string& what) {
        fail(ErrorCode::Config, "config key '" + sec + "." + key + "' must be " + what);
    }

private:
    const ConfigTable& t_;
};

RadiusProfile read_radius(const Reader& r) {
    const std::string kind = r.text("source", "radius", "constant");
    if (kind == "constant") return RadiusProfile::constant(r.real("source", "radius_value", 1.0, true));
    if (kind == "sinusoid")
        return RadiusProfile::sinusoid(r.real("source", "radius_base", 1.0, true), r.real("source", "radius_amplitude", 0.2),
                                       r.real("source", "radius_frequency", 1.0));
    if (kind == "ricci") return RadiusProfile::ricci_shrinking();
    Reader::bad("source", "radius", "constant, sinusoid or ricci");
}

BenchmarkCase read_problem(const Reader& r, bool& is_benchmark) {
    is_benchmark = r.has("terminal", "benchmark");
    BenchmarkCase c;
    if (is_benchmark) {
        for (const char* key : {"map", "winding", "amplitude", "mode", "tilt"})
            if (r.has("terminal", key))
                fail(ErrorCode::Config, std::string("config key 'terminal.") + key + "' conflicts with terminal.benchmark");
        for (const char* key : {"family", "radius", "radius_value", "radius_base", "radius_amplitude", "radius_frequency"})
            if (r.has("source", key))
                fail(ErrorCode::Config, std::string("config key 'source.") + key + "' is fixed by terminal.benchmark");
        if (r.has("target", "family") || r.has("target", "dim"))
            fail(ErrorCode::Config, "config key 'target.family'/'target.dim' is fixed by terminal.benchmark");
        c = benchmark_case(r.text("terminal", "benchmark", ""));
    } else {
        const RadiusProfile radius = read_radius(r);
        const std::string source = r.text("source", "family", "circle");
        const std::string target = r.text("target", "family", "sphere");
        if (target != "sphere" && target != "flat") Reader::bad("target", "family", "sphere or flat");
        const int dim = r.integer<int>("target", "dim", source == "sphere" ? 2 : 1, true);
        const std::string map = r.text("terminal", "map", "lift");
        const double amplitude = r.real("terminal", "amplitude", 0.0);
        if (source == "circle") {
            if (map == "lift") {
                c = lift_case("lift", radius, 0.25, dim, target == "flat", r.integer<int>("terminal", "winding", 1),
                              amplitude, r.integer<int>("terminal", "mode", 1, true));
            } else if (map == "great_circle") {
                if (dim != 2 || target != "sphere") fail(ErrorCode::Config, "terminal.map great_circle needs target S^2");
                c = great_circle_case("great_circle", radius, 0.25, r.real("terminal", "tilt", 0.3));
            } else {
                Reader::bad("terminal", "map", "lift or great_circle for a circle source");
            }
        } else if (source == "sphere") {
            if (map != "equivariant") Reader::bad("terminal", "map", "equivariant for a sphere source");
            if (dim != 2 || target != "sphere") fail(ErrorCode::Config, "terminal.map equivariant needs target S^2");
            c = equivariant_case("equivariant", radius, 0.1, amplitude);
        } else {
            Reader::bad("source", "family", "circle or sphere");
        }
    }
    c.n_theta = r.integer<std::size_t>("source", "n_theta", c.n_theta, true);
    c.n_lat = r.integer<std::size_t>("source", "n_lat", c.n_lat, true);
    c.n_lon = r.integer<std::size_t>("source", "n_lon", c.n_lon, true);
    c.tube_radius = r.real("target", "tube_radius", c.tube_radius, true);
    c.horizon = r.real("solver", "horizon", c.horizon, true);
    c.dt = r.real("solver", "dt", c.dt, true);
    c.tolerance = r.real("terminal", "tolerance", c.tolerance, true);
    return c;
}

}  // namespace

ConfigTable parse_config_table(std::istream& in, const std::string& origin) {
    ConfigTable t;
    std::string line;
    std::string section;
    std::size_t number = 0;
    auto where = [&] { return origin + ":" + std::to_string(number); };
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(ErrorCode::Config, where() + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().count(section)) fail(ErrorCode::Config, where() + ": unknown section '" + section + "'");
            t[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorCode::Config, where() + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(ErrorCode::Config, where() + ": key '" + key + "' outside any section");
        if (!schema().at(section).count(key))
            fail(ErrorCode::Config, where() + ": unknown key '" + key + "' in section [" + section + "]");
        if (t[section].count(key)) fail(ErrorCode::Config, where() + ": duplicate key '" + section + "." + key + "'");
        if (value.empty()) fail(ErrorCode::Config, where() + ": key '" + section + "." + key + "' has no value");
        t[section][key] = value;
    }
    if (in.bad()) fail(ErrorCode::Io, "failed reading " + origin);
    return t;
}

RunConfig build_config(const ConfigTable& table) {
    for (const auto& [sec, keys] : table) {
        const auto s = schema().find(sec);
        if (s == schema().end()) fail(ErrorCode::Config, "unknown section '" + sec + "'");
        for (const auto& [key, value] : keys)
            if (!s->second.count(key)) fail(ErrorCode::Config, "unknown key '" + key + "' in section [" + sec + "]");
    }
    const Reader r(table);
    RunConfig c;
    c.table = table;
    c.problem = read_problem(r, c.is_benchmark);

    c.seed = r.integer<std::uint64_t>("run", "seed", 1);
    c.threads = r.integer<unsigned>("run", "threads", 1);
    c.out_dir = r.text("run", "out", c.out_dir.string());
    const std::string fmt = r.text("run", "field_format", "binary");
    if (fmt == "binary")
        c.field_format = MapFieldFormat::Binary;
    else if (fmt == "csv")
        c.field_format = MapFieldFormat::Csv;
    else
        Reader::bad("run", "field_format", "binary or csv");
    c.svg = r.flag("run", "svg", true);

    auto& s = c.solver;
    s.initial_horizon = c.problem.horizon;
    s.dt = c.problem.dt;
    s.tolerance = r.real("solver", "tolerance", s.tolerance, true);
    s.max_iter = r.integer<std::size_t>("solver", "max_iter", s.max_iter, true);
    s.ratio_trigger = r.real("solver", "ratio_trigger", s.ratio_trigger, true);
    s.min_horizon = r.real("solver", "min_horizon", s.min_horizon, true);
    s.sample_paths = r.integer<std::size_t>("solver", "sample_paths", s.sample_paths);
    s.sample_seed = c.seed;
    s.record_wall_time = r.flag("run", "wall_time", false);
    try {
        s.bsde.backend = parse_backend(r.text("solver", "backend", "semigroup"));
    } catch (const Error&) {
        Reader::bad("solver", "backend", "semigroup or monte-carlo");
    }
    s.bsde.mc_paths = r.integer<std::size_t>("solver", "mc_paths", s.bsde.mc_paths);
    s.bsde.quadrature_order = r.integer<std::size_t>("solver", "quadrature_order", s.bsde.quadrature_order, true);
    s.bsde.flat_override = r.flag("solver", "flat_override", false);
    s.bsde.implicit_driver = r.flag("solver", "implicit_driver", false);
    s.bsde.implicit_sweeps = r.integer<std::size_t>("solver", "implicit_sweeps", s.bsde.implicit_sweeps, true);
    s.bsde.seed = c.seed;
    s.bsde.threads = c.threads;

    auto& f = c.forward;
    f.start_time = r.real("forward", "start_time", f.start_time);
    f.horizon = r.real("forward", "horizon", f.horizon, true);
    f.dt = r.real("forward", "dt", f.dt, true);
    f.n_paths = r.integer<std::size_t>("forward", "n_paths", f.n_paths, true);
    f.start_node = r.integer<std::size_t>("forward", "start_node", f.start_node);
    f.dump_paths = r.integer<std::size_t>("forward", "dump_paths", f.dump_paths);
    f.antithetic = r.flag("forward", "antithetic", false);
    if (f.start_time < 0.0 || f.start_time >= f.horizon)
        fail(ErrorCode::Config, "config key 'forward.start_time' must lie in [0, forward.horizon)");

    auto& v = c.verify;
    v.field = r.text("verify", "field", "");
    v.sample_paths = r.integer<std::size_t>("verify", "sample_paths", v.sample_paths, true);
    v.tension_tolerance = r.real("verify", "tension_tolerance", v.tension_tolerance, true);
    v.distance_tolerance = r.real("verify", "distance_tolerance", v.distance_tolerance, true);
    v.weak_tolerance = r.real("verify", "weak_tolerance", v.weak_tolerance, true);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open config file " + path.string());
    return build_config(parse_config_table(in, path.string()));
}

RunConfig with_overrides(const RunConfig& config, const std::optional<std::uint64_t>& seed,
                         const std::optional<std::string>& backend, const std::optional<std::filesystem::path>& out) {
    ConfigTable t = config.table;
    if (seed) t["run"]["seed"] = std::to_string(*seed);
    if (backend) t["solver"]["backend"] = *backend;
    if (out) t["run"]["out"] = out->string();
    return build_config(t);
}

std::string echo_config(const ConfigTable& table) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [sec, keys] : table) {
        if (!first) os << '\n';
        first = false;
        os << '[' << sec << "]\n";
        for (const auto& [key, value] : keys) os << key << " = " << value << '\n';
    }
    return os.str();
}

}  // namespace hmflow

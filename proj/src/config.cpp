#include "depofrag/config.hpp"

#include "depofrag/errors.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace depofrag {

namespace {

const std::map<std::string, std::string>& registry() {
    static const std::map<std::string, std::string> defaults = {
        {"scenario", "custom"},
        {"family", "depoly"},
        {"seed", "12345"},
        {"out_dir", "out"},
        {"threads", "1"},

        {"depoly.b", "1.0"},
        {"depoly.eps", "0.0078125"},
        {"depoly.i0", "10"},
        {"depoly.L", "1.0"},
        {"depoly.T", "1.0"},
        {"depoly.dt", "0"},  // 0: eps/(4b)
        {"depoly.k", "0"},
        {"depoly.u0.kind", "truncated-gaussian"},
        {"depoly.u0.center", "0.42"},
        {"depoly.u0.sigma", "0.18"},
        {"depoly.u0.amplitude", "1.0"},
        {"depoly.route", "first-order"},
        {"depoly.M", "2.0"},
        {"depoly.delta", "0.001"},
        {"depoly.nx", "128"},
        {"depoly.nt", "200"},

        {"gen.noise.delta", "0"},
        {"gen.moment.points", "0"},  // 0: every integrator step

        {"frag.alpha", "1.0"},
        {"frag.gamma", "2.0"},
        {"frag.kernel", "uniform"},
        {"frag.kernel.cells", "64"},
        {"frag.u0.kind", "gaussian"},
        {"frag.u0.center", "1.0"},
        {"frag.u0.sigma", "0.05"},
        {"frag.grid.cells", "512"},
        {"frag.grid.x_min_factor", "0.0001"},
        {"frag.samples.points", "10"},
        {"frag.samples.t_min", "0.2"},
        {"frag.samples.t_max", "200.0"},
        {"frag.samples.n", "10000"},
        {"frag.forward_route", "grid-ode"},
        {"frag.times", ""},  // optional comma-separated override for simulate-frag
        {"frag.kappa_route", "short-time"},
        {"frag.kappa.clip_tol", "0"},
        {"frag.moment_convention", "raw"},
        {"frag.mellin.sigma", "2.0"},
        {"frag.mellin.tau_max", "40.0"},
        {"frag.mellin.points", "513"},
        {"frag.mellin.floor_rel", "1e-6"},
        {"frag.profile.t0", "1.0"},
        {"frag.profile.t_max", "2048.0"},
        {"frag.profile.tol", "0.01"},
        {"frag.series.budget", "1e-8"},
        {"frag.series.x_min", "1e-5"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig::ExperimentConfig() : values_(registry()) {}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (!registry().count(key))
        throw std::invalid_argument("unknown config key: '" + key + "'");
    values_[key] = value;
}

double ExperimentConfig::get_double(const std::string& key) const {
    const std::string& v = get_string(key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
    }
}

int ExperimentConfig::get_int(const std::string& key) const {
    const double d = get_double(key);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw std::invalid_argument("config key '" + key + "': not an integer");
    return i;
}

std::uint64_t ExperimentConfig::get_uint64(const std::string& key) const {
    const std::string& v = get_string(key);
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an unsigned integer");
    }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
    const std::string& v = get_string(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config key '" + key + "': not a boolean");
}

const std::string& ExperimentConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key: '" + key + "'");
    return it->second;
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream ss;
    for (const auto& [k, v] : values_) ss << k << " = " << v << '\n';
    return ss.str();
}

}  // namespace depofrag

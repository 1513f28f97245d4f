#include "orbitforge/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace orbitforge {

void RunConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw InvalidInputError("integrator tolerances must be positive");
    if (!(section_d > 0.0))
        throw InvalidInputError("section.d must be positive");
    if (!(section_delta > 0.0) || section_delta > 1.0)
        throw InvalidInputError("section.delta must be in (0, 1]");
    if (section_height < 0.0)
        throw InvalidInputError("section.height must be >= 0");
    if (seeds_per_band < 1) throw InvalidInputError("graph.seeds_per_band >= 1");
    if (max_iters < 1) throw InvalidInputError("graph.max_iters >= 1");
    if (grid_s < 2 || grid_y < 1) throw InvalidInputError("extraction grid too small");
    if (!(t_max > 0.0)) throw InvalidInputError("return.t_max must be positive");
    if (!(probe_u > 0.0) || !(probe_v > 0.0) || probe_v > probe_u)
        throw InvalidInputError("probe radii must satisfy 0 < V <= U");
    if (!(probe_horizon > 0.0)) throw InvalidInputError("probe.horizon must be positive");
    if (probe_samples < 1) throw InvalidInputError("probe.samples >= 1");
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        throw InvalidInputError("config key '" + key + "': bad number '" +
                                value + "'");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        throw InvalidInputError("config key '" + key + "': bad integer '" +
                                value + "'");
    }
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "model") {
        cfg.model = value;
    } else if (key.rfind("model.", 0) == 0) {
        cfg.model_params[key.substr(6)] = parse_double(key, value);
    } else if (key == "integrator.abs_tol") {
        cfg.abs_tol = parse_double(key, value);
    } else if (key == "integrator.rel_tol") {
        cfg.rel_tol = parse_double(key, value);
    } else if (key == "section.d") {
        cfg.section_d = parse_double(key, value);
    } else if (key == "section.delta") {
        cfg.section_delta = parse_double(key, value);
    } else if (key == "section.height") {
        cfg.section_height = parse_double(key, value);
    } else if (key == "graph.seeds_per_band") {
        cfg.seeds_per_band = static_cast<int>(parse_long(key, value));
    } else if (key == "graph.max_iters") {
        cfg.max_iters = static_cast<int>(parse_long(key, value));
    } else if (key == "extract.grid_s") {
        cfg.grid_s = static_cast<int>(parse_long(key, value));
    } else if (key == "extract.grid_y") {
        cfg.grid_y = static_cast<int>(parse_long(key, value));
    } else if (key == "return.t_max") {
        cfg.t_max = parse_double(key, value);
    } else if (key == "probe.u") {
        cfg.probe_u = parse_double(key, value);
    } else if (key == "probe.v") {
        cfg.probe_v = parse_double(key, value);
    } else if (key == "probe.horizon") {
        cfg.probe_horizon = parse_double(key, value);
    } else if (key == "probe.samples") {
        cfg.probe_samples = parse_long(key, value);
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "component") {
        cfg.component = value;
    } else {
        throw InvalidInputError("unknown config key '" + key + "'");
    }
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInputError("config line " + std::to_string(lineno) +
                                    ": expected key = value");
        apply_config_entry(base, trim(line.substr(0, eq)),
                           trim(line.substr(eq + 1)));
    }
    return base;
}

}  // namespace orbitforge

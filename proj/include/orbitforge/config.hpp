#pragma once

// Run configuration: model selection, tolerances, section geometry, graph
// options, output location, and the sampling seed. Loadable from a flat
// key=value file; CLI flags override file values.

#include <cstdint>
#include <map>
#include <string>

#include "orbitforge/errors.hpp"

namespace orbitforge {

struct RunConfig {
    std::string model;  // lorenz | geo-lorenz | appendix
    // Model parameters (mu, rho, sigma, beta, mu_t); absent keys use the
    // model defaults.
    std::map<std::string, double> model_params;

    double abs_tol = 1e-10;   // integrator.abs_tol
    double rel_tol = 1e-8;    // integrator.rel_tol
    double section_d = 0.2;   // section.d
    double section_delta = 0.1;  // section.delta
    double section_height = 0.0; // section.height (0: defaults to d)

    int seeds_per_band = 3;   // graph.seeds_per_band
    int max_iters = 64;       // graph.max_iters

    int grid_s = 41;          // extract.grid_s
    int grid_y = 5;           // extract.grid_y
    double t_max = 20.0;      // return.t_max

    double probe_u = 2.0;       // probe.u
    double probe_v = 0.5;       // probe.v
    double probe_horizon = 100.0;  // probe.horizon
    long probe_samples = 200;   // probe.samples

    std::uint64_t seed = 12345;
    std::string out_dir = ".";
    std::string component;  // optional single-component restriction label

    void validate() const;  // throws InvalidInputError
};

// Applies one key=value assignment (the dotted keys listed above).
// Unknown keys throw InvalidInputError.
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value);

// Flat key=value file ('#' starts a comment). Values in `base` are
// overridden by the file's entries.
RunConfig load_config_file(const std::string& path, RunConfig base = {});

}  // namespace orbitforge

// orbitforge: singular-hyperbolic flow toolkit CLI.
//
// Subcommands: singularities, section, return-map, verify-hyperbolic,
// find-orbit, stability-probe, pipeline, demo. Exit codes: 0 success,
// 2 usage/config, 3 covering failure, 4 extraction failure, 5 integration
// failure, 6 verification failure. ORBITFORGE_THREADS caps the worker
// count.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "orbitforge/json_io.hpp"
#include "orbitforge/models.hpp"
#include "orbitforge/parallel.hpp"

namespace of = orbitforge;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitCovering = 3;
constexpr int kExitExtraction = 4;
constexpr int kExitIntegration = 5;
constexpr int kExitVerification = 6;

struct CliState {
    of::RunConfig cfg;
    std::string config_path;
    long verify_samples = 200000;
};

void add_common_options(CLI::App* cmd, CliState& st) {
    cmd->add_option("--config", st.config_path, "flat key=value config file");
    cmd->add_option("--model", st.cfg.model, "model: lorenz | geo-lorenz | appendix");
    cmd->add_option("--out", st.cfg.out_dir, "output directory");
    cmd->add_option("--seed", st.cfg.seed, "seed for sampling operations");
    cmd->add_option("--abs-tol", st.cfg.abs_tol, "integrator absolute tolerance");
    cmd->add_option("--rel-tol", st.cfg.rel_tol, "integrator relative tolerance");
    cmd->add_option("--d", st.cfg.section_d, "section distance from the singularity");
    cmd->add_option("--delta", st.cfg.section_delta, "section half-width (refinement)");
    cmd->add_option("--section-height", st.cfg.section_height, "section half-height");
    cmd->add_option("--seeds-per-band", st.cfg.seeds_per_band, "seed curves per band");
    cmd->add_option("--max-iters", st.cfg.max_iters, "covering walk iterate cap");
    cmd->add_option("--grid-s", st.cfg.grid_s, "extraction grid, leaf direction");
    cmd->add_option("--grid-y", st.cfg.grid_y, "extraction grid, vertical direction");
    cmd->add_option("--t-max", st.cfg.t_max, "return-map integration horizon");
    cmd->add_option("--probe-u", st.cfg.probe_u, "stability probe outer radius");
    cmd->add_option("--probe-v", st.cfg.probe_v, "stability probe inner radius");
    cmd->add_option("--horizon", st.cfg.probe_horizon, "stability probe horizon");
    cmd->add_option("--samples", st.cfg.probe_samples, "stability probe samples");
    cmd->add_option("--component", st.cfg.component,
                    "restrict a multi-square map to one component (t | b)");

    auto* mu = cmd->add_option_group("model parameters");
    mu->add_option_function<double>(
        "--mu", [&st](double v) { st.cfg.model_params["mu"] = v; },
        "geo-lorenz slope");
    mu->add_option_function<double>(
        "--rho", [&st](double v) { st.cfg.model_params["rho"] = v; },
        "geo-lorenz contraction / lorenz rho");
    mu->add_option_function<double>(
        "--sigma", [&st](double v) { st.cfg.model_params["sigma"] = v; },
        "lorenz sigma");
    mu->add_option_function<double>(
        "--beta", [&st](double v) { st.cfg.model_params["beta"] = v; },
        "lorenz beta");
    mu->add_option_function<double>(
        "--mu-t", [&st](double v) { st.cfg.model_params["mu_t"] = v; },
        "appendix top slope");
}

double param_or(const of::RunConfig& cfg, const std::string& key, double dflt) {
    const auto it = cfg.model_params.find(key);
    return it == cfg.model_params.end() ? dflt : it->second;
}

of::FlowSystem make_flow(const of::RunConfig& cfg) {
    of::LorenzParams p;
    p.sigma = param_or(cfg, "sigma", p.sigma);
    p.rho = param_or(cfg, "rho", p.rho);
    p.beta = param_or(cfg, "beta", p.beta);
    of::FlowSystem sys = of::lorenz_field(p);
    sys.cfg.abs_tol = cfg.abs_tol;
    sys.cfg.rel_tol = cfg.rel_tol;
    return sys;
}

bool is_flow_model(const std::string& model) { return model == "lorenz"; }
bool is_map_model(const std::string& model) {
    return model == "geo-lorenz" || model == "appendix";
}

of::TriangularMap make_map(const of::RunConfig& cfg) {
    if (cfg.model == "geo-lorenz")
        return of::geo_lorenz(param_or(cfg, "mu", 1.9), param_or(cfg, "rho", 0.3))
            .map;
    if (cfg.model == "appendix") {
        const auto comp = of::appendix_composite(param_or(cfg, "mu_t", 1.8));
        if (cfg.component == "t") return comp.top_restriction();
        if (cfg.component == "b") return comp.bottom_restriction();
        if (!cfg.component.empty())
            throw of::InvalidInputError("unknown component '" + cfg.component +
                                        "' (expected t or b)");
        return comp.map;
    }
    throw of::InvalidInputError("model '" + cfg.model +
                                "' is not a triangular-map model");
}

std::vector<of::Vec3> lorenz_seeds(const of::RunConfig& cfg) {
    const double rho = param_or(cfg, "rho", 28.0);
    const double beta = param_or(cfg, "beta", 8.0 / 3.0);
    std::vector<of::Vec3> seeds{{0.1, 0.1, 0.1}, {1.0, -1.0, 5.0}};
    if (rho > 1.0) {
        const double r = std::sqrt(beta * (rho - 1.0));
        seeds.push_back({r + 0.5, r - 0.5, rho - 0.5});
        seeds.push_back({-r + 0.5, -r - 0.5, rho - 0.5});
    }
    return seeds;
}

std::string out_path(const of::RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

int map_exception(const std::exception& e) {
    if (dynamic_cast<const of::InvalidInputError*>(&e)) return kExitUsage;
    if (dynamic_cast<const of::IncompleteGraphError*>(&e)) return kExitCovering;
    if (dynamic_cast<const of::GrowthFailureError*>(&e)) return kExitCovering;
    if (dynamic_cast<const of::BranchRefinementError*>(&e)) return kExitCovering;
    if (dynamic_cast<const of::NotTriangularError*>(&e)) return kExitExtraction;
    if (dynamic_cast<const of::GeometryError*>(&e)) return kExitExtraction;
    if (dynamic_cast<const of::IntegrationStallError*>(&e)) return kExitIntegration;
    return 1;
}

// ---------------------------------------------------------------------
// singularities

int cmd_singularities(CliState& st) {
    if (!is_flow_model(st.cfg.model))
        throw of::InvalidInputError("singularities requires a flow model");
    const auto sys = make_flow(st.cfg);
    const auto sings = of::find_and_classify_singularities(sys, lorenz_seeds(st.cfg));

    json list = json::array();
    for (const auto& s : sings) list.push_back(of::to_json(s));
    json doc{{"meta", of::make_meta(st.cfg)}, {"singularities", list}};
    of::write_json_file(out_path(st.cfg, "singularities.json"), doc);

    for (const auto& s : sings)
        std::cout << of::to_string(s.classification) << " at (" << s.location[0]
                  << ", " << s.location[1] << ", " << s.location[2] << ")\n";
    std::cout << "wrote " << out_path(st.cfg, "singularities.json") << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// section

std::vector<of::CrossSection> build_lorenz_sections(const of::FlowSystem& sys,
                                                    const of::RunConfig& cfg) {
    const auto sings = of::find_and_classify_singularities(sys, lorenz_seeds(cfg));
    std::vector<of::CrossSection> sections;
    for (size_t i = 0; i < sings.size(); ++i) {
        if (sings[i].classification != of::SingularityClass::lorenz_like)
            continue;
        for (const auto side : {of::SectionSide::top, of::SectionSide::bottom}) {
            auto sec = of::build_section(sys, sings[i], side, cfg.section_d,
                                         cfg.section_delta, cfg.section_height);
            sec.owner = static_cast<int>(i);
            sections.push_back(sec);
        }
    }
    if (sections.empty())
        throw of::GeometryError("no Lorenz-like singularity to section");
    return sections;
}

int cmd_section(CliState& st) {
    if (!is_flow_model(st.cfg.model))
        throw of::InvalidInputError("section requires a flow model");
    const auto sys = make_flow(st.cfg);
    const auto sections = build_lorenz_sections(sys, st.cfg);
    json list = json::array();
    for (const auto& s : sections) list.push_back(of::to_json(s));
    json doc{{"meta", of::make_meta(st.cfg)}, {"sections", list}};
    of::write_json_file(out_path(st.cfg, "sections.json"), doc);
    std::cout << sections.size() << " singular cross-sections -> "
              << out_path(st.cfg, "sections.json") << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// return-map

int cmd_return_map(CliState& st) {
    if (!is_flow_model(st.cfg.model))
        throw of::InvalidInputError("return-map requires a flow model");
    const auto sys = make_flow(st.cfg);
    const auto sections = build_lorenz_sections(sys, st.cfg);
    of::ReturnMapOptions ropts;
    ropts.t_max = st.cfg.t_max;
    const auto grid = of::sample_return_grid(sys, sections, st.cfg.grid_s,
                                             st.cfg.grid_y, ropts);

    json list = json::array();
    for (const auto& s : sections) list.push_back(of::to_json(s));
    json doc{{"meta", of::make_meta(st.cfg)}, {"sections", list}};
    of::write_json_file(out_path(st.cfg, "sections.json"), doc);
    of::write_text_file(out_path(st.cfg, "return_map.csv"),
                        of::return_grid_to_csv(grid));

    long hits = 0, total = 0;
    for (const auto& per : grid.samples)
        for (const auto& s : per) {
            ++total;
            if (s.outcome == of::ReturnOutcome::hit) ++hits;
        }
    std::cout << "sampled " << total << " return-map points (" << hits
              << " hits) -> " << out_path(st.cfg, "return_map.csv") << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// verify-hyperbolic

int cmd_verify(CliState& st, bool* passed = nullptr) {
    of::TriangularMap map;
    if (is_map_model(st.cfg.model)) {
        map = make_map(st.cfg);
    } else if (is_flow_model(st.cfg.model)) {
        const auto sys = make_flow(st.cfg);
        const auto sections = build_lorenz_sections(sys, st.cfg);
        of::ExtractionOptions eopts;
        eopts.grid_s = st.cfg.grid_s;
        eopts.grid_y = st.cfg.grid_y;
        eopts.return_opts.t_max = st.cfg.t_max;
        map = of::extract_triangular_map(sys, sections, eopts);
    } else {
        throw of::InvalidInputError("unknown model '" + st.cfg.model + "'");
    }
    const auto report = of::verify_lambda_hyperbolic(map, st.verify_samples);
    json doc{{"meta", of::make_meta(st.cfg)}, {"report", of::to_json(report)}};
    of::write_json_file(out_path(st.cfg, "hyperbolicity.json"), doc);
    std::cout << "verdict: " << report.verdict
              << " (min expansion " << report.min_expansion << ", declared "
              << report.declared_lambda << ")\n";
    if (passed) *passed = report.verdict == "pass";
    return report.verdict == "pass" ? 0 : kExitVerification;
}

// ---------------------------------------------------------------------
// find-orbit

struct OrbitRun {
    of::BandAlphabet alphabet;
    of::CoveringGraph graph;
    std::vector<of::CoveringEdge> cycle;
    of::PeriodicOrbit orbit;
};

OrbitRun run_orbit_search(const of::TriangularMap& map,
                          const of::RunConfig& cfg) {
    OrbitRun run;
    run.alphabet = of::build_band_alphabet(map);
    of::GraphOptions gopts;
    gopts.seeds_per_band = cfg.seeds_per_band;
    gopts.max_iters = cfg.max_iters;
    run.graph = of::build_covering_graph(map, run.alphabet, gopts);
    run.cycle = of::find_closed_subchain(run.graph, of::widest_band(run.graph));
    try {
        run.orbit = of::locate_periodic_orbit(map, run.cycle, run.graph);
    } catch (const of::BranchRefinementError&) {
        // One refinement pass: rebuild with more seeds and a higher cap.
        gopts.seeds_per_band += 2;
        gopts.max_iters *= 2;
        run.graph = of::build_covering_graph(map, run.alphabet, gopts);
        run.cycle = of::find_closed_subchain(run.graph, of::widest_band(run.graph));
        run.orbit = of::locate_periodic_orbit(map, run.cycle, run.graph);
    }
    return run;
}

int cmd_find_orbit(CliState& st, OrbitRun* out_run = nullptr) {
    if (!is_map_model(st.cfg.model))
        throw of::InvalidInputError(
            "find-orbit requires a triangular-map model (use pipeline for flows)");
    const auto map = make_map(st.cfg);
    OrbitRun run;
    try {
        run = run_orbit_search(map, st.cfg);
    } catch (const of::IncompleteGraphError& e) {
        json doc{{"meta", of::make_meta(st.cfg)},
                 {"error", e.what()},
                 {"graph", of::to_json(e.partial)}};
        of::write_json_file(out_path(st.cfg, "covering_graph.json"), doc);
        std::cerr << "covering failure: " << e.what() << "\n";
        return kExitCovering;
    }

    json doc{{"meta", of::make_meta(st.cfg)},
             {"alphabet", of::to_json(run.alphabet)},
             {"graph", of::to_json(run.graph)},
             {"orbit", of::to_json(run.orbit)}};
    of::write_json_file(out_path(st.cfg, "orbit.json"), doc);
    of::write_text_file(out_path(st.cfg, "covering_graph.dot"),
                        of::graph_to_dot(run.graph));

    std::ostringstream summary;
    summary << "model: " << st.cfg.model << "\n"
            << "bands: " << run.graph.bands.size()
            << ", edges: " << run.graph.edge_count() << "\n"
            << "cycle length: " << run.cycle.size()
            << ", total iterates: " << run.orbit.cycle_iterates << "\n"
            << "period: " << run.orbit.period << "\n"
            << "leaf coordinates:";
    for (double s : run.orbit.leaf_coords) summary << " " << s;
    summary << "\nmultipliers: horizontal " << run.orbit.lambda_h
            << ", vertical " << run.orbit.lambda_v << "\n"
            << "closure residual: " << run.orbit.residual << "\n"
            << (run.orbit.hyperbolic
                    ? std::string("hyperbolic orbit certified")
                    : "orbit rejected: " + run.orbit.rejection)
            << "\n";
    of::write_text_file(out_path(st.cfg, "orbit_summary.txt"), summary.str());
    std::cout << summary.str();

    if (out_run) *out_run = run;
    if (!run.orbit.hyperbolic) {
        std::cerr << "no hyperbolic periodic orbit certified: "
                  << run.orbit.rejection << "\n";
        return kExitCovering;
    }
    return 0;
}

// ---------------------------------------------------------------------
// stability-probe

int cmd_stability_probe(CliState& st) {
    if (!is_flow_model(st.cfg.model))
        throw of::InvalidInputError("stability-probe requires a flow model");
    auto sys = make_flow(st.cfg);
    const auto set_pts = of::sample_attractor(sys, of::Vec3(1.0, 1.0, 1.0),
                                              30.0, 300.0, 0.01);
    const auto rep = of::lyapunov_stability_probe(
        sys, set_pts, st.cfg.probe_u, st.cfg.probe_v, st.cfg.probe_samples,
        st.cfg.probe_horizon, st.cfg.seed);
    json doc{{"meta", of::make_meta(st.cfg)},
             {"set_points", set_pts.size()},
             {"report", of::to_json(rep)}};
    of::write_json_file(out_path(st.cfg, "stability_probe.json"), doc);
    std::cout << "escape fraction " << rep.escape_fraction << " over "
              << rep.total << " samples (" << rep.inconclusive
              << " inconclusive) -> "
              << out_path(st.cfg, "stability_probe.json") << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// pipeline

int cmd_pipeline(CliState& st) {
    json stages = json::array();
    int exit_code = 0;
    std::string status = "ok";

    auto fail_stage = [&](const std::string& stage, const std::string& why,
                          int code) {
        stages.push_back(json{{"stage", stage}, {"status", why}});
        status = why;
        exit_code = code;
    };

    of::TriangularMap map;
    bool have_map = false;
    std::vector<of::CrossSection> sections;
    of::FlowSystem sys;
    bool is_flow = is_flow_model(st.cfg.model);

    if (is_flow) {
        sys = make_flow(st.cfg);
        try {
            const auto sings =
                of::find_and_classify_singularities(sys, lorenz_seeds(st.cfg));
            json list = json::array();
            for (const auto& s : sings) list.push_back(of::to_json(s));
            stages.push_back(json{{"stage", "singularities"},
                                  {"status", "ok"},
                                  {"singularities", list}});
            sections = build_lorenz_sections(sys, st.cfg);
            json slist = json::array();
            for (const auto& s : sections) slist.push_back(of::to_json(s));
            stages.push_back(
                json{{"stage", "sections"}, {"status", "ok"}, {"sections", slist}});
        } catch (const of::GeometryError& e) {
            fail_stage("sections", std::string("geometry-error: ") + e.what(),
                       kExitExtraction);
        }
        if (exit_code == 0) {
            try {
                of::ExtractionOptions eopts;
                eopts.grid_s = st.cfg.grid_s;
                eopts.grid_y = st.cfg.grid_y;
                eopts.return_opts.t_max = st.cfg.t_max;
                of::ExtractionReport erep;
                map = of::extract_triangular_map(sys, sections, eopts, &erep);
                have_map = true;
                stages.push_back(json{{"stage", "extract"},
                                      {"status", "ok"},
                                      {"report", of::to_json(erep)}});
            } catch (const of::NotTriangularError& e) {
                fail_stage("extract",
                           std::string("not-triangular: ") + e.what(),
                           kExitExtraction);
            } catch (const of::IntegrationStallError& e) {
                fail_stage("extract",
                           std::string("integration-stall: ") + e.what(),
                           kExitIntegration);
            }
        }
    } else if (is_map_model(st.cfg.model)) {
        stages.push_back(json{{"stage", "sections"}, {"status", "not-applicable"}});
        stages.push_back(json{{"stage", "extract"}, {"status", "not-applicable"}});
        map = make_map(st.cfg);
        have_map = true;
    } else {
        throw of::InvalidInputError("unknown model '" + st.cfg.model + "'");
    }

    of::HyperbolicityReport vrep;
    if (exit_code == 0 && have_map) {
        vrep = of::verify_lambda_hyperbolic(map, st.verify_samples);
        stages.push_back(json{{"stage", "verify-hyperbolic"},
                              {"status", vrep.verdict},
                              {"report", of::to_json(vrep)}});
        if (vrep.verdict != "pass") {
            status = "verification-failed";
            exit_code = kExitVerification;
        }
    }

    if (exit_code == 0 && have_map) {
        try {
            const OrbitRun run = run_orbit_search(map, st.cfg);
            json stage{{"stage", "find-orbit"},
                       {"status", run.orbit.hyperbolic ? "ok" : "rejected"},
                       {"orbit", of::to_json(run.orbit)},
                       {"graph", of::to_json(run.graph)}};

            if (run.orbit.hyperbolic && is_flow && !sections.empty()) {
                // Flow-closure check: push the located section point through
                // one full period of returns.
                const auto& p0 = run.orbit.points.front();
                const int sec0 =
                    map.complex.components[static_cast<size_t>(p0.component)]
                        .section_index;
                of::ReturnMapOptions ropts;
                ropts.t_max = st.cfg.t_max;
                double s = p0.x, y = p0.y, total_time = 0.0;
                int sec = sec0 < 0 ? p0.component : sec0;
                const of::Vec3 start =
                    sections[static_cast<size_t>(sec)].to_world(s, y);
                bool closed_ok = true;
                std::string closure_status = "ok";
                for (int i = 0; i < run.orbit.period && closed_ok; ++i) {
                    const auto smp =
                        of::return_map_sample(sys, sections, sec, s, y, ropts);
                    if (smp.outcome != of::ReturnOutcome::hit) {
                        closed_ok = false;
                        closure_status = std::string("return ") +
                                         of::to_string(smp.outcome);
                        break;
                    }
                    sec = smp.target_section;
                    s = smp.s_out;
                    y = smp.y_out;
                    total_time += smp.return_time;
                }
                double closure_residual = -1.0;
                if (closed_ok) {
                    const of::Vec3 end =
                        sections[static_cast<size_t>(sec)].to_world(s, y);
                    closure_residual = (end - start).norm();
                }
                stage["flow_closure"] =
                    json{{"status", closure_status},
                         {"residual", closure_residual},
                         {"period_time", total_time}};
                const bool certified =
                    closed_ok && closure_residual >= 0.0 && closure_residual <= 1e-4;
                stage["status"] = certified ? "orbit-certified" : "orbit-unverified";
                if (!certified) {
                    status = "orbit-unverified";
                    exit_code = kExitCovering;
                }
            } else if (!run.orbit.hyperbolic) {
                status = "orbit-rejected: " + run.orbit.rejection;
                exit_code = kExitCovering;
            }
            stages.push_back(stage);
        } catch (const of::IncompleteGraphError& e) {
            fail_stage("find-orbit", std::string("covering-failure: ") + e.what(),
                       kExitCovering);
        } catch (const of::GrowthFailureError& e) {
            fail_stage("find-orbit", std::string("growth-failure: ") + e.what(),
                       kExitCovering);
        } catch (const of::BranchRefinementError& e) {
            fail_stage("find-orbit",
                       std::string("branch-refinement-failure: ") + e.what(),
                       kExitCovering);
        }
    }

    if (exit_code == 0) status = "ok";
    json doc{{"meta", of::make_meta(st.cfg)},
             {"status", status},
             {"exit_code", exit_code},
             {"stages", stages}};
    of::write_json_file(out_path(st.cfg, "pipeline.json"), doc);
    std::cout << "pipeline status: " << status << " -> "
              << out_path(st.cfg, "pipeline.json") << "\n";
    return exit_code;
}

// ---------------------------------------------------------------------
// demo

int cmd_demo(CliState& st, const std::string& which) {
    st.cfg.model = which;
    if (which == "lorenz") {
        const auto sys = make_flow(st.cfg);
        cmd_singularities(st);
        const auto traj = of::integrate(sys, of::Vec3(1.0, 1.0, 1.0), 40.0);
        of::write_text_file(out_path(st.cfg, "trajectory.csv"),
                            of::trajectory_to_csv(traj));
        const auto rates =
            of::estimate_splitting_rates(sys, of::Vec3(1.0, 1.0, 1.0), 50.0);
        json doc{{"meta", of::make_meta(st.cfg)}, {"rates", of::to_json(rates)}};
        of::write_json_file(out_path(st.cfg, "rates.json"), doc);
        std::cout << "exponents: " << rates.exponents[0] << " "
                  << rates.exponents[1] << " " << rates.exponents[2] << "\n";
        return 0;
    }
    if (which == "geo-lorenz") {
        bool passed = false;
        cmd_verify(st, &passed);
        return cmd_find_orbit(st);
    }
    if (which == "appendix") {
        const auto comp = of::appendix_composite(param_or(st.cfg, "mu_t", 1.8));
        const auto alphabet = of::build_band_alphabet(comp.map);
        const auto counts = of::preimage_tree_counts(comp.mu_t, 0.0, 8);
        const auto top = comp.top_restriction();
        const auto bottom = comp.bottom_restriction();
        const auto vtop = of::verify_lambda_hyperbolic(top, 50000);
        auto b_for_fail = bottom;
        b_for_fail.declared_lambda = 1.1;
        const auto vbot = of::verify_lambda_hyperbolic(b_for_fail, 50000);
        json doc{{"meta", of::make_meta(st.cfg)},
                 {"alphabet", of::to_json(alphabet)},
                 {"preimage_tree_counts", counts},
                 {"verify_top", of::to_json(vtop)},
                 {"verify_bottom_lambda_1.1", of::to_json(vbot)}};
        of::write_json_file(out_path(st.cfg, "appendix_evidence.json"), doc);
        std::cout << "top verdict: " << vtop.verdict
                  << ", bottom verdict: " << vbot.verdict << "\n";
        CliState st2 = st;
        st2.cfg.component = "t";
        return cmd_find_orbit(st2);
    }
    throw of::InvalidInputError("unknown demo '" + which + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"orbitforge: periodic-orbit machinery for singular-hyperbolic flows"};
    app.require_subcommand(1);

    CliState st;
    std::string demo_which;

    auto* c_sing = app.add_subcommand("singularities",
                                      "find and classify equilibria of a flow model");
    auto* c_section = app.add_subcommand("section", "build singular cross-sections");
    auto* c_return = app.add_subcommand("return-map",
                                        "sample the first-return map on the sections");
    auto* c_verify = app.add_subcommand("verify-hyperbolic",
                                        "expansion-cone verification of a map");
    auto* c_orbit = app.add_subcommand("find-orbit",
                                       "locate a hyperbolic periodic orbit via band covering");
    auto* c_probe = app.add_subcommand("stability-probe",
                                       "Lyapunov-stability escape probe");
    auto* c_pipe = app.add_subcommand("pipeline",
                                      "sections -> extraction -> verification -> orbit");
    auto* c_demo = app.add_subcommand("demo", "canned runs per model");
    c_demo->add_option("which", demo_which, "lorenz | geo-lorenz | appendix")
        ->required();
    for (auto* cmd : {c_sing, c_section, c_return, c_verify, c_orbit, c_probe,
                      c_pipe, c_demo})
        add_common_options(cmd, st);
    c_verify->add_option("--verify-samples", st.verify_samples,
                         "sample count for the cone verifier");
    c_pipe->add_option("--verify-samples", st.verify_samples,
                       "sample count for the cone verifier");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints usage/error text
        return e.get_exit_code() == 0 ? 0 : kExitUsage;
    }

    try {
        const CLI::App* active = app.get_subcommands().front();
        if (!st.config_path.empty()) {
            // st.cfg currently holds defaults + parsed flags; take the file
            // value wherever the flag was not given.
            const of::RunConfig file_only = of::load_config_file(st.config_path);
            auto overlay = [&](auto& dst, const auto& file_v, bool flag_set) {
                if (!flag_set) dst = file_v;
            };
            auto was_set = [&](const std::string& name) {
                const auto* opt = active->get_option_no_throw(name);
                return opt != nullptr && opt->count() > 0;
            };
            overlay(st.cfg.model, file_only.model, was_set("--model"));
            overlay(st.cfg.out_dir, file_only.out_dir, was_set("--out"));
            overlay(st.cfg.seed, file_only.seed, was_set("--seed"));
            overlay(st.cfg.abs_tol, file_only.abs_tol, was_set("--abs-tol"));
            overlay(st.cfg.rel_tol, file_only.rel_tol, was_set("--rel-tol"));
            overlay(st.cfg.section_d, file_only.section_d, was_set("--d"));
            overlay(st.cfg.section_delta, file_only.section_delta, was_set("--delta"));
            overlay(st.cfg.section_height, file_only.section_height,
                    was_set("--section-height"));
            overlay(st.cfg.seeds_per_band, file_only.seeds_per_band,
                    was_set("--seeds-per-band"));
            overlay(st.cfg.max_iters, file_only.max_iters, was_set("--max-iters"));
            overlay(st.cfg.grid_s, file_only.grid_s, was_set("--grid-s"));
            overlay(st.cfg.grid_y, file_only.grid_y, was_set("--grid-y"));
            overlay(st.cfg.t_max, file_only.t_max, was_set("--t-max"));
            overlay(st.cfg.probe_u, file_only.probe_u, was_set("--probe-u"));
            overlay(st.cfg.probe_v, file_only.probe_v, was_set("--probe-v"));
            overlay(st.cfg.probe_horizon, file_only.probe_horizon,
                    was_set("--horizon"));
            overlay(st.cfg.probe_samples, file_only.probe_samples,
                    was_set("--samples"));
            overlay(st.cfg.component, file_only.component, was_set("--component"));
            for (const auto& [k, v] : file_only.model_params)
                st.cfg.model_params.emplace(k, v);  // flags win on conflict
        }
        st.cfg.validate();
        if (st.cfg.model.empty() && !c_demo->parsed())
            throw of::InvalidInputError("missing --model");

        of::configure_threads();
        if (c_sing->parsed()) return cmd_singularities(st);
        if (c_section->parsed()) return cmd_section(st);
        if (c_return->parsed()) return cmd_return_map(st);
        if (c_verify->parsed()) return cmd_verify(st);
        if (c_orbit->parsed()) return cmd_find_orbit(st);
        if (c_probe->parsed()) return cmd_stability_probe(st);
        if (c_pipe->parsed()) return cmd_pipeline(st);
        if (c_demo->parsed()) return cmd_demo(st, demo_which);
        throw of::InvalidInputError("no subcommand");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return map_exception(e);
    }
}

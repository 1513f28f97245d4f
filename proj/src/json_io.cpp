#include "orbitforge/json_io.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace orbitforge {

using nlohmann::json;

json to_json(const Band& b) {
    return json{{"component", b.component},
                {"lo", b.lo},
                {"hi", b.hi},
                {"open", b.open()}};
}

json to_json(const BandAlphabet& a) {
    json endpoints = json::array();
    for (const auto& e : a.endpoints)
        endpoints.push_back(json{{"component", e.component}, {"s", e.s}});
    json bands = json::array();
    for (const auto& b : a.bands) bands.push_back(to_json(b));
    json dropped = json::array();
    for (const auto& b : a.dropped) dropped.push_back(to_json(b));
    return json{{"endpoints", endpoints}, {"bands", bands}, {"dropped", dropped}};
}

json to_json(const HyperbolicityReport& r) {
    return json{{"transversal", r.transversal},
                {"cone_invariance_fraction", r.cone_invariance_fraction},
                {"min_expansion", r.min_expansion},
                {"declared_lambda", r.declared_lambda},
                {"verdict", r.verdict},
                {"samples_used", r.samples_used},
                {"samples_requested", r.samples_requested}};
}

json to_json(const CoveringGraph& g) {
    json bands = json::array();
    for (const auto& b : g.bands) bands.push_back(to_json(b));
    json adj = json::array();
    for (const auto& edges : g.adjacency) {
        json list = json::array();
        for (const auto& e : edges)
            list.push_back(json{{"to", e.to},
                                {"n", e.iterates},
                                {"witness_lo", e.witness.lo},
                                {"witness_hi", e.witness.hi},
                                {"seed_y", e.seed_y}});
        adj.push_back(list);
    }
    return json{{"bands", bands},
                {"adjacency", adj},
                {"failed_bands", g.failed_bands},
                {"complete", g.complete()}};
}

json to_json(const PeriodicOrbit& o) {
    json pts = json::array();
    for (const auto& p : o.points)
        pts.push_back(json{{"component", p.component}, {"x", p.x}, {"y", p.y}});
    return json{{"period", o.period},
                {"cycle_iterates", o.cycle_iterates},
                {"points", pts},
                {"leaf_coords", o.leaf_coords},
                {"multipliers",
                 json{{"horizontal", o.lambda_h}, {"vertical", o.lambda_v}}},
                {"residual", o.residual},
                {"hyperbolic", o.hyperbolic},
                {"rejection", o.rejection}};
}

json to_json(const SingularityInfo& s) {
    json eig = json::array();
    for (const auto& l : s.eigenvalues)
        eig.push_back(json{{"re", l.real()}, {"im", l.imag()}});
    json vecs = json::array();
    for (const auto& v : s.eigenvectors)
        vecs.push_back(json::array({v[0], v[1], v[2]}));
    return json{{"location", json::array({s.location[0], s.location[1],
                                          s.location[2]})},
                {"eigenvalues", eig},
                {"classification", to_string(s.classification)},
                {"all_real", s.all_real},
                {"eigenvectors", vecs}};
}

json to_json(const CrossSection& s) {
    auto vec = [](const Vec3& v) { return json::array({v[0], v[1], v[2]}); };
    return json{{"base", vec(s.base)},
                {"u", vec(s.u)},
                {"v", vec(s.v)},
                {"normal", vec(s.normal)},
                {"half_width", s.half_width},
                {"half_height", s.half_height},
                {"owner", s.owner},
                {"side", s.side_sign > 0 ? "top" : "bottom"},
                {"d", s.d}};
}

json to_json(const EscapeReport& r) {
    return json{{"total", r.total},
                {"escaped", r.escaped},
                {"inconclusive", r.inconclusive},
                {"escape_fraction", r.escape_fraction},
                {"horizon", r.horizon},
                {"seed", r.seed}};
}

json to_json(const RateReport& r) {
    return json{{"exponents", r.exponents},
                {"contraction_exponent", r.contraction_exponent},
                {"volume_exponent", r.volume_exponent},
                {"domination_gap", r.domination_gap},
                {"horizon", r.horizon},
                {"renormalizations", r.renormalizations}};
}

json to_json(const ExtractionReport& r) {
    return json{{"components", r.components},
                {"hits", r.hits},
                {"escapes", r.escapes},
                {"directed_to_sigma", r.directed},
                {"stalled", r.stalled},
                {"max_y_deviation", r.max_y_deviation},
                {"coverage_fraction", r.coverage_fraction},
                {"detected_discontinuities", r.detected_discontinuities}};
}

json config_to_json(const RunConfig& cfg) {
    return json{{"model", cfg.model},
                {"model_params", cfg.model_params},
                {"integrator", json{{"abs_tol", cfg.abs_tol},
                                    {"rel_tol", cfg.rel_tol}}},
                {"section", json{{"d", cfg.section_d},
                                 {"delta", cfg.section_delta},
                                 {"height", cfg.section_height}}},
                {"graph", json{{"seeds_per_band", cfg.seeds_per_band},
                               {"max_iters", cfg.max_iters}}},
                {"extract", json{{"grid_s", cfg.grid_s}, {"grid_y", cfg.grid_y}}},
                {"return", json{{"t_max", cfg.t_max}}},
                {"probe", json{{"u", cfg.probe_u},
                               {"v", cfg.probe_v},
                               {"horizon", cfg.probe_horizon},
                               {"samples", cfg.probe_samples}}},
                {"seed", cfg.seed},
                {"out_dir", cfg.out_dir},
                {"component", cfg.component}};
}

json make_meta(const RunConfig& cfg) {
    const auto now = std::chrono::system_clock::now();
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
            .count();
    return json{{"tool", "orbitforge"},
                {"version", kToolVersion},
                {"created", secs},
                {"seed", cfg.seed},
                {"config", config_to_json(cfg)}};
}

std::string graph_to_dot(const CoveringGraph& g) {
    std::ostringstream os;
    os << "digraph covering {\n";
    for (size_t i = 0; i < g.bands.size(); ++i) {
        const auto& b = g.bands[i];
        os << "  b" << i << " [label=\"S" << b.component << " (" << b.lo << ","
           << b.hi << ")\"];\n";
    }
    for (size_t i = 0; i < g.adjacency.size(); ++i)
        for (const auto& e : g.adjacency[i])
            os << "  b" << i << " -> b" << e.to << " [label=\"n=" << e.iterates
               << "\"];\n";
    os << "}\n";
    return os.str();
}

std::string trajectory_to_csv(const Trajectory& t) {
    std::ostringstream os;
    os.precision(15);
    os << "t,x,y,z\n";
    for (size_t i = 0; i < t.t.size(); ++i)
        os << t.t[i] << "," << t.y[i][0] << "," << t.y[i][1] << ","
           << t.y[i][2] << "\n";
    return os.str();
}

std::string return_grid_to_csv(const ReturnGrid& g) {
    std::ostringstream os;
    os.precision(15);
    os << "section,s_in,y_in,outcome,target,s_out,y_out,T\n";
    for (size_t sec = 0; sec < g.samples.size(); ++sec)
        for (const auto& smp : g.samples[sec]) {
            os << sec << "," << smp.s_in << "," << smp.y_in << ","
               << to_string(smp.outcome) << "," << smp.target_section << ",";
            if (smp.outcome == ReturnOutcome::hit)
                os << smp.s_out << "," << smp.y_out << "," << smp.return_time;
            else
                os << ",," << smp.return_time;
            os << "\n";
        }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot write file: " + path);
    out << content;
}

void write_json_file(const std::string& path, const json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace orbitforge

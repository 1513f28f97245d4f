#pragma once

// JSON/CSV/DOT serialization of the toolkit's result types. Every JSON
// document produced by the CLI carries a `meta` block (tool, version,
// created, seed, resolved config); outputs are byte-identical for a fixed
// config and seed apart from meta.created.

#include <string>

#include <json.hpp>

#include "orbitforge/band_covering.hpp"
#include "orbitforge/config.hpp"
#include "orbitforge/sections.hpp"

namespace orbitforge {

inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json to_json(const Band& b);
nlohmann::json to_json(const BandAlphabet& a);
nlohmann::json to_json(const HyperbolicityReport& r);
nlohmann::json to_json(const CoveringGraph& g);
nlohmann::json to_json(const PeriodicOrbit& o);
nlohmann::json to_json(const SingularityInfo& s);
nlohmann::json to_json(const CrossSection& s);
nlohmann::json to_json(const EscapeReport& r);
nlohmann::json to_json(const RateReport& r);
nlohmann::json to_json(const ExtractionReport& r);
nlohmann::json config_to_json(const RunConfig& cfg);

// meta block: {"tool", "version", "created", "seed", "config"}.
nlohmann::json make_meta(const RunConfig& cfg);

std::string graph_to_dot(const CoveringGraph& g);

// CSV columns t,x,y,z.
std::string trajectory_to_csv(const Trajectory& t);
// CSV columns section,s_in,y_in,outcome,target,s_out,y_out,T.
std::string return_grid_to_csv(const ReturnGrid& g);

void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace orbitforge

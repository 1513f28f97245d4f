#pragma once

// Constructive periodic-orbit machinery: the finite band alphabet, the
// covering relation computed by iterating curves through the leaf space,
// closed sub-chain detection, and periodic-point location on a cycle.

#include <stdexcept>
#include <string>
#include <vector>

#include "orbitforge/tri_map.hpp"

namespace orbitforge {

// Bands narrower than this collapse and are dropped (with a record).
inline constexpr double kMinBandWidth = 1e-9;

struct BandAlphabet {
    std::vector<Leaf> endpoints;  // deduplicated, sorted by (component, s)
    std::vector<Band> bands;      // open bands, sorted by (component, lo, hi)
    std::vector<Band> dropped;    // collapsed candidates

    int band_index(const Band& b) const;
};

// Endpoint leaves: L-/L+ of every component, the images f(B) of boundary
// leaves inside Dom(F), and the existing one-sided limits at each L_0i.
// Non-convergent limits are omitted.
BandAlphabet build_band_alphabet(const TriangularMap& map);

// An open leaf interval tracked through the walk.
struct WitnessInterval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

struct CoverResult {
    int iterations = 0;             // n'(c) > 0
    int band = -1;                  // lexicographically first covered band
    std::vector<int> covered;       // all alphabet bands covered at the stop
    WitnessInterval witness;        // pullback sub-interval of the seed
    WitnessInterval final_image;    // leaf interval of F^n(witness)
    int final_component = -1;
    Curve subcurve;                 // witness as a curve (seed height kept)
};

// Iterates the curve's leaf interval, splitting at discontinuity/kink
// leaves and keeping the longest piece, until an iterate covers an
// alphabet band. Throws GrowthFailureError when max_iters is exhausted.
CoverResult iterate_until_covers(const TriangularMap& map, const Curve& curve,
                                 const BandAlphabet& alphabet, int max_iters);

struct CoveringEdge {
    int from = -1;
    int to = -1;
    int iterates = 0;
    WitnessInterval witness;
    double seed_y = 0.0;
};

struct CoveringGraph {
    std::vector<Band> bands;
    // adjacency[b]: edges out of band b, deterministically ordered
    // (widest target first, then band order, then iterate count).
    std::vector<std::vector<CoveringEdge>> adjacency;
    std::vector<int> failed_bands;  // diagnostics for out-degree-0 nodes
    bool complete() const { return failed_bands.empty(); }
    long edge_count() const;
};

// Thrown when some band has no outgoing edge; carries the partial graph.
class IncompleteGraphError : public std::runtime_error {
public:
    IncompleteGraphError(const std::string& what, CoveringGraph g)
        : std::runtime_error(what), partial(std::move(g)) {}
    CoveringGraph partial;
};

struct GraphOptions {
    int seeds_per_band = 3;  // horizontal seed heights in (-1, 1)
    int max_iters = 64;
    bool require_complete = true;  // throw IncompleteGraphError on failure
};

// Seeds horizontal curves in every band and records an edge for each band
// covered at the stopping iterate. Walks are parallel over bands; witness
// replays over (band, seed) pairs. Deterministic for fixed options.
CoveringGraph build_covering_graph(const TriangularMap& map,
                                   const BandAlphabet& alphabet,
                                   const GraphOptions& opts = {});
CoveringGraph build_covering_graph_serial(const TriangularMap& map,
                                          const BandAlphabet& alphabet,
                                          const GraphOptions& opts = {});

// Deterministic walk from `start` taking the first edge of each adjacency
// list; by pigeonhole a node repeats within |bands|+1 steps and the cycle
// between the repeats is returned.
std::vector<CoveringEdge> find_closed_subchain(const CoveringGraph& graph,
                                               int start_band);
// Start at the widest band (ties toward the lower band id).
int widest_band(const CoveringGraph& graph);

struct WitnessReplay {
    bool ok = false;
    std::string failure;
    int steps = 0;
    double min_discontinuity_distance = 0.0;
    LeafInterval final_cover;
};

// Re-executes an edge witness from scratch: the 2-D sampled curve must stay
// in Dom(F) off the discontinuities for all iterates and the final interval
// must cover the target band.
WitnessReplay replay_edge(const TriangularMap& map, const CoveringGraph& graph,
                          const CoveringEdge& edge);

struct PeriodicOrbit {
    int period = 0;           // minimal period after divisor reduction
    int cycle_iterates = 0;   // total iterate count of the cycle
    std::vector<Point> points;
    std::vector<double> leaf_coords;
    double lambda_h = 0.0;
    double lambda_v = 0.0;
    double residual = 0.0;
    bool hyperbolic = false;
    std::string rejection;    // empty for accepted orbits
};

struct OrbitOptions {
    double tau_leaf = 1e-10;
    double tau_orbit = 1e-8;
    int max_vertical_iters = 100000;
};

// Locates the fixed leaf of f^n on the cycle's witness branch by pullback
// and bisection, converges vertically on the fixed leaf, and estimates the
// horizontal/vertical multipliers. Orbits with |lambda_h| <= 1 or
// |lambda_v| >= 1 are reported with a rejection reason.
PeriodicOrbit locate_periodic_orbit(const TriangularMap& map,
                                    const std::vector<CoveringEdge>& cycle,
                                    const CoveringGraph& graph,
                                    const OrbitOptions& opts = {});

}  // namespace orbitforge

#include "orbitforge/band_covering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "orbitforge/parallel.hpp"

namespace orbitforge {

namespace {

constexpr double kDiscEps = 1e-11;

bool leaf_less(const Leaf& a, const Leaf& b) {
    if (a.component != b.component) return a.component < b.component;
    return a.s < b.s;
}

}  // namespace

int BandAlphabet::band_index(const Band& b) const {
    for (size_t i = 0; i < bands.size(); ++i) {
        const auto& c = bands[i];
        if (c.component == b.component && std::abs(c.lo - b.lo) <= kGeomEps &&
            std::abs(c.hi - b.hi) <= kGeomEps)
            return static_cast<int>(i);
    }
    return -1;
}

BandAlphabet build_band_alphabet(const TriangularMap& map) {
    BandAlphabet alpha;
    std::vector<Leaf> pts;

    for (int c = 0; c < map.k(); ++c) {
        // The boundary leaves themselves.
        pts.push_back(Leaf{c, -1.0});
        pts.push_back(Leaf{c, 1.0});
        // Images of boundary leaves inside Dom(F).
        for (double s : {-1.0, 1.0}) {
            const Leaf l{c, s};
            if (!map.in_domain(l)) continue;
            if (const auto img = map.leaf_map(l)) pts.push_back(*img);
        }
        // Existing one-sided limits at the singular leaf L_0; omitted when
        // non-convergent or outside the square.
        if (const auto lm = leaf_limit(map, c, 0.0, Side::minus)) pts.push_back(*lm);
        if (const auto lp = leaf_limit(map, c, 0.0, Side::plus)) pts.push_back(*lp);
    }

    std::sort(pts.begin(), pts.end(), leaf_less);
    for (const auto& p : pts) {
        if (!alpha.endpoints.empty() && same_leaf(alpha.endpoints.back(), p))
            continue;
        alpha.endpoints.push_back(p);
    }

    for (size_t i = 0; i < alpha.endpoints.size(); ++i)
        for (size_t j = i + 1; j < alpha.endpoints.size(); ++j) {
            const auto& a = alpha.endpoints[i];
            const auto& b = alpha.endpoints[j];
            if (a.component != b.component) continue;
            Band band{a.component, a.s, b.s, Openness::open};
            if (band.width() < kMinBandWidth)
                alpha.dropped.push_back(band);
            else
                alpha.bands.push_back(band);
        }
    std::sort(alpha.bands.begin(), alpha.bands.end(),
              [](const Band& a, const Band& b) {
                  if (a.component != b.component) return a.component < b.component;
                  if (a.lo != b.lo) return a.lo < b.lo;
                  return a.hi < b.hi;
              });
    return alpha;
}

namespace {

struct Piece {
    int comp = 0;
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

// Leaf-map value at an open piece endpoint, approached from inside.
std::optional<Leaf> endpoint_value(const TriangularMap& map, int comp, double s,
                                   Side inside) {
    if (map.is_discontinuity(Leaf{comp, s}, kDiscEps))
        return leaf_limit(map, comp, s, inside);
    const Leaf l{comp, s};
    if (map.in_domain(l)) {
        if (auto img = map.leaf_map(l)) return img;
    }
    return leaf_limit(map, comp, s, inside);
}

struct PieceImage {
    bool ok = false;
    std::string why;
    Piece img;
};

PieceImage apply_piece(const TriangularMap& map, const Piece& p) {
    PieceImage out;
    const auto vlo = endpoint_value(map, p.comp, p.lo, Side::plus);
    const auto vhi = endpoint_value(map, p.comp, p.hi, Side::minus);
    if (!vlo || !vhi) {
        out.why = "piece endpoint left the domain";
        return out;
    }
    if (vlo->component != vhi->component) {
        out.why = "piece straddles a component switch";
        return out;
    }
    double lo = std::min(vlo->s, vhi->s);
    double hi = std::max(vlo->s, vhi->s);

    constexpr int kInterior = 33;
    for (int i = 1; i <= kInterior; ++i) {
        const double s = p.lo + p.width() * i / (kInterior + 1);
        const Leaf l{p.comp, s};
        if (!map.in_domain(l)) {
            out.why = "piece interior left the domain";
            return out;
        }
        const auto img = map.leaf_map(l);
        if (!img || img->component != vlo->component) {
            out.why = "piece interior inconsistent with endpoints";
            return out;
        }
        lo = std::min(lo, img->s);
        hi = std::max(hi, img->s);
    }
    out.ok = true;
    out.img = Piece{vlo->component, lo, hi};
    return out;
}

// Longest break-free open sub-piece; ties go to the piece with larger lo.
Piece split_keep_longest(const TriangularMap& map, const Piece& p) {
    std::vector<double> cuts;
    for (double b : map.branch_breaks(p.comp))
        if (b > p.lo + kGeomEps && b < p.hi - kGeomEps) cuts.push_back(b);
    if (cuts.empty()) return p;
    std::vector<double> bounds{p.lo};
    bounds.insert(bounds.end(), cuts.begin(), cuts.end());
    bounds.push_back(p.hi);
    Piece best{p.comp, bounds[0], bounds[1]};
    for (size_t i = 1; i + 1 < bounds.size(); ++i) {
        const Piece cand{p.comp, bounds[i], bounds[i + 1]};
        if (cand.width() > best.width() + kGeomEps ||
            (cand.width() >= best.width() - kGeomEps && cand.lo > best.lo))
            best = cand;
    }
    return best;
}

bool piece_covers_band(const Piece& img, const Band& b) {
    return img.comp == b.component && img.lo <= b.lo + kGeomEps &&
           img.hi >= b.hi - kGeomEps;
}

struct WalkOutcome {
    int iterations = 0;
    std::vector<int> covered;
    Piece final_image;
    std::vector<Piece> history;  // break-free pieces, one per application
};

WalkOutcome walk_from_interval(const TriangularMap& map, int comp, double lo,
                               double hi, const BandAlphabet& alphabet,
                               int max_iters) {
    if (max_iters < 1) throw InvalidInputError("max_iters must be >= 1");
    WalkOutcome out;
    Piece piece = split_keep_longest(map, Piece{comp, lo, hi});
    for (int n = 1; n <= max_iters; ++n) {
        out.history.push_back(piece);
        const auto ap = apply_piece(map, piece);
        if (!ap.ok)
            throw GrowthFailureError("curve iteration failed: " + ap.why, n,
                                     piece.width());
        for (size_t i = 0; i < alphabet.bands.size(); ++i)
            if (piece_covers_band(ap.img, alphabet.bands[i]))
                out.covered.push_back(static_cast<int>(i));
        if (!out.covered.empty()) {
            out.iterations = n;
            out.final_image = ap.img;
            return out;
        }
        piece = split_keep_longest(map, ap.img);
    }
    throw GrowthFailureError(
        "no alphabet band covered within max_iters (expansion too weak or "
        "alphabet too coarse)",
        max_iters, piece.width());
}

// Value of the leaf map at s inside the piece (endpoints via one-sided
// limits).
double leaf_value_in_piece(const TriangularMap& map, const Piece& p, double s) {
    std::optional<Leaf> v;
    if (s <= p.lo + kGeomEps)
        v = endpoint_value(map, p.comp, p.lo, Side::plus);
    else if (s >= p.hi - kGeomEps)
        v = endpoint_value(map, p.comp, p.hi, Side::minus);
    else {
        const Leaf l{p.comp, s};
        if (map.in_domain(l)) v = map.leaf_map(l);
        if (!v) v = leaf_limit(map, p.comp, s, Side::plus);
    }
    if (!v) throw BranchRefinementError("leaf evaluation failed inside a witness piece");
    return v->s;
}

// Preimage of `value` under the leaf map restricted to the piece
// (continuous, monotone across the break-free piece). Clamps when the value
// sits at or beyond the image endpoints.
double solve_in_piece(const TriangularMap& map, const Piece& p, double value) {
    double a = p.lo, b = p.hi;
    double fa = leaf_value_in_piece(map, p, a);
    double fb = leaf_value_in_piece(map, p, b);
    const bool increasing = fa <= fb;
    auto g = [&](double s) {
        return increasing ? leaf_value_in_piece(map, p, s) - value
                          : value - leaf_value_in_piece(map, p, s);
    };
    double ga = increasing ? fa - value : value - fa;
    double gb = increasing ? fb - value : value - fb;
    if (ga >= 0.0) return a;  // target at or below the image start
    if (gb <= 0.0) return b;
    for (int i = 0; i < 200 && (b - a) > 1e-14 * std::max(1.0, p.width()); ++i) {
        const double m = 0.5 * (a + b);
        if (g(m) < 0.0)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

// Pullback of the final piece through the walk history.
WitnessInterval pullback_witness(const TriangularMap& map,
                                 const std::vector<Piece>& history) {
    Piece target = history.back();
    for (size_t j = history.size() - 1; j-- > 0;) {
        const Piece& src = history[j];
        const double a = solve_in_piece(map, src, target.lo);
        const double b = solve_in_piece(map, src, target.hi);
        target = Piece{src.comp, std::min(a, b), std::max(a, b)};
    }
    return WitnessInterval{target.lo, target.hi};
}

double interp_curve_y(const Curve& c, double x) {
    // Cone-tangent curves are graphs over the leaf coordinate.
    const auto& ss = c.samples;
    if (ss.size() < 2) return ss.empty() ? 0.0 : ss.front().p.y;
    const bool inc = ss.back().p.x >= ss.front().p.x;
    size_t lo = 0, hi = ss.size() - 1;
    while (lo + 1 < hi) {
        const size_t mid = (lo + hi) / 2;
        if (inc ? ss[mid].p.x <= x : ss[mid].p.x >= x)
            lo = mid;
        else
            hi = mid;
    }
    const double x0 = ss[lo].p.x, x1 = ss[hi].p.x;
    const double u = std::abs(x1 - x0) > kGeomEps ? (x - x0) / (x1 - x0) : 0.0;
    return ss[lo].p.y + (ss[hi].p.y - ss[lo].p.y) * std::clamp(u, 0.0, 1.0);
}

}  // namespace

CoverResult iterate_until_covers(const TriangularMap& map, const Curve& curve,
                                 const BandAlphabet& alphabet, int max_iters) {
    if (curve.samples.size() < 2)
        throw InvalidInputError("curve needs >= 2 samples");
    if (!curve_tangent_in_cone(curve, map.cone))
        throw InvalidInputError("curve is not tangent to the cone field");
    const int comp = curve.component();
    for (const auto& cs : curve.samples) {
        const Leaf l{comp, cs.p.x};
        if (map.is_discontinuity(l, kDiscEps))
            throw InvalidInputError("curve meets the discontinuity set");
    }

    const LeafInterval iv = curve_leaf_cover(curve);
    WalkOutcome walk = walk_from_interval(map, comp, iv.lo, iv.hi, alphabet,
                                          max_iters);
    CoverResult res;
    res.iterations = walk.iterations;
    res.covered = walk.covered;
    res.band = walk.covered.front();
    res.final_image = WitnessInterval{walk.final_image.lo, walk.final_image.hi};
    res.final_component = walk.final_image.comp;
    res.witness = pullback_witness(map, walk.history);

    // Witness sub-curve: the input curve restricted to the pullback span.
    constexpr int kWitnessSamples = 64;
    std::vector<Point> pts(kWitnessSamples);
    const double margin = std::max(1e-12, 1e-9 * res.witness.width());
    for (int i = 0; i < kWitnessSamples; ++i) {
        const double x = res.witness.lo + margin +
                         (res.witness.width() - 2 * margin) * i /
                             (kWitnessSamples - 1);
        pts[static_cast<size_t>(i)] = Point{comp, x, interp_curve_y(curve, x)};
    }
    res.subcurve = make_curve_from_points(pts, false);
    return res;
}

long CoveringGraph::edge_count() const {
    long n = 0;
    for (const auto& adj : adjacency) n += static_cast<long>(adj.size());
    return n;
}

namespace {

void sort_adjacency(CoveringGraph& g) {
    for (auto& adj : g.adjacency)
        std::sort(adj.begin(), adj.end(),
                  [&g](const CoveringEdge& a, const CoveringEdge& b) {
                      const double wa = g.bands[static_cast<size_t>(a.to)].width();
                      const double wb = g.bands[static_cast<size_t>(b.to)].width();
                      if (std::abs(wa - wb) > kGeomEps) return wa > wb;
                      if (a.to != b.to) return a.to < b.to;
                      return a.iterates < b.iterates;
                  });
}

struct SeedTask {
    bool ok = false;
    std::string error;
    int iterations = 0;
    std::vector<int> covered;
    WitnessInterval witness;
};

SeedTask run_seed(const TriangularMap& map, const BandAlphabet& alphabet,
                  const Band& band, int max_iters) {
    SeedTask task;
    try {
        WalkOutcome walk = walk_from_interval(map, band.component, band.lo,
                                              band.hi, alphabet, max_iters);
        task.ok = true;
        task.iterations = walk.iterations;
        task.covered = walk.covered;
        task.witness = pullback_witness(map, walk.history);
    } catch (const GrowthFailureError& e) {
        task.error = e.what();
    } catch (const BranchRefinementError& e) {
        task.error = e.what();
    }
    return task;
}

std::vector<double> seed_heights(int seeds_per_band) {
    if (seeds_per_band <= 1) return {0.0};
    std::vector<double> ys(static_cast<size_t>(seeds_per_band));
    for (int j = 0; j < seeds_per_band; ++j)
        ys[static_cast<size_t>(j)] = -0.5 + 1.0 * j / (seeds_per_band - 1);
    return ys;
}

CoveringGraph assemble_graph(const TriangularMap& map,
                             const BandAlphabet& alphabet,
                             const GraphOptions& opts,
                             const std::vector<SeedTask>& tasks,
                             const std::vector<double>& heights) {
    CoveringGraph g;
    g.bands = alphabet.bands;
    g.adjacency.resize(g.bands.size());
    const int n_seeds = static_cast<int>(heights.size());

    for (size_t b = 0; b < g.bands.size(); ++b) {
        std::map<int, CoveringEdge> dedup;
        bool any_ok = false;
        for (int j = 0; j < n_seeds; ++j) {
            const auto& task = tasks[b * static_cast<size_t>(n_seeds) +
                                     static_cast<size_t>(j)];
            if (!task.ok) continue;
            any_ok = true;
            for (int target : task.covered) {
                CoveringEdge e;
                e.from = static_cast<int>(b);
                e.to = target;
                e.iterates = task.iterations;
                e.witness = task.witness;
                e.seed_y = heights[static_cast<size_t>(j)];
                dedup.emplace(target, e);
            }
        }
        if (!any_ok) {
            g.failed_bands.push_back(static_cast<int>(b));
            continue;
        }
        for (auto& [target, e] : dedup)
            g.adjacency[b].push_back(e);
    }

    // Witness replays guard the recorded edges; edges that do not replay
    // are dropped.
    for (auto& adj : g.adjacency) {
        std::vector<CoveringEdge> kept;
        for (const auto& e : adj)
            if (replay_edge(map, g, e).ok) kept.push_back(e);
        adj = std::move(kept);
    }
    for (size_t b = 0; b < g.bands.size(); ++b) {
        const bool already =
            std::find(g.failed_bands.begin(), g.failed_bands.end(),
                      static_cast<int>(b)) != g.failed_bands.end();
        if (!already && g.adjacency[b].empty())
            g.failed_bands.push_back(static_cast<int>(b));
    }
    std::sort(g.failed_bands.begin(), g.failed_bands.end());
    sort_adjacency(g);

    if (opts.require_complete && !g.complete())
        throw IncompleteGraphError(
            "covering graph incomplete: " +
                std::to_string(g.failed_bands.size()) +
                " band(s) without outgoing edges",
            g);
    return g;
}

}  // namespace

CoveringGraph build_covering_graph_serial(const TriangularMap& map,
                                          const BandAlphabet& alphabet,
                                          const GraphOptions& opts) {
    const auto heights = seed_heights(opts.seeds_per_band);
    const size_t n_tasks = alphabet.bands.size() * heights.size();
    std::vector<SeedTask> tasks(n_tasks);
    for (size_t b = 0; b < alphabet.bands.size(); ++b)
        for (size_t j = 0; j < heights.size(); ++j)
            tasks[b * heights.size() + j] =
                run_seed(map, alphabet, alphabet.bands[b], opts.max_iters);
    return assemble_graph(map, alphabet, opts, tasks, heights);
}

CoveringGraph build_covering_graph(const TriangularMap& map,
                                   const BandAlphabet& alphabet,
                                   const GraphOptions& opts) {
    configure_threads();
    const auto heights = seed_heights(opts.seeds_per_band);
    const long n_tasks =
        static_cast<long>(alphabet.bands.size() * heights.size());
    std::vector<SeedTask> tasks(static_cast<size_t>(n_tasks));
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n_tasks; ++i) {
        const size_t b = static_cast<size_t>(i) / heights.size();
        tasks[static_cast<size_t>(i)] =
            run_seed(map, alphabet, alphabet.bands[b], opts.max_iters);
    }
    return assemble_graph(map, alphabet, opts, tasks, heights);
}

int widest_band(const CoveringGraph& graph) {
    if (graph.bands.empty()) throw InvalidInputError("empty covering graph");
    int best = 0;
    for (size_t i = 1; i < graph.bands.size(); ++i)
        if (graph.bands[i].width() > graph.bands[static_cast<size_t>(best)].width() + kGeomEps)
            best = static_cast<int>(i);
    return best;
}

std::vector<CoveringEdge> find_closed_subchain(const CoveringGraph& graph,
                                               int start_band) {
    if (start_band < 0 || start_band >= static_cast<int>(graph.bands.size()))
        throw InvalidInputError("start band out of range");

    std::vector<int> path{start_band};
    std::vector<CoveringEdge> taken;
    const size_t limit = graph.bands.size() + 1;  // pigeonhole bound
    for (size_t step = 0; step < limit; ++step) {
        const int cur = path.back();
        const auto& adj = graph.adjacency[static_cast<size_t>(cur)];
        if (adj.empty())
            throw IncompleteGraphError(
                "dead-end band " + std::to_string(cur) + " in the chain walk",
                graph);
        const CoveringEdge& e = adj.front();
        taken.push_back(e);
        const auto seen = std::find(path.begin(), path.end(), e.to);
        if (seen != path.end()) {
            const size_t pos = static_cast<size_t>(seen - path.begin());
            return std::vector<CoveringEdge>(taken.begin() +
                                                 static_cast<long>(pos),
                                             taken.end());
        }
        path.push_back(e.to);
    }
    throw std::logic_error("chain walk exceeded the pigeonhole bound");
}

WitnessReplay replay_edge(const TriangularMap& map, const CoveringGraph& graph,
                          const CoveringEdge& edge) {
    WitnessReplay rep;
    const Band& from = graph.bands[static_cast<size_t>(edge.from)];
    const Band& target = graph.bands[static_cast<size_t>(edge.to)];

    // Route 1: 2-D sampled curve, checking domain membership and distance
    // to the discontinuity set at every iterate.
    constexpr int kSamples = 512;
    const double margin = std::max(1e-12, 1e-9 * edge.witness.width());
    std::vector<Point> pts(kSamples);
    for (int i = 0; i < kSamples; ++i)
        pts[static_cast<size_t>(i)] =
            Point{from.component,
                  edge.witness.lo + margin +
                      (edge.witness.width() - 2 * margin) * i / (kSamples - 1),
                  edge.seed_y};
    rep.min_discontinuity_distance = std::numeric_limits<double>::infinity();
    for (int j = 0; j < edge.iterates; ++j) {
        for (auto& p : pts) {
            for (double d :
                 map.discontinuities[static_cast<size_t>(p.component)])
                rep.min_discontinuity_distance =
                    std::min(rep.min_discontinuity_distance, std::abs(p.x - d));
            const auto img = map.eval(p);
            if (!img) {
                rep.failure = "witness sample left the domain at iterate " +
                              std::to_string(j + 1);
                rep.steps = j;
                return rep;
            }
            p = *img;
        }
        rep.steps = j + 1;
    }
    if (rep.min_discontinuity_distance <= 0.0) {
        rep.failure = "witness sample on the discontinuity set";
        return rep;
    }

    // Route 2: interval arithmetic with limit-exact endpoints; no splitting
    // is allowed during replay.
    Piece piece{from.component, edge.witness.lo, edge.witness.hi};
    for (int j = 0; j < edge.iterates; ++j) {
        const auto ap = apply_piece(map, piece);
        if (!ap.ok) {
            rep.failure = "interval replay failed: " + ap.why;
            return rep;
        }
        piece = ap.img;
    }
    rep.final_cover =
        LeafInterval{piece.lo, piece.hi, false, false};
    const bool covers = piece.comp == target.component &&
                        piece.lo <= target.lo + 1e-9 &&
                        piece.hi >= target.hi - 1e-9;
    if (!covers) {
        rep.failure = "replayed image does not cover the target band";
        return rep;
    }
    rep.ok = true;
    return rep;
}

namespace {

// Leaf-space composite along one edge (iterates applications of f).
double eval_edge_leaf(const TriangularMap& map, const CoveringGraph& graph,
                      const CoveringEdge& e, double s) {
    Leaf cur{graph.bands[static_cast<size_t>(e.from)].component, s};
    for (int j = 0; j < e.iterates; ++j) {
        if (!map.in_domain(cur))
            throw BranchRefinementError("cycle orbit left the domain");
        const auto img = map.leaf_map(cur);
        if (!img) throw BranchRefinementError("cycle orbit left the domain");
        cur = *img;
    }
    return cur.s;
}

std::vector<int> divisors_of(int n) {
    std::vector<int> out;
    for (int d = 1; d < n; ++d)
        if (n % d == 0) out.push_back(d);
    return out;
}

Point apply_map_times(const TriangularMap& map, Point p, int times) {
    for (int i = 0; i < times; ++i) {
        const auto img = map.eval(p);
        if (!img)
            throw BranchRefinementError("orbit point left the domain");
        p = *img;
    }
    return p;
}

double point_dist(const Point& a, const Point& b) {
    if (a.component != b.component)
        return std::numeric_limits<double>::infinity();
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

PeriodicOrbit locate_periodic_orbit(const TriangularMap& map,
                                    const std::vector<CoveringEdge>& cycle,
                                    const CoveringGraph& graph,
                                    const OrbitOptions& opts) {
    if (cycle.empty()) throw InvalidInputError("empty cycle");
    for (size_t i = 0; i < cycle.size(); ++i) {
        const int expected = cycle[(i + 1) % cycle.size()].from;
        if (cycle[i].to != expected)
            throw InvalidInputError("cycle edges are not chained");
    }

    PeriodicOrbit orbit;
    for (const auto& e : cycle) orbit.cycle_iterates += e.iterates;
    const int total = orbit.cycle_iterates;

    // Pullback of the starting witness through the whole cycle, so that the
    // composite is continuous and monotone on the bracket.
    WitnessInterval target{cycle.front().witness.lo, cycle.front().witness.hi};
    for (size_t i = cycle.size(); i-- > 0;) {
        const auto& e = cycle[i];
        const Piece piece{graph.bands[static_cast<size_t>(e.from)].component,
                          e.witness.lo, e.witness.hi};
        auto g = [&](double s) { return eval_edge_leaf(map, graph, e, s); };
        // Monotone inversion of the edge composite over its witness piece.
        auto solve = [&](double value) {
            const double margin = std::max(1e-13, 1e-12 * piece.width());
            double a = piece.lo + margin, b = piece.hi - margin;
            double fa = g(a), fb = g(b);
            const bool inc = fa <= fb;
            double ga = inc ? fa - value : value - fa;
            double gb = inc ? fb - value : value - fb;
            if (ga >= 0.0) return a;
            if (gb <= 0.0) return b;
            for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = g(m);
                if ((inc ? fm - value : value - fm) < 0.0)
                    a = m;
                else
                    b = m;
            }
            return 0.5 * (a + b);
        };
        const double a = solve(target.lo);
        const double b = solve(target.hi);
        target = WitnessInterval{std::min(a, b), std::max(a, b)};
    }

    const int comp0 = graph.bands[static_cast<size_t>(cycle.front().from)].component;
    auto composite = [&](double s) {
        for (const auto& e : cycle) s = eval_edge_leaf(map, graph, e, s);
        return s;
    };

    const double inset = std::max(1e-13, 1e-9 * target.width());
    double a = target.lo + inset, b = target.hi - inset;
    if (!(a < b)) throw BranchRefinementError("degenerate pullback interval");
    double ha = composite(a) - a;
    double hb = composite(b) - b;
    double fixed_s;
    if (std::abs(ha) <= opts.tau_leaf) {
        fixed_s = a;
    } else if (std::abs(hb) <= opts.tau_leaf) {
        fixed_s = b;
    } else if (ha * hb > 0.0) {
        throw BranchRefinementError(
            "fixed-leaf bisection bracket invalid on the witness branch; "
            "re-run the covering walk with a finer sub-curve");
    } else {
        for (int it = 0; it < 200 && (b - a) > opts.tau_leaf; ++it) {
            const double m = 0.5 * (a + b);
            const double hm = composite(m) - m;
            if ((hm < 0.0) == (ha < 0.0)) {
                a = m;
                ha = hm;
            } else {
                b = m;
            }
        }
        fixed_s = 0.5 * (a + b);
    }

    // Minimal period by divisor checking of the total iterate count.
    orbit.period = total;
    for (int d : divisors_of(total)) {
        try {
            Leaf cur{comp0, fixed_s};
            for (int j = 0; j < d; ++j) {
                const auto img = map.leaf_map(cur);
                if (!img) throw BranchRefinementError("divisor probe left domain");
                cur = *img;
            }
            if (cur.component == comp0 &&
                std::abs(cur.s - fixed_s) <= std::max(100.0 * opts.tau_leaf, 1e-9)) {
                orbit.period = d;
                break;
            }
        } catch (const BranchRefinementError&) {
            break;
        }
    }

    // Vertical convergence on the fixed leaf (contraction along leaves).
    Point p{comp0, fixed_s, 0.0};
    const int rounds = std::max(1, opts.max_vertical_iters / std::max(1, orbit.period));
    for (int it = 0; it < rounds; ++it) {
        const Point q = apply_map_times(map, p, orbit.period);
        const double d = point_dist(q, p);
        p = Point{comp0, fixed_s, q.y};  // pin the leaf, converge the height
        if (d <= 0.25 * opts.tau_orbit) break;
        if (it + 1 == rounds && d > 1.0) {
            orbit.rejection = "no vertical convergence on the fixed leaf";
            break;
        }
    }
    const Point closed = apply_map_times(map, p, orbit.period);
    orbit.residual = point_dist(closed, p);

    orbit.points.resize(static_cast<size_t>(orbit.period));
    orbit.leaf_coords.resize(static_cast<size_t>(orbit.period));
    Point cur = p;
    for (int i = 0; i < orbit.period; ++i) {
        orbit.points[static_cast<size_t>(i)] = cur;
        orbit.leaf_coords[static_cast<size_t>(i)] = cur.x;
        if (i + 1 < orbit.period) cur = apply_map_times(map, cur, 1);
    }

    // Horizontal multiplier: analytic chain rule when the model supplies a
    // leaf derivative, central differences on f^period otherwise.
    bool analytic = static_cast<bool>(map.leaf_derivative);
    double lambda_h = 1.0;
    if (analytic) {
        for (const auto& q : orbit.points) {
            const auto d = map.leaf_derivative(Leaf{q.component, q.x});
            if (!d) {
                analytic = false;
                break;
            }
            lambda_h *= std::abs(*d);
        }
    }
    if (!analytic) {
        const double h = 1e-7;
        auto fper = [&](double s) {
            Leaf l{comp0, s};
            for (int j = 0; j < orbit.period; ++j) {
                const auto img = map.leaf_map(l);
                if (!img) throw BranchRefinementError("multiplier stencil left domain");
                l = *img;
            }
            return l.s;
        };
        lambda_h = std::abs(fper(fixed_s + h) - fper(fixed_s - h)) / (2.0 * h);
    }
    orbit.lambda_h = lambda_h;

    // Vertical multiplier from the displacement ratio over one period.
    const double dv = p.y + 1e-4 <= 1.0 ? 1e-4 : -1e-4;
    const Point shifted = apply_map_times(map, Point{comp0, fixed_s, p.y + dv},
                                          orbit.period);
    orbit.lambda_v = std::abs((shifted.y - closed.y) / dv);

    if (orbit.rejection.empty()) {
        if (orbit.residual > opts.tau_orbit)
            orbit.rejection = "closure residual above tolerance";
        else if (!(orbit.lambda_h > 1.0 + 1e-12))
            orbit.rejection = "non-hyperbolic: horizontal multiplier <= 1";
        else if (!(orbit.lambda_v < 1.0 - 1e-12))
            orbit.rejection = "non-hyperbolic: vertical multiplier >= 1";
    }
    orbit.hyperbolic = orbit.rejection.empty();
    return orbit;
}

}  // namespace orbitforge

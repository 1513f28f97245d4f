#pragma once

// Triangular maps: partial self-maps of the square complex preserving the
// vertical foliation, their induced 1-D leaf maps, boundary itineraries
// n(L), one-sided limits at discontinuities, and the expansion-cone
// verifier.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orbitforge/geometry.hpp"

namespace orbitforge {

// 2x2 Jacobian [[dx'/dx, dx'/dy], [dy'/dx, dy'/dy]].
struct Jac2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
};

struct TriangularMap {
    SquareComplex complex;

    // Pointwise evaluation; nullopt off the domain.
    std::function<std::optional<Point>(const Point&)> eval;
    // Induced map on the leaf space; nullopt off the domain.
    std::function<std::optional<Leaf>(const Leaf&)> leaf_map;
    // F-saturated domain predicate.
    std::function<bool(const Leaf&)> leaf_in_domain;

    // Optional analytic derivative of the induced leaf map.
    std::function<std::optional<double>(const Leaf&)> leaf_derivative;
    // Optional analytic 2-D Jacobian.
    std::function<std::optional<Jac2>(const Point&)> jacobian;

    double declared_lambda = 1.0;
    std::optional<double> declared_contraction;  // vertical rate, if known
    ConeField cone;

    // Declared discontinuity leaves per component (sorted ascending).
    std::vector<std::vector<double>> discontinuities;
    // Leaves where the leaf map is continuous but not C^1 (kinks); the
    // covering walker splits curves at breaks = discontinuities + kinks.
    std::vector<std::vector<double>> kinks;

    bool large_domain = false;  // Dom(F) == Sigma \ L_0
    std::string name;
    std::map<std::string, double> params;

    int k() const { return complex.count(); }
    bool in_domain(const Leaf& l) const { return leaf_in_domain(l); }
    bool is_discontinuity(const Leaf& l, double eps = kGeomEps) const;
    // Sorted union of discontinuities and kinks for one component.
    std::vector<double> branch_breaks(int component) const;
};

// Finite-difference step for Jacobian estimation.
inline constexpr double kFdStep = 1e-6;
// Leaves closer than this to a declared discontinuity are skipped when
// sampling derivatives.
inline constexpr double kDiscontinuityMargin = 1e-4;

struct LeafImage {
    bool at_discontinuity = false;
    std::optional<Leaf> image;       // f(L) when defined
    std::optional<Leaf> minus_limit; // populated when at_discontinuity
    std::optional<Leaf> plus_limit;
};

// f(L) for a domain leaf. Discontinuity leaves yield a flagged result
// carrying both one-sided limits; other leaves outside Dom(F) throw
// DomainError.
LeafImage eval_leaf(const TriangularMap& map, const Leaf& leaf);

struct LeafItinerary {
    Leaf leaf;
    int n = 0;                 // n(L) per Definition 8 semantics
    bool exceeded_cap = false; // sentinel: boundary orbit outlived the cap
    bool left_domain = false;  // boundary orbit exited Dom(F); n still resolved
    std::vector<Leaf> visited; // L, F(L), ..., as far as traced
};

// Count of leading iterates of L that stay on the boundary leaves L-/L+.
// n = 0 when F(L) is interior. exceeded_cap signals a periodic boundary
// leaf (negation of Hypotheses(*)).
LeafItinerary compute_n_of_L(const TriangularMap& map, const Leaf& leaf,
                             int cap);
// Default cap = 2k + 1.
LeafItinerary compute_n_of_L(const TriangularMap& map, const Leaf& leaf);

enum class Side { minus, plus };

// One-sided limit of the leaf map at s from the given side, estimated over
// h in {1e-3, ..., 1e-8} with Richardson extrapolation. nullopt when the
// side is outside the square, leaves the domain, or fails the agreement
// check.
std::optional<Leaf> leaf_limit(const TriangularMap& map, int component,
                               double s, Side side);

struct OneSidedLimits {
    std::optional<Leaf> minus;
    std::optional<Leaf> plus;
};

OneSidedLimits one_sided_limits(const TriangularMap& map, const Leaf& at);

struct HyperbolicityReport {
    bool transversal = false;
    double cone_invariance_fraction = 0.0;
    double min_expansion = 0.0;
    double declared_lambda = 0.0;
    std::string verdict;  // "pass", "fail", "inconclusive"
    long samples_used = 0;
    long samples_requested = 0;
};

// Samples DF over the domain (analytic Jacobian when available, central
// differences otherwise), checking cone invariance into the half-cone and
// the minimal expansion over cone directions against declared_lambda.
// Parallel over sample points.
HyperbolicityReport verify_lambda_hyperbolic(const TriangularMap& map,
                                             long samples);
// Serial reference implementation; byte-identical report.
HyperbolicityReport verify_lambda_hyperbolic_serial(const TriangularMap& map,
                                                    long samples);

struct RegularityProbe {
    int n_of_leaf = -1;
    bool exceeded_cap = false;
    // Sampled continuity of f near the leaf (H1-style probe, n(L) = 0).
    bool continuous = false;
    double continuity_modulus = 0.0;
    // Iterate indices j with f^j(s) matching each one-sided limit
    // (H2 item-2 probe); 0 = no match / side absent.
    int matched_minus = 0;
    int matched_plus = 0;
    bool limits_consistent = false;
};

// Sampled regularity probe around a domain leaf. Evidence only: no formal
// H1/H2 certification.
RegularityProbe probe_regularity(const TriangularMap& map, const Leaf& leaf);

// Single-component restriction. The component's leaves keep their
// coordinates; images landing outside the component fall out of the domain.
// large_domain is re-probed on a leaf grid unless overridden.
TriangularMap restrict_component(const TriangularMap& map, int component,
                                 std::optional<bool> large_domain = {});

}  // namespace orbitforge

#pragma once

// Concrete systems: the classical Lorenz vector field, a piecewise-affine
// geometric Lorenz triangular map, the two-square Appendix composite with
// its identity branch, and small linear/tent fixtures.

#include "orbitforge/flow.hpp"
#include "orbitforge/tri_map.hpp"

namespace orbitforge {

struct LorenzParams {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
};

FlowSystem lorenz_field(const LorenzParams& params = {});

// X(p) = A p with the analytic Jacobian A.
FlowSystem linear_field(const Mat3& a);

// Saddle passage with eigenvalues (lambda_plus, -lambda_plus, -contraction):
// the time-reversed Cherry saddle condition, so the central 2-plane carries
// zero net volume growth.
FlowSystem cherry_saddle_field(double lambda_plus = 1.0,
                               double contraction = 2.0);

// One-square map with leaf dynamics f(s) = sign(s) (mu |s| - 1) on
// Dom = Sigma \ L_0 and vertical action y -> rho y + sign(s) (1 - rho)/2.
// The formula is a concrete representative of the constraints
// sqrt(2) < mu <= 2, 0 < rho <= 1/2; it is recorded in the map params.
struct GeoLorenzModel {
    double mu = 1.9;
    double rho = 0.3;
    TriangularMap map;
};

GeoLorenzModel geo_lorenz(double mu = 1.9, double rho = 0.3);

// Two-square composite: component 0 carries f^t (piecewise affine, slope
// mu_t > sqrt(2), bounded one-sided limits at the singular leaf), component
// 1 carries the identity branch on [-1, 0] with Sigma^b_+ outside the
// domain. The W^u re-entry anchors of the construction are recorded as
// metadata.
struct AppendixComposite {
    double mu_t = 1.8;
    TriangularMap map;
    Point wu_plus_entry{0, -1.0, -1.0 / 3.0};  // W^u_+(sigma) first hit
    Point wu_t_return{0, 1.0, 1.0 / 3.0};      // W^u_t(s) first hit
    Point wu_b_return{1, 0.0, 0.0};            // W^u_b(s) first hit

    // Large-domain single-square restriction to Sigma^t.
    TriangularMap top_restriction() const;
    // Restriction to Sigma^b (identity branch; not large-domain).
    TriangularMap bottom_restriction() const;
};

AppendixComposite appendix_composite(double mu_t = 1.8);

// Node counts per depth of the f^t-preimage tree of `root` (depth 0 is the
// root itself).
std::vector<long> preimage_tree_counts(double mu_t, double root,
                                       int max_depth);

// f(s) = 1 - 2|s| with vertical action y -> y/3. Continuous (a kink at 0),
// domain all of Sigma; its full-branch image covers the single alphabet
// band in one step.
TriangularMap tent_fixture();

TriangularMap identity_triangular_map(int k = 1);

}  // namespace orbitforge

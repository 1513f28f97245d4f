#pragma once

// Singularity classification, singular cross-sections flanking W^ss, the
// first-return map sampler, triangular-map extraction from return data, and
// the Lyapunov-stability escape probe.

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "orbitforge/flow.hpp"
#include "orbitforge/tri_map.hpp"

namespace orbitforge {

enum class SingularityClass {
    lorenz_like,
    two_positive,
    other_hyperbolic,
    nonhyperbolic,
};

const char* to_string(SingularityClass c);

struct SingularityInfo {
    Vec3 location = Vec3::Zero();
    // Sorted ascending by real part; for Definition-5 ordering this reads
    // (lambda2, lambda3, lambda1).
    std::array<std::complex<double>, 3> eigenvalues{};
    SingularityClass classification = SingularityClass::nonhyperbolic;
    bool all_real = false;
    // Unit eigenvectors aligned with `eigenvalues`; empty when the Jacobian
    // is defective or eigenvalues are complex.
    std::vector<Vec3> eigenvectors;
};

// Newton iteration on X(p) = 0 from each seed, deduplicated at distance
// 1e-6, then eigen-classification of DX(sigma).
std::vector<SingularityInfo> find_and_classify_singularities(
    const FlowSystem& sys, const std::vector<Vec3>& seeds);

SingularityInfo classify_equilibrium(const FlowSystem& sys, const Vec3& sigma);

enum class SectionSide { top, bottom };

// An embedded rectangle chart [-1,1]^2 -> R^3, x |-> base + x*half_width*u
// + y*half_height*v. For singular cross-sections, v runs along the
// strong-stable eigendirection (the foliation leaves) and the singular
// curve is the x = 0 leaf.
struct CrossSection {
    Vec3 base = Vec3::Zero();
    Vec3 u = Vec3::UnitX();
    Vec3 v = Vec3::UnitY();
    Vec3 normal = Vec3::UnitZ();
    double half_width = 0.1;   // delta
    double half_height = 0.2;
    int owner = -1;            // singularity index, -1 for plain sections
    Vec3 sigma = Vec3::Zero(); // owner location (valid when owner >= 0)
    int side_sign = +1;        // +1 top, -1 bottom
    double d = 0.0;

    Vec3 to_world(double x, double y) const {
        return base + x * half_width * u + y * half_height * v;
    }
    // Chart coordinates (x, y) and the normal offset w of a world point.
    Vec3 from_world(const Vec3& p) const;
    bool contains_chart(double x, double y, double slack = 1e-9) const {
        return std::abs(x) <= 1.0 + slack && std::abs(y) <= 1.0 + slack;
    }
};

// Singular cross-section at distance d from sigma along the weak-stable
// axis, on the chosen side of W^ss, with vertical boundaries delta away
// from the singular curve. Throws GeometryError when the flow is not
// transversal over a 3x3 chart grid.
CrossSection build_section(const FlowSystem& sys, const SingularityInfo& sing,
                           SectionSide side, double d, double delta,
                           double half_height = 0.0);

// Refinement S(delta') with the same singular curve; requires
// 0 < delta_new <= half_width.
CrossSection refine(const CrossSection& section, double delta_new);

// Plain flat section for fixtures and exit planes (not singular).
CrossSection make_plane_section(const Vec3& base, const Vec3& u, const Vec3& v,
                                double half_width, double half_height,
                                const FlowSystem& sys);

enum class ReturnOutcome { hit, escape, directed_to_sigma, stalled };

const char* to_string(ReturnOutcome o);

struct ReturnSample {
    ReturnOutcome outcome = ReturnOutcome::escape;
    int source_section = -1;
    int target_section = -1;
    double s_in = 0.0, y_in = 0.0;
    double s_out = 0.0, y_out = 0.0;
    double return_time = 0.0;
    Vec3 world_out = Vec3::Zero();
};

struct ReturnMapOptions {
    double t_max = 20.0;
    double crossing_time_tol = 1e-10;
    double min_normal_speed = 1e-6;   // tangential grazes rejected below this
    double capture_radius_rel = 1e-3; // * d: entering this ball => to sigma
    double max_step = 0.05;           // crossing detection granularity
};

// First positive transversal return from a chart point to any section of
// the family. Points on the singular curve report directed_to_sigma.
ReturnSample return_map_sample(const FlowSystem& sys,
                               const std::vector<CrossSection>& sections,
                               int section, double s, double y,
                               const ReturnMapOptions& opts = {});

struct ReturnGrid {
    std::vector<double> s_values;
    std::vector<double> y_values;
    // samples[section][is * ny + iy]
    std::vector<std::vector<ReturnSample>> samples;
};

// Grid of return samples over every section; parallel over grid nodes.
ReturnGrid sample_return_grid(const FlowSystem& sys,
                              const std::vector<CrossSection>& sections,
                              int n_s, int n_y,
                              const ReturnMapOptions& opts = {});
ReturnGrid sample_return_grid_serial(const FlowSystem& sys,
                                     const std::vector<CrossSection>& sections,
                                     int n_s, int n_y,
                                     const ReturnMapOptions& opts = {});

using ReturnSampler =
    std::function<ReturnSample(int section, double s, double y)>;

struct ExtractionOptions {
    int grid_s = 41;
    int grid_y = 5;
    double tau_fol = 1e-3;        // max y-dependence of the image leaf
    double jump_threshold = 0.2;  // leaf-image jump marking a discontinuity
    ReturnMapOptions return_opts{};
};

struct ExtractionReport {
    int components = 0;
    long hits = 0, escapes = 0, directed = 0, stalled = 0;
    double max_y_deviation = 0.0;
    double coverage_fraction = 0.0;  // grid columns with a usable return
    std::vector<std::vector<double>> detected_discontinuities;
};

// Fits the induced leaf map from return samples; the y-independence of the
// image leaf (tau_fol) is measured, not assumed. Throws NotTriangularError
// when the foliation test fails.
TriangularMap extract_triangular_map(const ReturnSampler& sampler,
                                     int components,
                                     const ExtractionOptions& opts,
                                     ExtractionReport* report = nullptr);
TriangularMap extract_triangular_map(const FlowSystem& sys,
                                     const std::vector<CrossSection>& sections,
                                     const ExtractionOptions& opts,
                                     ExtractionReport* report = nullptr);

struct EscapeReport {
    long total = 0;
    long escaped = 0;
    long inconclusive = 0;
    double escape_fraction = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
};

// Samples points within distance V of the given invariant-set sample,
// integrates to the horizon, and reports the fraction leaving the
// U-neighborhood of the set. Numerical evidence, not a proof. Parallel
// over samples; results are seed-deterministic.
EscapeReport lyapunov_stability_probe(const FlowSystem& sys,
                                      const std::vector<Vec3>& set_points,
                                      double U, double V, long samples,
                                      double T, std::uint64_t seed);
EscapeReport lyapunov_stability_probe_serial(const FlowSystem& sys,
                                             const std::vector<Vec3>& set_points,
                                             double U, double V, long samples,
                                             double T, std::uint64_t seed);

// Long-run trajectory sample of an attractor (transient discarded, points
// stored every stride_dt time units).
std::vector<Vec3> sample_attractor(const FlowSystem& sys, const Vec3& p0,
                                   double transient, double duration,
                                   double stride_dt);

}  // namespace orbitforge

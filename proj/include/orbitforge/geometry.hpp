#pragma once

// Geometry of the sectioned phase space: a disjoint union of squares
// [-1,1]^2 carrying a vertical foliation in straightened coordinates.
// Leaves are vertical lines x = s; bands are open or closed intervals of
// leaves; curves are sampled C^1 paths transversal to the foliation.

#include <string>
#include <vector>

#include "orbitforge/errors.hpp"

namespace orbitforge {

// Endpoint coincidence tolerance for all leaf-coordinate comparisons.
inline constexpr double kGeomEps = 1e-12;

// Default resample density for cover tests (per component crossing).
inline constexpr int kDefaultCurveSamples = 512;

struct SquareComplex {
    struct Component {
        std::string label;
        int section_index = -1;  // owning flow cross-section, -1 if none
    };
    std::vector<Component> components;

    SquareComplex() = default;
    explicit SquareComplex(int k) : components(static_cast<size_t>(k)) {
        if (k < 1) throw InvalidInputError("SquareComplex needs k >= 1");
        for (int i = 0; i < k; ++i)
            components[static_cast<size_t>(i)].label = "S" + std::to_string(i);
    }
    int count() const { return static_cast<int>(components.size()); }
};

struct Leaf {
    int component = 0;
    double s = 0.0;  // leaf-space coordinate in [-1,1]
};

inline bool same_leaf(const Leaf& a, const Leaf& b, double eps = kGeomEps) {
    return a.component == b.component && std::abs(a.s - b.s) <= eps;
}

enum class Openness { open, closed };

struct Band {
    int component = 0;
    double lo = -1.0;
    double hi = 1.0;
    Openness openness = Openness::open;

    double width() const { return hi - lo; }
    bool open() const { return openness == Openness::open; }

    // Leaf membership, resolving endpoint coincidence with kGeomEps.
    bool contains_leaf(double s) const {
        if (open()) return s > lo + kGeomEps && s < hi - kGeomEps;
        return s >= lo - kGeomEps && s <= hi + kGeomEps;
    }
    // B' subseteq B as leaf sets.
    bool contains_band(const Band& inner) const;
};

Band make_band(int component, double lo, double hi,
               Openness openness = Openness::open);

struct Point {
    int component = 0;
    double x = 0.0;
    double y = 0.0;
};

struct CurveSample {
    Point p;
    double tx = 1.0;  // unit tangent
    double ty = 0.0;
};

// A sampled C^1 curve inside one component. Consecutive samples share the
// component; tangents are normalized on construction.
struct Curve {
    std::vector<CurveSample> samples;
    bool includes_endpoints = true;  // closed curve Cl(c) vs. interior Int(c)

    int component() const {
        if (samples.empty()) throw InvalidInputError("empty curve");
        return samples.front().p.component;
    }
    size_t size() const { return samples.size(); }
};

// Horizontal segment at height y over the leaf interval [x0, x1].
Curve make_horizontal_segment(int component, double x0, double x1, double y,
                              int n_samples = kDefaultCurveSamples);

// Build a curve from sampled points (tangents by finite differences).
Curve make_curve_from_points(const std::vector<Point>& pts,
                             bool includes_endpoints = true);

// Arc-length-uniform resampling to n samples (piecewise-linear model).
Curve resample(const Curve& c, int n_samples);

// Cone of inclination alpha (in (0, pi/2)) around the horizontal axis of the
// straightened coordinates. A vector belongs to the cone iff its angle to the
// horizontal subspace is <= alpha; transversality to the vertical foliation
// is exactly alpha < pi/2.
struct ConeField {
    double alpha = 0.35;

    ConeField() = default;
    explicit ConeField(double a) : alpha(a) {
        if (!(a > 0.0) || !(a < 1.5707963267948966))
            throw InvalidInputError("cone inclination must be in (0, pi/2)");
    }
    bool contains(double vx, double vy) const;
    double angle_to_horizontal(double vx, double vy) const;
    bool transversal() const { return alpha < 1.5707963267948966; }
    ConeField half() const { return ConeField(alpha / 2.0); }
};

// The interval of leaf coordinates met by a set; openness tracked per end.
struct LeafInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_attained = true;  // false: endpoint is a one-sided limit only
    bool hi_attained = true;

    double width() const { return hi - lo; }
    bool covers(const Band& b) const;
};

// Leaf-coordinate interval met by a curve (curves are connected, so the
// cover is always a single interval per component).
LeafInterval curve_leaf_cover(const Curve& c);

// True iff every sampled tangent of c lies inside the cone.
// Throws InvalidInputError on degenerate curves (all samples coincident).
bool curve_tangent_in_cone(const Curve& c, const ConeField& cone);

// True iff the leaf interval met by the curve contains the band.
bool curve_covers_band(const Curve& c, const Band& b);

}  // namespace orbitforge

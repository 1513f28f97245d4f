#include "orbitforge/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace orbitforge {

bool Band::contains_band(const Band& inner) const {
    if (component != inner.component) return false;
    // Outer closed endpoints absorb coincident inner endpoints regardless of
    // the inner openness; an open outer endpoint only admits a coincident
    // inner endpoint when that endpoint is itself open.
    const bool lo_ok = inner.lo > lo + kGeomEps ||
                       (std::abs(inner.lo - lo) <= kGeomEps &&
                        (!open() || inner.open()));
    const bool hi_ok = inner.hi < hi - kGeomEps ||
                       (std::abs(inner.hi - hi) <= kGeomEps &&
                        (!open() || inner.open()));
    return lo_ok && hi_ok;
}

Band make_band(int component, double lo, double hi, Openness openness) {
    if (!(lo >= -1.0 - kGeomEps) || !(hi <= 1.0 + kGeomEps) || !(lo < hi))
        throw InvalidInputError("band requires -1 <= lo < hi <= 1");
    return Band{component, lo, hi, openness};
}

Curve make_horizontal_segment(int component, double x0, double x1, double y,
                              int n_samples) {
    if (n_samples < 2) throw InvalidInputError("segment needs >= 2 samples");
    if (std::abs(x1 - x0) <= kGeomEps)
        throw InvalidInputError("degenerate horizontal segment");
    Curve c;
    c.samples.resize(static_cast<size_t>(n_samples));
    const double dir = x1 > x0 ? 1.0 : -1.0;
    for (int i = 0; i < n_samples; ++i) {
        const double u = static_cast<double>(i) / (n_samples - 1);
        auto& cs = c.samples[static_cast<size_t>(i)];
        cs.p = Point{component, x0 + (x1 - x0) * u, y};
        cs.tx = dir;
        cs.ty = 0.0;
    }
    return c;
}

Curve make_curve_from_points(const std::vector<Point>& pts,
                             bool includes_endpoints) {
    if (pts.size() < 2) throw InvalidInputError("curve needs >= 2 points");
    const int comp = pts.front().component;
    Curve c;
    c.includes_endpoints = includes_endpoints;
    c.samples.resize(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].component != comp)
            throw InvalidInputError("curve samples must share one component");
        c.samples[i].p = pts[i];
        // Central differences in the interior, one-sided at the ends.
        const size_t a = i == 0 ? 0 : i - 1;
        const size_t b = i + 1 == pts.size() ? i : i + 1;
        double tx = pts[b].x - pts[a].x;
        double ty = pts[b].y - pts[a].y;
        const double n = std::hypot(tx, ty);
        if (n > 0.0) {
            tx /= n;
            ty /= n;
        } else {
            tx = 1.0;
            ty = 0.0;
        }
        c.samples[i].tx = tx;
        c.samples[i].ty = ty;
    }
    return c;
}

Curve resample(const Curve& c, int n_samples) {
    if (n_samples < 2) throw InvalidInputError("resample needs >= 2 samples");
    if (c.samples.size() < 2) throw InvalidInputError("curve needs >= 2 samples");

    std::vector<double> arc(c.samples.size(), 0.0);
    for (size_t i = 1; i < c.samples.size(); ++i) {
        const auto& a = c.samples[i - 1].p;
        const auto& b = c.samples[i].p;
        arc[i] = arc[i - 1] + std::hypot(b.x - a.x, b.y - a.y);
    }
    const double total = arc.back();
    if (total <= kGeomEps) throw InvalidInputError("degenerate curve");

    std::vector<Point> pts(static_cast<size_t>(n_samples));
    size_t j = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double target = total * i / (n_samples - 1);
        while (j + 2 < arc.size() && arc[j + 1] < target) ++j;
        const double seg = arc[j + 1] - arc[j];
        const double u = seg > 0.0 ? (target - arc[j]) / seg : 0.0;
        const auto& a = c.samples[j].p;
        const auto& b = c.samples[j + 1].p;
        pts[static_cast<size_t>(i)] =
            Point{a.component, a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u};
    }
    Curve out = make_curve_from_points(pts, c.includes_endpoints);
    return out;
}

double ConeField::angle_to_horizontal(double vx, double vy) const {
    const double n = std::hypot(vx, vy);
    if (n == 0.0) return 0.0;
    return std::asin(std::min(1.0, std::abs(vy) / n));
}

bool ConeField::contains(double vx, double vy) const {
    if (vx == 0.0 && vy == 0.0) return true;  // zero vector is in every cone
    return angle_to_horizontal(vx, vy) <= alpha + 1e-15;
}

bool LeafInterval::covers(const Band& b) const {
    // Image interval contains the band's leaf set, resolving endpoint
    // coincidence with kGeomEps. An unattained interval endpoint still
    // covers a coincident open band endpoint.
    const bool need_lo_strict = !b.open() && !lo_attained;
    const bool need_hi_strict = !b.open() && !hi_attained;
    const bool lo_ok =
        need_lo_strict ? lo < b.lo - kGeomEps : lo <= b.lo + kGeomEps;
    const bool hi_ok =
        need_hi_strict ? hi > b.hi + kGeomEps : hi >= b.hi - kGeomEps;
    return lo_ok && hi_ok;
}

LeafInterval curve_leaf_cover(const Curve& c) {
    if (c.samples.size() < 2) throw InvalidInputError("curve needs >= 2 samples");
    double lo = c.samples.front().p.x;
    double hi = lo;
    for (const auto& s : c.samples) {
        lo = std::min(lo, s.p.x);
        hi = std::max(hi, s.p.x);
    }
    LeafInterval iv;
    iv.lo = lo;
    iv.hi = hi;
    iv.lo_attained = c.includes_endpoints ||
                     (lo != c.samples.front().p.x && lo != c.samples.back().p.x);
    iv.hi_attained = c.includes_endpoints ||
                     (hi != c.samples.front().p.x && hi != c.samples.back().p.x);
    return iv;
}

bool curve_tangent_in_cone(const Curve& c, const ConeField& cone) {
    if (c.samples.size() < 2) throw InvalidInputError("curve needs >= 2 samples");
    bool degenerate = true;
    const auto& p0 = c.samples.front().p;
    for (const auto& s : c.samples) {
        if (std::hypot(s.p.x - p0.x, s.p.y - p0.y) > kGeomEps) {
            degenerate = false;
            break;
        }
    }
    if (degenerate) throw InvalidInputError("degenerate curve: all samples coincide");

    for (const auto& s : c.samples)
        if (!cone.contains(s.tx, s.ty)) return false;
    return true;
}

bool curve_covers_band(const Curve& c, const Band& b) {
    if (c.samples.empty() || c.component() != b.component) return false;
    return curve_leaf_cover(c).covers(b);
}

}  // namespace orbitforge

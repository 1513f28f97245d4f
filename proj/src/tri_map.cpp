#include "orbitforge/tri_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "orbitforge/parallel.hpp"

namespace orbitforge {

namespace {

constexpr double kPi2 = 1.5707963267948966;

bool is_boundary_leaf(const Leaf& l) {
    return std::abs(std::abs(l.s) - 1.0) <= kGeomEps;
}

double clamp_unit(double v) {
    if (v > 1.0 && v - 1.0 <= 1e-9) return 1.0;
    if (v < -1.0 && -1.0 - v <= 1e-9) return -1.0;
    return v;
}

}  // namespace

bool TriangularMap::is_discontinuity(const Leaf& l, double eps) const {
    if (l.component < 0 || l.component >= k()) return false;
    for (double d : discontinuities[static_cast<size_t>(l.component)])
        if (std::abs(l.s - d) <= eps) return true;
    return false;
}

std::vector<double> TriangularMap::branch_breaks(int component) const {
    std::vector<double> out = discontinuities[static_cast<size_t>(component)];
    const auto& kk = kinks[static_cast<size_t>(component)];
    out.insert(out.end(), kk.begin(), kk.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) { return std::abs(a - b) <= kGeomEps; }),
              out.end());
    return out;
}

LeafImage eval_leaf(const TriangularMap& map, const Leaf& leaf) {
    LeafImage out;
    if (map.is_discontinuity(leaf)) {
        out.at_discontinuity = true;
        out.minus_limit = leaf_limit(map, leaf.component, leaf.s, Side::minus);
        out.plus_limit = leaf_limit(map, leaf.component, leaf.s, Side::plus);
        if (map.in_domain(leaf)) out.image = map.leaf_map(leaf);
        return out;
    }
    if (!map.in_domain(leaf))
        throw DomainError("leaf outside Dom(F)");
    out.image = map.leaf_map(leaf);
    if (!out.image)
        throw DomainError("leaf map undefined on a domain leaf");
    return out;
}

LeafItinerary compute_n_of_L(const TriangularMap& map, const Leaf& leaf,
                             int cap) {
    if (cap < 2 * map.k())
        throw InvalidInputError("n(L) cap must be >= 2k");
    if (!map.in_domain(leaf)) throw DomainError("leaf outside Dom(F)");

    LeafItinerary it;
    it.leaf = leaf;
    it.visited.push_back(leaf);

    Leaf cur = leaf;
    int boundary_count = 0;
    for (;;) {
        std::optional<Leaf> img;
        if (map.in_domain(cur)) img = map.leaf_map(cur);
        if (!img) {
            // Orbit exits Dom(F) while on boundary leaves; the supremum in
            // Definition 8 is already resolved.
            it.left_domain = true;
            it.n = boundary_count;
            return it;
        }
        it.visited.push_back(*img);
        if (!is_boundary_leaf(*img)) {
            it.n = boundary_count;
            return it;
        }
        ++boundary_count;
        if (boundary_count > cap) {
            it.exceeded_cap = true;
            it.n = cap;
            return it;
        }
        cur = *img;
    }
}

LeafItinerary compute_n_of_L(const TriangularMap& map, const Leaf& leaf) {
    return compute_n_of_L(map, leaf, 2 * map.k() + 1);
}

std::optional<Leaf> leaf_limit(const TriangularMap& map, int component,
                               double s, Side side) {
    static constexpr double kSteps[] = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    const double sign = side == Side::plus ? 1.0 : -1.0;

    std::vector<double> vals;
    int target_comp = -1;
    for (double h : kSteps) {
        const double se = s + sign * h;
        if (se < -1.0 || se > 1.0) return std::nullopt;
        const Leaf probe{component, se};
        if (!map.in_domain(probe)) return std::nullopt;
        const auto img = map.leaf_map(probe);
        if (!img) return std::nullopt;
        if (target_comp < 0) target_comp = img->component;
        if (img->component != target_comp) return std::nullopt;
        vals.push_back(img->s);
    }
    const double d_first = std::abs(vals[1] - vals[0]);
    const double d_last = std::abs(vals[5] - vals[4]);
    if (d_last > std::max(1e-10, 0.02 * d_first))
        return std::nullopt;  // oscillation: no limit at this tolerance
    // One Richardson step for the h-ratio 10 (exact for locally affine f).
    const double value = clamp_unit(vals[5] + (vals[5] - vals[4]) / 9.0);
    return Leaf{target_comp, value};
}

OneSidedLimits one_sided_limits(const TriangularMap& map, const Leaf& at) {
    OneSidedLimits lims;
    lims.minus = leaf_limit(map, at.component, at.s, Side::minus);
    lims.plus = leaf_limit(map, at.component, at.s, Side::plus);
    return lims;
}

namespace {

struct SampleOutcome {
    bool used = false;
    bool invariant = false;
    double min_expansion = 0.0;
};

std::optional<Jac2> estimate_jacobian(const TriangularMap& map, const Point& p) {
    if (map.jacobian) {
        if (auto j = map.jacobian(p)) return j;
    }
    const double h = kFdStep;
    const Point stencil[4] = {{p.component, p.x + h, p.y},
                              {p.component, p.x - h, p.y},
                              {p.component, p.x, p.y + h},
                              {p.component, p.x, p.y - h}};
    std::optional<Point> img[4];
    int comp = -1;
    for (int i = 0; i < 4; ++i) {
        if (std::abs(stencil[i].x) > 1.0 || std::abs(stencil[i].y) > 1.0)
            return std::nullopt;
        img[i] = map.eval(stencil[i]);
        if (!img[i]) return std::nullopt;
        if (comp < 0) comp = img[i]->component;
        if (img[i]->component != comp) return std::nullopt;  // stencil straddles
    }
    Jac2 j;
    j.a = (img[0]->x - img[1]->x) / (2.0 * h);
    j.c = (img[0]->y - img[1]->y) / (2.0 * h);
    j.b = (img[2]->x - img[3]->x) / (2.0 * h);
    j.d = (img[2]->y - img[3]->y) / (2.0 * h);
    return j;
}

SampleOutcome examine_sample(const TriangularMap& map, const Point& p) {
    SampleOutcome out;
    if (!map.in_domain(Leaf{p.component, p.x})) return out;

    const auto jac = estimate_jacobian(map, p);
    if (!jac) return out;
    out.used = true;

    const double alpha = map.cone.alpha;
    const double half = alpha / 2.0;

    // Image of the cone boundary rays; the image cone is their convex span
    // when the horizontal components agree in sign.
    const double vxp = std::cos(alpha), vyp = std::sin(alpha);
    const double wpx = jac->a * vxp + jac->b * vyp;
    const double wpy = jac->c * vxp + jac->d * vyp;
    const double wmx = jac->a * vxp - jac->b * vyp;
    const double wmy = -jac->c * vxp + jac->d * vyp;  // DF * (cos a, -sin a)
    const double ang_p = map.cone.angle_to_horizontal(wpx, wpy);
    const double ang_m = map.cone.angle_to_horizontal(wmx, wmy);
    out.invariant = ang_p < half - 1e-12 && ang_m < half - 1e-12 &&
                    wpx * wmx > 0.0;

    constexpr int kFanRays = 33;
    double min_exp = std::numeric_limits<double>::infinity();
    for (int r = 0; r < kFanRays; ++r) {
        const double theta = -alpha + 2.0 * alpha * r / (kFanRays - 1);
        const double vx = std::cos(theta), vy = std::sin(theta);
        const double wx = jac->a * vx + jac->b * vy;
        const double wy = jac->c * vx + jac->d * vy;
        min_exp = std::min(min_exp, std::hypot(wx, wy));
    }
    out.min_expansion = min_exp;
    return out;
}

std::vector<Point> sample_grid(const TriangularMap& map, long samples) {
    std::vector<Point> pts;
    const int k = map.k();
    const long per_comp = std::max<long>(1, samples / k);
    const int ny = std::max(1, static_cast<int>(std::sqrt(per_comp / 8.0)));
    const int nx = std::max(1, static_cast<int>(per_comp / ny));
    const double m = kDiscontinuityMargin;

    for (int comp = 0; comp < k; ++comp) {
        const auto breaks = map.branch_breaks(comp);
        for (int ix = 0; ix < nx; ++ix) {
            const double x = nx == 1 ? 0.5 * m
                                     : -1.0 + m + (2.0 - 2.0 * m) * ix / (nx - 1);
            bool near_break = false;
            for (double b : breaks)
                if (std::abs(x - b) < kDiscontinuityMargin) near_break = true;
            if (near_break) continue;
            for (int iy = 0; iy < ny; ++iy) {
                const double y = ny == 1 ? 0.0
                                         : -1.0 + m + (2.0 - 2.0 * m) * iy / (ny - 1);
                pts.push_back(Point{comp, x, y});
            }
        }
    }
    return pts;
}

HyperbolicityReport reduce_report(const TriangularMap& map, long requested,
                                  long used, long invariant, double min_exp) {
    HyperbolicityReport rep;
    rep.transversal = map.cone.alpha < kPi2;
    rep.samples_requested = requested;
    rep.samples_used = used;
    rep.declared_lambda = map.declared_lambda;
    if (used == 0) {
        rep.verdict = "inconclusive";
        return rep;
    }
    rep.cone_invariance_fraction = static_cast<double>(invariant) / used;
    rep.min_expansion = min_exp;
    const bool pass = rep.transversal &&
                      rep.cone_invariance_fraction >= 1.0 &&
                      rep.min_expansion >= rep.declared_lambda - 1e-9;
    rep.verdict = pass ? "pass" : "fail";
    return rep;
}

}  // namespace

HyperbolicityReport verify_lambda_hyperbolic_serial(const TriangularMap& map,
                                                    long samples) {
    const auto pts = sample_grid(map, samples);
    long used = 0, invariant = 0;
    double min_exp = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        const auto o = examine_sample(map, p);
        if (!o.used) continue;
        ++used;
        if (o.invariant) ++invariant;
        min_exp = std::min(min_exp, o.min_expansion);
    }
    return reduce_report(map, samples, used, invariant, min_exp);
}

HyperbolicityReport verify_lambda_hyperbolic(const TriangularMap& map,
                                             long samples) {
    configure_threads();
    const auto pts = sample_grid(map, samples);
    const long n = static_cast<long>(pts.size());
    long used = 0, invariant = 0;
    double min_exp = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(+ : used, invariant) \
    reduction(min : min_exp)
    for (long i = 0; i < n; ++i) {
        const auto o = examine_sample(map, pts[static_cast<size_t>(i)]);
        if (o.used) {
            ++used;
            if (o.invariant) ++invariant;
            min_exp = std::min(min_exp, o.min_expansion);
        }
    }
    return reduce_report(map, samples, used, invariant, min_exp);
}

RegularityProbe probe_regularity(const TriangularMap& map, const Leaf& leaf) {
    RegularityProbe probe;
    const auto itin = compute_n_of_L(map, leaf);
    probe.n_of_leaf = itin.n;
    probe.exceeded_cap = itin.exceeded_cap;

    const auto base = map.leaf_map(leaf);
    if (base && itin.n == 0 && !itin.exceeded_cap) {
        // H1-style probe: continuity of f on a small saturated neighborhood.
        double modulus = 0.0;
        bool any = false;
        for (double d : {1e-3, 1e-4, 1e-5, 1e-6}) {
            for (double sgn : {-1.0, 1.0}) {
                const double se = leaf.s + sgn * d;
                if (se < -1.0 || se > 1.0) continue;
                const Leaf nb{leaf.component, se};
                if (!map.in_domain(nb)) continue;
                const auto img = map.leaf_map(nb);
                if (!img || img->component != base->component) continue;
                if (d <= 1e-6 + kGeomEps) {
                    modulus = std::max(modulus, std::abs(img->s - base->s));
                    any = true;
                }
            }
        }
        probe.continuity_modulus = modulus;
        probe.continuous = any && modulus <= 1e-4;
    }

    // H2 item-2 probe: does each one-sided limit match f^j(s) for some
    // 1 <= j <= n(L) + 1?
    const auto lims = one_sided_limits(map, leaf);
    std::vector<Leaf> orbit;
    Leaf cur = leaf;
    for (int j = 1; j <= itin.n + 1; ++j) {
        if (!map.in_domain(cur)) break;
        const auto img = map.leaf_map(cur);
        if (!img) break;
        orbit.push_back(*img);
        cur = *img;
    }
    auto match = [&](const std::optional<Leaf>& lim) -> int {
        if (!lim) return 0;
        for (size_t j = 0; j < orbit.size(); ++j)
            if (orbit[j].component == lim->component &&
                std::abs(orbit[j].s - lim->s) <= 1e-6)
                return static_cast<int>(j) + 1;
        return 0;
    };
    probe.matched_minus = match(lims.minus);
    probe.matched_plus = match(lims.plus);
    probe.limits_consistent = (!lims.minus || probe.matched_minus > 0) &&
                              (!lims.plus || probe.matched_plus > 0);
    return probe;
}

TriangularMap restrict_component(const TriangularMap& map, int component,
                                 std::optional<bool> large_domain) {
    if (component < 0 || component >= map.k())
        throw InvalidInputError("component index out of range");
    auto base = std::make_shared<const TriangularMap>(map);
    const int c = component;

    TriangularMap out;
    out.complex = SquareComplex(1);
    out.complex.components[0] =
        map.complex.components[static_cast<size_t>(component)];
    out.eval = [base, c](const Point& p) -> std::optional<Point> {
        const auto img = base->eval(Point{c, p.x, p.y});
        if (!img || img->component != c) return std::nullopt;
        return Point{0, img->x, img->y};
    };
    out.leaf_map = [base, c](const Leaf& l) -> std::optional<Leaf> {
        const auto img = base->leaf_map(Leaf{c, l.s});
        if (!img || img->component != c) return std::nullopt;
        return Leaf{0, img->s};
    };
    out.leaf_in_domain = [base, c](const Leaf& l) {
        const Leaf orig{c, l.s};
        if (!base->leaf_in_domain(orig)) return false;
        const auto img = base->leaf_map(orig);
        return img.has_value() && img->component == c;
    };
    if (map.leaf_derivative)
        out.leaf_derivative = [base, c](const Leaf& l) {
            return base->leaf_derivative(Leaf{c, l.s});
        };
    if (map.jacobian)
        out.jacobian = [base, c](const Point& p) {
            return base->jacobian(Point{c, p.x, p.y});
        };
    out.declared_lambda = map.declared_lambda;
    out.declared_contraction = map.declared_contraction;
    out.cone = map.cone;
    out.discontinuities = {map.discontinuities[static_cast<size_t>(component)]};
    out.kinks = {map.kinks[static_cast<size_t>(component)]};
    out.name = map.name + "#" +
               map.complex.components[static_cast<size_t>(component)].label;
    out.params = map.params;

    if (large_domain) {
        out.large_domain = *large_domain;
    } else {
        bool all = true;
        for (int i = 0; i <= 1000 && all; ++i) {
            const double s = -1.0 + 2.0 * i / 1000.0;
            if (std::abs(s) <= kGeomEps) continue;
            if (!out.leaf_in_domain(Leaf{0, s})) all = false;
        }
        out.large_domain = all;
    }
    return out;
}

}  // namespace orbitforge

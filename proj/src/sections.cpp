#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <tuple>

#include "orbitforge/parallel.hpp"
#include "orbitforge/sections.hpp"

namespace orbitforge {

const char* to_string(ReturnOutcome o) {
    switch (o) {
        case ReturnOutcome::hit: return "hit";
        case ReturnOutcome::escape: return "escape";
        case ReturnOutcome::directed_to_sigma: return "directed_to_sigma";
        case ReturnOutcome::stalled: return "stalled";
    }
    return "unknown";
}

Vec3 CrossSection::from_world(const Vec3& p) const {
    const Vec3 rel = p - base;
    return Vec3(rel.dot(u) / half_width, rel.dot(v) / half_height,
                rel.dot(normal));
}

CrossSection build_section(const FlowSystem& sys, const SingularityInfo& sing,
                           SectionSide side, double d, double delta,
                           double half_height) {
    if (sing.classification != SingularityClass::lorenz_like)
        throw GeometryError("singular cross-sections require a Lorenz-like singularity");
    if (sing.eigenvectors.size() != 3)
        throw GeometryError("eigenvectors unavailable (defective Jacobian)");
    if (!(d > 0.0) || !(delta > 0.0))
        throw GeometryError("section distance and half-width must be positive");

    // Eigenvalues ascending: [0] strong stable, [1] weak stable, [2] unstable.
    const Vec3 e_ss = sing.eigenvectors[0];
    const Vec3 e_ws = sing.eigenvectors[1];
    const Vec3 e_un = sing.eigenvectors[2];

    CrossSection sec;
    sec.sigma = sing.location;
    sec.side_sign = side == SectionSide::top ? +1 : -1;
    sec.d = d;
    sec.half_width = delta;
    sec.half_height = half_height > 0.0 ? half_height : d;

    // Leaves run along the strong-stable direction; the chart plane is
    // spanned by {unstable, strong stable} so the singular curve x = 0 stays
    // inside W^s(sigma) in the linear approximation.
    sec.v = e_ss;
    Vec3 u = e_un - e_un.dot(e_ss) * e_ss;
    const double un = u.norm();
    if (un < 1e-10) throw GeometryError("degenerate eigenframe");
    sec.u = u / un;
    sec.base = sing.location + sec.side_sign * d * e_ws;
    Vec3 n = sec.u.cross(sec.v);
    const double nn = n.norm();
    if (nn < 1e-10) throw GeometryError("degenerate chart frame");
    n /= nn;
    const Vec3 x_base = sys.field(sec.base);
    if (x_base.norm() < 1e-12)
        throw GeometryError("flow vanishes at the section base; increase d");
    if (x_base.dot(n) < 0.0) n = -n;
    sec.normal = n;

    // Sampled transversality over a 3x3 chart grid.
    for (double gx : {-1.0, 0.0, 1.0})
        for (double gy : {-1.0, 0.0, 1.0}) {
            const Vec3 p = sec.to_world(gx, gy);
            if (std::abs(sys.field(p).dot(sec.normal)) < 1e-6)
                throw GeometryError(
                    "flow tangent to the section at a chart point; try a smaller d");
        }
    return sec;
}

CrossSection refine(const CrossSection& section, double delta_new) {
    if (!(delta_new > 0.0) || delta_new > section.half_width + kGeomEps)
        throw GeometryError("refinement half-width must be in (0, delta]");
    CrossSection out = section;
    out.half_width = delta_new;
    return out;
}

CrossSection make_plane_section(const Vec3& base, const Vec3& u, const Vec3& v,
                                double half_width, double half_height,
                                const FlowSystem& sys) {
    CrossSection sec;
    sec.base = base;
    sec.u = u.normalized();
    sec.v = (v - v.dot(sec.u) * sec.u).normalized();
    Vec3 n = sec.u.cross(sec.v);
    const Vec3 xb = sys.field(base);
    if (xb.norm() > 1e-12 && xb.dot(n) < 0.0) n = -n;
    sec.normal = n;
    sec.half_width = half_width;
    sec.half_height = half_height;
    return sec;
}

namespace {

struct CaptureBall {
    Vec3 center;
    double radius;
};

double bisect_crossing(const DenseStep& step, const CrossSection& sec,
                       double time_tol) {
    double a = step.t0;
    double b = step.t1();
    auto w = [&](double t) { return (step.eval3(t) - sec.base).dot(sec.normal); };
    for (int i = 0; i < 200 && std::abs(b - a) > time_tol; ++i) {
        const double m = 0.5 * (a + b);
        if (w(m) < 0.0)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

}  // namespace

ReturnSample return_map_sample(const FlowSystem& sys,
                               const std::vector<CrossSection>& sections,
                               int section, double s, double y,
                               const ReturnMapOptions& opts) {
    if (section < 0 || section >= static_cast<int>(sections.size()))
        throw InvalidInputError("section index out of range");
    if (std::abs(s) > 1.0 + kGeomEps || std::abs(y) > 1.0 + kGeomEps)
        throw InvalidInputError("chart point outside [-1,1]^2");

    ReturnSample out;
    out.source_section = section;
    out.s_in = s;
    out.y_in = y;

    const auto& src = sections[static_cast<size_t>(section)];
    if (src.owner >= 0 && std::abs(s) <= 1e-9) {
        out.outcome = ReturnOutcome::directed_to_sigma;
        return out;
    }

    std::vector<CaptureBall> balls;
    for (const auto& sec : sections)
        if (sec.owner >= 0)
            balls.push_back({sec.sigma, opts.capture_radius_rel * sec.d});

    const Vec3 p0 = src.to_world(s, y);
    FlowSystem drv = sys;
    drv.cfg.max_step = std::min(drv.cfg.max_step, opts.max_step);

    const size_t n_sec = sections.size();
    std::vector<double> w_prev(n_sec);
    std::vector<char> armed(n_sec);
    for (size_t j = 0; j < n_sec; ++j) {
        w_prev[j] = (p0 - sections[j].base).dot(sections[j].normal);
        armed[j] = std::abs(w_prev[j]) > 1e-9;
    }

    bool done = false;
    FlatRhs rhs = [&drv](double, const double* yy, double* dy) {
        const Vec3 v = drv.field(Vec3(yy[0], yy[1], yy[2]));
        dy[0] = v[0];
        dy[1] = v[1];
        dy[2] = v[2];
    };
    auto on_step = [&](const DenseStep& step, const double* yend) -> bool {
        const Vec3 pe(yend[0], yend[1], yend[2]);
        for (const auto& ball : balls)
            if ((pe - ball.center).norm() < ball.radius) {
                out.outcome = ReturnOutcome::directed_to_sigma;
                out.return_time = step.t1();
                done = true;
                return false;
            }

        // Earliest valid positive-direction crossing within this step wins.
        int best = -1;
        double best_t = 0.0;
        for (size_t j = 0; j < n_sec; ++j) {
            const auto& sec = sections[j];
            const double w1 = (pe - sec.base).dot(sec.normal);
            if (!armed[j]) {
                if (std::abs(w1) > 1e-9) armed[j] = true;
                w_prev[j] = w1;
                continue;
            }
            if (w_prev[j] < 0.0 && w1 >= 0.0) {
                const double tc = bisect_crossing(step, sec, opts.crossing_time_tol);
                const Vec3 pc = step.eval3(tc);
                const Vec3 chart = sec.from_world(pc);
                const double speed = drv.field(pc).dot(sec.normal);
                if (sec.contains_chart(chart[0], chart[1]) &&
                    speed >= opts.min_normal_speed &&
                    (best < 0 || tc < best_t)) {
                    best = static_cast<int>(j);
                    best_t = tc;
                }
            }
            w_prev[j] = w1;
        }
        if (best >= 0) {
            const auto& sec = sections[static_cast<size_t>(best)];
            const Vec3 pc = step.eval3(best_t);
            const Vec3 chart = sec.from_world(pc);
            out.outcome = ReturnOutcome::hit;
            out.target_section = best;
            out.s_out = chart[0];
            out.y_out = chart[1];
            out.return_time = best_t;
            out.world_out = pc;
            done = true;
            return false;
        }
        return true;
    };

    const double y0[3] = {p0[0], p0[1], p0[2]};
    std::vector<double> yend;
    double t_reached = 0.0;
    const auto status =
        dopri5_drive(rhs, 3, 0.0, std::span<const double>(y0, 3), opts.t_max,
                     drv.cfg, on_step, yend, &t_reached);
    if (done) return out;

    if (status == IntegrationStatus::stalled) {
        const Vec3 pe(yend[0], yend[1], yend[2]);
        for (const auto& ball : balls)
            if ((pe - ball.center).norm() < 10.0 * ball.radius) {
                out.outcome = ReturnOutcome::directed_to_sigma;
                out.return_time = t_reached;
                return out;
            }
        out.outcome = ReturnOutcome::stalled;
        out.return_time = t_reached;
        return out;
    }
    out.outcome = ReturnOutcome::escape;
    out.return_time = t_reached;
    return out;
}

namespace {

ReturnGrid make_return_grid_shell(const std::vector<CrossSection>& sections,
                                  int n_s, int n_y) {
    if (n_s < 2 || n_y < 1) throw InvalidInputError("return grid too small");
    ReturnGrid grid;
    grid.s_values.resize(static_cast<size_t>(n_s));
    for (int i = 0; i < n_s; ++i)
        grid.s_values[static_cast<size_t>(i)] = -1.0 + 2.0 * i / (n_s - 1);
    grid.y_values.resize(static_cast<size_t>(n_y));
    for (int i = 0; i < n_y; ++i)
        grid.y_values[static_cast<size_t>(i)] =
            n_y == 1 ? 0.0 : -0.9 + 1.8 * i / (n_y - 1);
    grid.samples.assign(sections.size(),
                        std::vector<ReturnSample>(
                            static_cast<size_t>(n_s) * static_cast<size_t>(n_y)));
    return grid;
}

}  // namespace

ReturnGrid sample_return_grid_serial(const FlowSystem& sys,
                                     const std::vector<CrossSection>& sections,
                                     int n_s, int n_y,
                                     const ReturnMapOptions& opts) {
    ReturnGrid grid = make_return_grid_shell(sections, n_s, n_y);
    for (size_t sec = 0; sec < sections.size(); ++sec)
        for (int is = 0; is < n_s; ++is)
            for (int iy = 0; iy < n_y; ++iy)
                grid.samples[sec][static_cast<size_t>(is * n_y + iy)] =
                    return_map_sample(sys, sections, static_cast<int>(sec),
                                      grid.s_values[static_cast<size_t>(is)],
                                      grid.y_values[static_cast<size_t>(iy)],
                                      opts);
    return grid;
}

ReturnGrid sample_return_grid(const FlowSystem& sys,
                              const std::vector<CrossSection>& sections,
                              int n_s, int n_y, const ReturnMapOptions& opts) {
    configure_threads();
    ReturnGrid grid = make_return_grid_shell(sections, n_s, n_y);
    const long total =
        static_cast<long>(sections.size()) * n_s * n_y;
#pragma omp parallel for schedule(dynamic, 4)
    for (long idx = 0; idx < total; ++idx) {
        const long per_sec = static_cast<long>(n_s) * n_y;
        const int sec = static_cast<int>(idx / per_sec);
        const int is = static_cast<int>((idx % per_sec) / n_y);
        const int iy = static_cast<int>(idx % n_y);
        grid.samples[static_cast<size_t>(sec)][static_cast<size_t>(is * n_y + iy)] =
            return_map_sample(sys, sections, sec,
                              grid.s_values[static_cast<size_t>(is)],
                              grid.y_values[static_cast<size_t>(iy)], opts);
    }
    return grid;
}

namespace {

struct ColumnFit {
    bool valid = false;
    bool any_hit = false;
    int target = -1;
    double s_out = 0.0;
    double y_intercept = 0.0;
    double y_slope = 0.0;
    double spread = 0.0;
};

ColumnFit fit_column(const ReturnGrid& grid, size_t sec, int is) {
    ColumnFit fit;
    const int n_y = static_cast<int>(grid.y_values.size());
    std::vector<const ReturnSample*> hits;
    for (int iy = 0; iy < n_y; ++iy) {
        const auto& smp = grid.samples[sec][static_cast<size_t>(is * n_y + iy)];
        if (smp.outcome == ReturnOutcome::hit) hits.push_back(&smp);
    }
    if (hits.empty()) return fit;
    fit.any_hit = true;
    fit.target = hits.front()->target_section;
    for (const auto* h : hits)
        if (h->target_section != fit.target) return fit;  // mixed targets
    if (hits.size() != static_cast<size_t>(n_y)) return fit;  // domain gap

    double lo = hits.front()->s_out, hi = lo;
    double sum = 0.0;
    for (const auto* h : hits) {
        lo = std::min(lo, h->s_out);
        hi = std::max(hi, h->s_out);
        sum += h->s_out;
    }
    fit.spread = hi - lo;
    fit.s_out = sum / static_cast<double>(hits.size());

    // Least-squares linear fit of the vertical action y_out ~ a + b*y_in.
    double sy = 0.0, syy = 0.0, so = 0.0, syo = 0.0;
    for (const auto* h : hits) {
        sy += h->y_in;
        syy += h->y_in * h->y_in;
        so += h->y_out;
        syo += h->y_in * h->y_out;
    }
    const double n = static_cast<double>(hits.size());
    const double det = n * syy - sy * sy;
    if (std::abs(det) > 1e-12) {
        fit.y_slope = (n * syo - sy * so) / det;
        fit.y_intercept = (so - fit.y_slope * sy) / n;
    } else {
        fit.y_intercept = so / n;
    }
    fit.valid = true;
    return fit;
}

TriangularMap extract_from_grid(const ReturnGrid& grid, int components,
                                const ExtractionOptions& opts,
                                ExtractionReport* report) {
    const int n_s = static_cast<int>(grid.s_values.size());
    ExtractionReport rep;
    rep.components = components;
    rep.detected_discontinuities.resize(static_cast<size_t>(components));

    for (size_t sec = 0; sec < grid.samples.size(); ++sec)
        for (const auto& smp : grid.samples[sec]) switch (smp.outcome) {
                case ReturnOutcome::hit: ++rep.hits; break;
                case ReturnOutcome::escape: ++rep.escapes; break;
                case ReturnOutcome::directed_to_sigma: ++rep.directed; break;
                case ReturnOutcome::stalled: ++rep.stalled; break;
            }

    // Column fits and the foliation (y-independence) test.
    std::vector<std::vector<ColumnFit>> cols(static_cast<size_t>(components));
    long valid_cols = 0;
    for (int sec = 0; sec < components; ++sec) {
        cols[static_cast<size_t>(sec)].resize(static_cast<size_t>(n_s));
        for (int is = 0; is < n_s; ++is) {
            auto fit = fit_column(grid, static_cast<size_t>(sec), is);
            rep.max_y_deviation = std::max(rep.max_y_deviation, fit.spread);
            if (fit.valid && fit.spread > opts.tau_fol) {
                if (report) *report = rep;
                throw NotTriangularError(
                    "image leaf depends on the vertical coordinate beyond tau_fol",
                    fit.spread);
            }
            if (fit.valid) ++valid_cols;
            cols[static_cast<size_t>(sec)][static_cast<size_t>(is)] = fit;
        }
    }
    rep.coverage_fraction =
        static_cast<double>(valid_cols) / (static_cast<double>(components) * n_s);

    // Discontinuity detection between adjacent valid columns.
    for (int sec = 0; sec < components; ++sec) {
        auto& cc = cols[static_cast<size_t>(sec)];
        for (int is = 0; is + 1 < n_s; ++is) {
            const auto& a = cc[static_cast<size_t>(is)];
            const auto& b = cc[static_cast<size_t>(is + 1)];
            if (!a.valid || !b.valid) continue;
            if (a.target != b.target ||
                std::abs(a.s_out - b.s_out) > opts.jump_threshold)
                rep.detected_discontinuities[static_cast<size_t>(sec)].push_back(
                    0.5 * (grid.s_values[static_cast<size_t>(is)] +
                           grid.s_values[static_cast<size_t>(is + 1)]));
        }
    }

    TriangularMap map;
    map.complex = SquareComplex(components);
    map.name = "extracted";
    map.discontinuities = rep.detected_discontinuities;
    map.kinks.assign(static_cast<size_t>(components), {});
    map.params["grid_s"] = n_s;
    map.params["grid_y"] = static_cast<double>(grid.y_values.size());

    struct Shared {
        std::vector<std::vector<ColumnFit>> cols;
        std::vector<double> s_values;
        std::vector<std::vector<double>> discs;
    };
    auto shared = std::make_shared<Shared>();
    shared->cols = std::move(cols);
    shared->s_values = grid.s_values;
    shared->discs = rep.detected_discontinuities;

    // Interpolated column lookup: the covering valid pair without a detected
    // discontinuity between, else nullopt.
    auto lookup = [shared](int comp, double s)
        -> std::optional<std::tuple<int, double, double, double>> {
        const auto& cc = shared->cols[static_cast<size_t>(comp)];
        const auto& sv = shared->s_values;
        const int n = static_cast<int>(sv.size());
        if (s < sv.front() - kGeomEps || s > sv.back() + kGeomEps)
            return std::nullopt;
        int i = static_cast<int>((s - sv.front()) / (sv[1] - sv[0]));
        i = std::clamp(i, 0, n - 2);
        while (i > 0 && s < sv[static_cast<size_t>(i)]) --i;
        while (i < n - 2 && s > sv[static_cast<size_t>(i + 1)]) ++i;
        const auto& a = cc[static_cast<size_t>(i)];
        const auto& b = cc[static_cast<size_t>(i + 1)];
        if (!a.valid || !b.valid) {
            // Exact grid hits on a valid column are still usable.
            if (a.valid && std::abs(s - sv[static_cast<size_t>(i)]) <= kGeomEps)
                return std::make_tuple(a.target, a.s_out, a.y_intercept, a.y_slope);
            if (b.valid && std::abs(s - sv[static_cast<size_t>(i + 1)]) <= kGeomEps)
                return std::make_tuple(b.target, b.s_out, b.y_intercept, b.y_slope);
            return std::nullopt;
        }
        for (double d : shared->discs[static_cast<size_t>(comp)])
            if (d > sv[static_cast<size_t>(i)] - kGeomEps &&
                d < sv[static_cast<size_t>(i + 1)] + kGeomEps) {
                // Inside a jump cell: pin to the nearer column.
                const auto& c =
                    s <= d ? a : b;
                const double sc = s <= d ? sv[static_cast<size_t>(i)]
                                         : sv[static_cast<size_t>(i + 1)];
                if (std::abs(s - sc) <= kGeomEps)
                    return std::make_tuple(c.target, c.s_out, c.y_intercept,
                                           c.y_slope);
                return std::nullopt;
            }
        const double u = (s - sv[static_cast<size_t>(i)]) /
                         (sv[static_cast<size_t>(i + 1)] - sv[static_cast<size_t>(i)]);
        return std::make_tuple(a.target, a.s_out + (b.s_out - a.s_out) * u,
                               a.y_intercept + (b.y_intercept - a.y_intercept) * u,
                               a.y_slope + (b.y_slope - a.y_slope) * u);
    };

    map.leaf_in_domain = [lookup](const Leaf& l) {
        return lookup(l.component, l.s).has_value();
    };
    map.leaf_map = [lookup](const Leaf& l) -> std::optional<Leaf> {
        const auto r = lookup(l.component, l.s);
        if (!r) return std::nullopt;
        return Leaf{std::get<0>(*r), std::get<1>(*r)};
    };
    map.eval = [lookup](const Point& p) -> std::optional<Point> {
        const auto r = lookup(p.component, p.x);
        if (!r) return std::nullopt;
        return Point{std::get<0>(*r), std::get<1>(*r),
                     std::get<2>(*r) + std::get<3>(*r) * p.y};
    };

    // Expansion/contraction metadata measured from the fitted columns.
    double min_slope = std::numeric_limits<double>::infinity();
    double max_contr = 0.0;
    long interior_cols = 0, interior_valid = 0;
    for (int sec = 0; sec < components; ++sec) {
        const auto& cc = shared->cols[static_cast<size_t>(sec)];
        for (int is = 0; is + 1 < n_s; ++is) {
            const auto& a = cc[static_cast<size_t>(is)];
            const auto& b = cc[static_cast<size_t>(is + 1)];
            const double s0 = shared->s_values[static_cast<size_t>(is)];
            const double s1 = shared->s_values[static_cast<size_t>(is + 1)];
            bool disc_between = false;
            for (double d : shared->discs[static_cast<size_t>(sec)])
                if (d > s0 - kGeomEps && d < s1 + kGeomEps) disc_between = true;
            if (a.valid && b.valid && !disc_between) {
                min_slope =
                    std::min(min_slope, std::abs((b.s_out - a.s_out) / (s1 - s0)));
            }
            if (a.valid) max_contr = std::max(max_contr, std::abs(a.y_slope));
        }
        const double ds = shared->s_values[1] - shared->s_values[0];
        for (int is = 0; is < n_s; ++is) {
            const double s = shared->s_values[static_cast<size_t>(is)];
            if (std::abs(s) > 2.0 * ds) {
                ++interior_cols;
                if (cc[static_cast<size_t>(is)].valid) ++interior_valid;
            }
        }
    }
    if (std::isfinite(min_slope) && min_slope > 0.0) {
        map.declared_lambda = min_slope * std::cos(map.cone.alpha) -
                              max_contr * std::sin(map.cone.alpha);
        if (map.declared_lambda <= 0.0) map.declared_lambda = min_slope;
    }
    if (max_contr > 0.0) map.declared_contraction = max_contr;
    map.large_domain = interior_cols > 0 && interior_valid == interior_cols;

    if (report) *report = rep;
    return map;
}

}  // namespace

TriangularMap extract_triangular_map(const ReturnSampler& sampler,
                                     int components,
                                     const ExtractionOptions& opts,
                                     ExtractionReport* report) {
    std::vector<CrossSection> dummy(static_cast<size_t>(components));
    ReturnGrid grid = make_return_grid_shell(dummy, opts.grid_s, opts.grid_y);
    for (int sec = 0; sec < components; ++sec)
        for (int is = 0; is < opts.grid_s; ++is)
            for (int iy = 0; iy < opts.grid_y; ++iy)
                grid.samples[static_cast<size_t>(sec)]
                            [static_cast<size_t>(is * opts.grid_y + iy)] =
                    sampler(sec, grid.s_values[static_cast<size_t>(is)],
                            grid.y_values[static_cast<size_t>(iy)]);
    return extract_from_grid(grid, components, opts, report);
}

TriangularMap extract_triangular_map(const FlowSystem& sys,
                                     const std::vector<CrossSection>& sections,
                                     const ExtractionOptions& opts,
                                     ExtractionReport* report) {
    if (sections.empty()) throw InvalidInputError("no sections given");
    const ReturnGrid grid = sample_return_grid(sys, sections, opts.grid_s,
                                               opts.grid_y, opts.return_opts);
    TriangularMap map = extract_from_grid(
        grid, static_cast<int>(sections.size()), opts, report);
    for (size_t i = 0; i < sections.size(); ++i)
        map.complex.components[i].section_index = static_cast<int>(i);
    return map;
}

namespace {

bool within_distance(const std::vector<Vec3>& pts, const Vec3& p, double U) {
    // Quick pass over a coarse subsample; full scan only when it misses.
    const size_t stride = std::max<size_t>(1, pts.size() / 2000);
    for (size_t i = 0; i < pts.size(); i += stride)
        if ((pts[i] - p).norm() <= U) return true;
    for (const auto& q : pts)
        if ((q - p).norm() <= U) return true;
    return false;
}

struct ProbeOutcome {
    bool escaped = false;
    bool inconclusive = false;
};

ProbeOutcome probe_one(const FlowSystem& sys, const std::vector<Vec3>& pts,
                       double U, double V, double T, std::uint64_t seed,
                       long index) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const Vec3 base = pts[rng() % pts.size()];
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    if (dir.norm() < 1e-12) dir = Vec3::UnitX();
    dir.normalize();
    const double r = V * std::cbrt(unif(rng));
    const Vec3 p0 = base + r * dir;

    ProbeOutcome out;
    double next_check = 0.0;
    FlatRhs rhs = [&sys](double, const double* yy, double* dy) {
        const Vec3 v = sys.field(Vec3(yy[0], yy[1], yy[2]));
        dy[0] = v[0];
        dy[1] = v[1];
        dy[2] = v[2];
    };
    auto cb = [&](const DenseStep& step, const double* yend) -> bool {
        if (step.t1() < next_check) return true;
        next_check = step.t1() + 0.1;
        const Vec3 pe(yend[0], yend[1], yend[2]);
        if (!pe.allFinite() || !within_distance(pts, pe, U)) {
            out.escaped = true;
            return false;
        }
        return true;
    };
    const double y0[3] = {p0[0], p0[1], p0[2]};
    std::vector<double> yend;
    const auto status = dopri5_drive(rhs, 3, 0.0, std::span<const double>(y0, 3),
                                     T, sys.cfg, cb, yend);
    if (!out.escaped && status != IntegrationStatus::ok) out.inconclusive = true;
    return out;
}

EscapeReport reduce_probe(long samples, long escaped, long inconclusive,
                          double T, std::uint64_t seed) {
    EscapeReport rep;
    rep.total = samples;
    rep.escaped = escaped;
    rep.inconclusive = inconclusive;
    rep.horizon = T;
    rep.seed = seed;
    const long counted = samples - inconclusive;
    rep.escape_fraction =
        counted > 0 ? static_cast<double>(escaped) / counted : 0.0;
    return rep;
}

}  // namespace

EscapeReport lyapunov_stability_probe_serial(const FlowSystem& sys,
                                             const std::vector<Vec3>& set_points,
                                             double U, double V, long samples,
                                             double T, std::uint64_t seed) {
    if (set_points.empty()) throw InvalidInputError("empty invariant-set sample");
    if (!(V <= U)) throw InvalidInputError("probe requires V <= U");
    long escaped = 0, inconclusive = 0;
    for (long i = 0; i < samples; ++i) {
        const auto o = probe_one(sys, set_points, U, V, T, seed, i);
        if (o.escaped) ++escaped;
        if (o.inconclusive) ++inconclusive;
    }
    return reduce_probe(samples, escaped, inconclusive, T, seed);
}

EscapeReport lyapunov_stability_probe(const FlowSystem& sys,
                                      const std::vector<Vec3>& set_points,
                                      double U, double V, long samples,
                                      double T, std::uint64_t seed) {
    if (set_points.empty()) throw InvalidInputError("empty invariant-set sample");
    if (!(V <= U)) throw InvalidInputError("probe requires V <= U");
    configure_threads();
    long escaped = 0, inconclusive = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : escaped, inconclusive)
    for (long i = 0; i < samples; ++i) {
        const auto o = probe_one(sys, set_points, U, V, T, seed, i);
        if (o.escaped) ++escaped;
        if (o.inconclusive) ++inconclusive;
    }
    return reduce_probe(samples, escaped, inconclusive, T, seed);
}

std::vector<Vec3> sample_attractor(const FlowSystem& sys, const Vec3& p0,
                                   double transient, double duration,
                                   double stride_dt) {
    const Trajectory warm = integrate(sys, p0, transient);
    std::vector<Vec3> pts;
    pts.reserve(static_cast<size_t>(duration / stride_dt) + 2);
    double next = 0.0;
    FlatRhs rhs = [&sys](double, const double* yy, double* dy) {
        const Vec3 v = sys.field(Vec3(yy[0], yy[1], yy[2]));
        dy[0] = v[0];
        dy[1] = v[1];
        dy[2] = v[2];
    };
    const Vec3 start = warm.endpoint();
    const double y0[3] = {start[0], start[1], start[2]};
    std::vector<double> yend;
    dopri5_drive(
        rhs, 3, 0.0, std::span<const double>(y0, 3), duration, sys.cfg,
        [&](const DenseStep& step, const double* yend_) {
            if (step.t1() >= next) {
                pts.emplace_back(yend_[0], yend_[1], yend_[2]);
                next = step.t1() + stride_dt;
            }
            return true;
        },
        yend);
    return pts;
}

}  // namespace orbitforge

#include "orbitforge/models.hpp"

#include <cmath>

namespace orbitforge {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
// Leaves this close to a declared L_0 count as the singular leaf itself.
constexpr double kLeafZeroEps = 1e-13;

double sign_of(double s) { return s >= 0.0 ? 1.0 : -1.0; }

}  // namespace

FlowSystem lorenz_field(const LorenzParams& params) {
    if (!(params.sigma > 0.0) || !(params.rho > 0.0) || !(params.beta > 0.0))
        throw InvalidInputError("Lorenz parameters must be positive");
    FlowSystem sys;
    const double s = params.sigma, r = params.rho, b = params.beta;
    sys.field = [s, r, b](const Vec3& p) {
        return Vec3(s * (p[1] - p[0]), r * p[0] - p[1] - p[0] * p[2],
                    p[0] * p[1] - b * p[2]);
    };
    sys.jacobian = [s, r, b](const Vec3& p) {
        Mat3 j;
        j << -s, s, 0.0,
             r - p[2], -1.0, -p[0],
             p[1], p[0], -b;
        return j;
    };
    return sys;
}

FlowSystem linear_field(const Mat3& a) {
    FlowSystem sys;
    sys.field = [a](const Vec3& p) { return Vec3(a * p); };
    sys.jacobian = [a](const Vec3&) { return a; };
    return sys;
}

FlowSystem cherry_saddle_field(double lambda_plus, double contraction) {
    if (!(lambda_plus > 0.0) || !(contraction > 0.0))
        throw InvalidInputError("cherry saddle rates must be positive");
    Mat3 a = Mat3::Zero();
    a(0, 0) = lambda_plus;
    a(1, 1) = -lambda_plus;
    a(2, 2) = -contraction;
    return linear_field(a);
}

GeoLorenzModel geo_lorenz(double mu, double rho) {
    if (!(mu > kSqrt2) || !(mu <= 2.0))
        throw InvalidInputError("geo-lorenz slope must satisfy sqrt(2) < mu <= 2");
    if (!(rho > 0.0) || !(rho <= 0.5))
        throw InvalidInputError("geo-lorenz contraction must satisfy 0 < rho <= 1/2");

    GeoLorenzModel model;
    model.mu = mu;
    model.rho = rho;

    TriangularMap& m = model.map;
    m.complex = SquareComplex(1);
    m.name = "geo-lorenz";
    m.params = {{"mu", mu}, {"rho", rho}};
    m.discontinuities = {{0.0}};
    m.kinks = {{}};
    m.large_domain = true;
    m.cone = ConeField(0.35);
    m.declared_lambda = mu * std::cos(m.cone.alpha) - rho * std::sin(m.cone.alpha);
    m.declared_contraction = rho;

    const double off = (1.0 - rho) / 2.0;
    auto f = [mu](double s) { return sign_of(s) * (mu * std::abs(s) - 1.0); };
    auto in_dom = [](double s) {
        return std::abs(s) <= 1.0 + kGeomEps && std::abs(s) > kLeafZeroEps;
    };
    m.leaf_in_domain = [in_dom](const Leaf& l) {
        return l.component == 0 && in_dom(l.s);
    };
    m.leaf_map = [f, in_dom](const Leaf& l) -> std::optional<Leaf> {
        if (l.component != 0 || !in_dom(l.s)) return std::nullopt;
        return Leaf{0, f(l.s)};
    };
    m.eval = [f, in_dom, rho, off](const Point& p) -> std::optional<Point> {
        if (p.component != 0 || !in_dom(p.x) || std::abs(p.y) > 1.0 + kGeomEps)
            return std::nullopt;
        return Point{0, f(p.x), rho * p.y + sign_of(p.x) * off};
    };
    m.leaf_derivative = [mu, in_dom](const Leaf& l) -> std::optional<double> {
        if (!in_dom(l.s)) return std::nullopt;
        return mu;  // both branches are affine with slope mu
    };
    m.jacobian = [mu, rho, in_dom](const Point& p) -> std::optional<Jac2> {
        if (!in_dom(p.x)) return std::nullopt;
        return Jac2{mu, 0.0, 0.0, rho};
    };
    return model;
}

AppendixComposite appendix_composite(double mu_t) {
    if (!(mu_t > kSqrt2) || !(mu_t <= 2.0))
        throw InvalidInputError("appendix slope must satisfy sqrt(2) < mu_t <= 2");

    AppendixComposite comp;
    comp.mu_t = mu_t;

    TriangularMap& m = comp.map;
    m.complex = SquareComplex(2);
    m.complex.components[0].label = "t";
    m.complex.components[1].label = "b";
    m.name = "appendix";
    m.params = {{"mu_t", mu_t}, {"rho_t", 0.3}};
    m.discontinuities = {{0.0}, {0.0}};
    m.kinks = {{}, {}};
    m.large_domain = false;  // Sigma^b_+ is outside Dom(F)
    m.cone = ConeField(0.35);
    m.declared_lambda = 1.2;
    const double rho_t = 0.3;
    const double off_t = (1.0 - rho_t) / 2.0;

    auto ft = [mu_t](double s) { return sign_of(s) * (mu_t * std::abs(s) - 1.0); };
    auto in_top = [](double s) {
        return std::abs(s) <= 1.0 + kGeomEps && std::abs(s) > kLeafZeroEps;
    };
    auto in_bot = [](double s) {
        return s >= -1.0 - kGeomEps && s < -kLeafZeroEps;
    };

    m.leaf_in_domain = [in_top, in_bot](const Leaf& l) {
        if (l.component == 0) return in_top(l.s);
        if (l.component == 1) return in_bot(l.s);
        return false;
    };
    m.leaf_map = [ft, in_top, in_bot](const Leaf& l) -> std::optional<Leaf> {
        if (l.component == 0 && in_top(l.s)) return Leaf{0, ft(l.s)};
        if (l.component == 1 && in_bot(l.s)) return Leaf{1, l.s};
        return std::nullopt;
    };
    m.eval = [ft, in_top, in_bot, rho_t, off_t](const Point& p) -> std::optional<Point> {
        if (std::abs(p.y) > 1.0 + kGeomEps) return std::nullopt;
        if (p.component == 0 && in_top(p.x))
            return Point{0, ft(p.x), rho_t * p.y + sign_of(p.x) * off_t};
        if (p.component == 1 && in_bot(p.x)) return p;  // f^b_- = id
        return std::nullopt;
    };
    m.leaf_derivative = [mu_t, in_top, in_bot](const Leaf& l) -> std::optional<double> {
        if (l.component == 0 && in_top(l.s)) return mu_t;
        if (l.component == 1 && in_bot(l.s)) return 1.0;
        return std::nullopt;
    };
    m.jacobian = [mu_t, rho_t, in_top, in_bot](const Point& p) -> std::optional<Jac2> {
        if (p.component == 0 && in_top(p.x)) return Jac2{mu_t, 0.0, 0.0, rho_t};
        if (p.component == 1 && in_bot(p.x)) return Jac2{1.0, 0.0, 0.0, 1.0};
        return std::nullopt;
    };
    return comp;
}

TriangularMap AppendixComposite::top_restriction() const {
    TriangularMap t = restrict_component(map, 0, true);
    return t;
}

TriangularMap AppendixComposite::bottom_restriction() const {
    return restrict_component(map, 1, false);
}

std::vector<long> preimage_tree_counts(double mu_t, double root,
                                       int max_depth) {
    if (max_depth < 0) throw InvalidInputError("negative preimage depth");
    std::vector<long> counts{1};
    std::vector<double> level{root};
    for (int d = 1; d <= max_depth; ++d) {
        std::vector<double> next;
        next.reserve(level.size() * 2);
        for (double y : level) {
            const double sp = (y + 1.0) / mu_t;  // positive branch preimage
            if (sp > kLeafZeroEps && sp <= 1.0) next.push_back(sp);
            const double sm = (y - 1.0) / mu_t;  // negative branch preimage
            if (sm >= -1.0 && sm < -kLeafZeroEps) next.push_back(sm);
        }
        counts.push_back(static_cast<long>(next.size()));
        level = std::move(next);
    }
    return counts;
}

TriangularMap tent_fixture() {
    TriangularMap m;
    m.complex = SquareComplex(1);
    m.name = "tent";
    m.params = {{"slope", 2.0}, {"rho", 1.0 / 3.0}};
    m.discontinuities = {{}};
    m.kinks = {{0.0}};
    m.large_domain = true;  // Dom(F) is all of Sigma
    m.cone = ConeField(0.35);
    m.declared_lambda = 2.0 * std::cos(0.35) - std::sin(0.35) / 3.0;
    m.declared_contraction = 1.0 / 3.0;

    auto f = [](double s) { return 1.0 - 2.0 * std::abs(s); };
    auto in_dom = [](double s) { return std::abs(s) <= 1.0 + kGeomEps; };
    m.leaf_in_domain = [in_dom](const Leaf& l) {
        return l.component == 0 && in_dom(l.s);
    };
    m.leaf_map = [f, in_dom](const Leaf& l) -> std::optional<Leaf> {
        if (l.component != 0 || !in_dom(l.s)) return std::nullopt;
        return Leaf{0, f(l.s)};
    };
    m.eval = [f, in_dom](const Point& p) -> std::optional<Point> {
        if (p.component != 0 || !in_dom(p.x) || std::abs(p.y) > 1.0 + kGeomEps)
            return std::nullopt;
        return Point{0, f(p.x), p.y / 3.0};
    };
    m.leaf_derivative = [in_dom](const Leaf& l) -> std::optional<double> {
        if (!in_dom(l.s) || std::abs(l.s) <= kLeafZeroEps) return std::nullopt;
        return l.s > 0.0 ? -2.0 : 2.0;
    };
    m.jacobian = [in_dom](const Point& p) -> std::optional<Jac2> {
        if (!in_dom(p.x) || std::abs(p.x) <= kLeafZeroEps) return std::nullopt;
        return Jac2{p.x > 0.0 ? -2.0 : 2.0, 0.0, 0.0, 1.0 / 3.0};
    };
    return m;
}

TriangularMap identity_triangular_map(int k) {
    TriangularMap m;
    m.complex = SquareComplex(k);
    m.name = "identity";
    m.discontinuities.assign(static_cast<size_t>(k), {});
    m.kinks.assign(static_cast<size_t>(k), {});
    m.large_domain = true;
    m.cone = ConeField(0.35);
    m.declared_lambda = 1.1;
    m.declared_contraction = 1.0;
    const int kk = k;
    m.leaf_in_domain = [kk](const Leaf& l) {
        return l.component >= 0 && l.component < kk && std::abs(l.s) <= 1.0 + kGeomEps;
    };
    m.leaf_map = [kk](const Leaf& l) -> std::optional<Leaf> {
        if (l.component < 0 || l.component >= kk || std::abs(l.s) > 1.0 + kGeomEps)
            return std::nullopt;
        return l;
    };
    m.eval = [kk](const Point& p) -> std::optional<Point> {
        if (p.component < 0 || p.component >= kk || std::abs(p.x) > 1.0 + kGeomEps ||
            std::abs(p.y) > 1.0 + kGeomEps)
            return std::nullopt;
        return p;
    };
    m.leaf_derivative = [](const Leaf&) -> std::optional<double> { return 1.0; };
    m.jacobian = [](const Point&) -> std::optional<Jac2> {
        return Jac2{1.0, 0.0, 0.0, 1.0};
    };
    return m;
}

}  // namespace orbitforge

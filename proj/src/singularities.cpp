#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "orbitforge/sections.hpp"

namespace orbitforge {

const char* to_string(SingularityClass c) {
    switch (c) {
        case SingularityClass::lorenz_like: return "lorenz_like";
        case SingularityClass::two_positive: return "two_positive";
        case SingularityClass::other_hyperbolic: return "other_hyperbolic";
        case SingularityClass::nonhyperbolic: return "nonhyperbolic";
    }
    return "unknown";
}

namespace {

std::optional<Vec3> newton_root(const FlowSystem& sys, Vec3 p) {
    for (int it = 0; it < 60; ++it) {
        const Vec3 f = sys.field(p);
        const Mat3 j = sys.jacobian_at(p);
        const Eigen::FullPivLU<Mat3> lu(j);
        if (!lu.isInvertible()) return std::nullopt;
        const Vec3 dp = lu.solve(f);
        p -= dp;
        if (!p.allFinite()) return std::nullopt;
        if (dp.norm() <= 1e-13 * std::max(1.0, p.norm()) &&
            sys.field(p).norm() <= 1e-10 * std::max(1.0, p.norm()))
            return p;
    }
    const double scale = std::max(1.0, p.norm());
    if (sys.field(p).norm() <= 1e-10 * scale) return p;
    return std::nullopt;
}

}  // namespace

SingularityInfo classify_equilibrium(const FlowSystem& sys, const Vec3& sigma) {
    SingularityInfo info;
    info.location = sigma;

    const Mat3 j = sys.jacobian_at(sigma);
    const Eigen::EigenSolver<Mat3> es(j);
    std::array<int, 3> order{0, 1, 2};
    const auto ev = es.eigenvalues();
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return ev[a].real() < ev[b].real(); });
    for (int i = 0; i < 3; ++i) info.eigenvalues[static_cast<size_t>(i)] = ev[order[static_cast<size_t>(i)]];

    double scale = 0.0;
    for (const auto& l : info.eigenvalues) scale = std::max(scale, std::abs(l));
    scale = std::max(scale, 1e-30);

    const double im_tol = 1e-9 * scale;
    info.all_real = std::all_of(info.eigenvalues.begin(), info.eigenvalues.end(),
                                [&](const std::complex<double>& l) {
                                    return std::abs(l.imag()) <= im_tol;
                                });

    const bool hyperbolic =
        std::all_of(info.eigenvalues.begin(), info.eigenvalues.end(),
                    [&](const std::complex<double>& l) {
                        return std::abs(l.real()) > 1e-9 * scale;
                    });

    if (!hyperbolic) {
        info.classification = SingularityClass::nonhyperbolic;
    } else if (info.all_real) {
        const double l2 = info.eigenvalues[0].real();
        const double l3 = info.eigenvalues[1].real();
        const double l1 = info.eigenvalues[2].real();
        const bool lorenz = l2 < l3 && l3 < 0.0 && l1 > 0.0 && -l3 < l1;
        int positives = 0;
        for (const auto& l : info.eigenvalues)
            if (l.real() > 0.0) ++positives;
        if (lorenz)
            info.classification = SingularityClass::lorenz_like;
        else if (positives == 2)
            info.classification = SingularityClass::two_positive;
        else
            info.classification = SingularityClass::other_hyperbolic;
    } else {
        int positives = 0;
        for (const auto& l : info.eigenvalues)
            if (l.real() > 0.0) ++positives;
        info.classification = positives == 2 ? SingularityClass::two_positive
                                             : SingularityClass::other_hyperbolic;
    }

    if (info.all_real) {
        const auto vecs = es.eigenvectors();
        std::vector<Vec3> real_vecs;
        bool valid = true;
        for (int i = 0; i < 3 && valid; ++i) {
            const int src = order[static_cast<size_t>(i)];
            Vec3 v;
            for (int r = 0; r < 3; ++r) v[r] = vecs(r, src).real();
            const double n = v.norm();
            if (n < 1e-12) {
                valid = false;
                break;
            }
            v /= n;
            const double lam = info.eigenvalues[static_cast<size_t>(i)].real();
            if ((j * v - lam * v).norm() > 1e-6 * scale) valid = false;
            real_vecs.push_back(v);
        }
        if (valid) info.eigenvectors = std::move(real_vecs);
    }
    return info;
}

std::vector<SingularityInfo> find_and_classify_singularities(
    const FlowSystem& sys, const std::vector<Vec3>& seeds) {
    std::vector<SingularityInfo> out;
    for (const auto& seed : seeds) {
        if (!seed.allFinite()) throw InvalidInputError("non-finite seed");
        const auto root = newton_root(sys, seed);
        if (!root) continue;  // divergent seed, skip
        bool dup = false;
        for (const auto& s : out)
            if ((s.location - *root).norm() < 1e-6) dup = true;
        if (dup) continue;
        out.push_back(classify_equilibrium(sys, *root));
    }
    return out;
}

}  // namespace orbitforge

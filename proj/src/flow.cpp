#include "orbitforge/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orbitforge {

Mat3 FlowSystem::jacobian_at(const Vec3& p) const {
    if (jacobian) return jacobian(p);
    Mat3 j;
    for (int c = 0; c < 3; ++c) {
        const double h = 1e-7 * std::max(1.0, std::abs(p[c]));
        Vec3 pp = p, pm = p;
        pp[c] += h;
        pm[c] -= h;
        j.col(c) = (field(pp) - field(pm)) / (2.0 * h);
    }
    return j;
}

double jacobian_consistency(const FlowSystem& sys,
                            const std::vector<Vec3>& pts) {
    if (!sys.jacobian) return 0.0;
    FlowSystem fd = sys;
    fd.jacobian = nullptr;
    double worst = 0.0;
    for (const auto& p : pts) {
        const Mat3 a = sys.jacobian(p);
        const Mat3 b = fd.jacobian_at(p);
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
}

void DenseStep::eval(double t, double* out) const {
    const double theta = h != 0.0 ? (t - t0) / h : 0.0;
    const double theta1 = 1.0 - theta;
    for (int i = 0; i < dim(); ++i) {
        const size_t u = static_cast<size_t>(i);
        out[i] = r1[u] +
                 theta * (r2[u] + theta1 * (r3[u] + theta * (r4[u] + theta1 * r5[u])));
    }
}

Vec3 DenseStep::eval3(double t) const {
    const double theta = h != 0.0 ? (t - t0) / h : 0.0;
    const double theta1 = 1.0 - theta;
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        const size_t u = static_cast<size_t>(i);
        out[i] = r1[u] +
                 theta * (r2[u] + theta1 * (r3[u] + theta * (r4[u] + theta1 * r5[u])));
    }
    return out;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                 kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
// Dense-output weights (quartic interpolant).
constexpr double kD1 = -12715105075.0 / 11282082432.0;
constexpr double kD3 = 87487479700.0 / 32700410799.0;
constexpr double kD4 = -10690763975.0 / 1880347072.0;
constexpr double kD5 = 701980252875.0 / 199316789632.0;
constexpr double kD6 = -1453857185.0 / 822651844.0;
constexpr double kD7 = 69997945.0 / 29380423.0;

constexpr double kC2 = 0.2, kC3 = 0.3, kC4 = 0.8, kC5 = 8.0 / 9.0;

}  // namespace

IntegrationStatus dopri5_drive(const FlatRhs& rhs, int dim, double t0,
                               std::span<const double> y0, double t1,
                               const IntegratorConfig& cfg,
                               const StepCallback& cb,
                               std::vector<double>& y_end,
                               double* t_reached) {
    const size_t n = static_cast<size_t>(dim);
    std::vector<double> y(y0.begin(), y0.end());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    std::vector<double> ytmp(n), ynew(n);
    DenseStep step;
    step.r1.resize(n);
    step.r2.resize(n);
    step.r3.resize(n);
    step.r4.resize(n);
    step.r5.resize(n);

    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double t = t0;
    auto finish = [&](IntegrationStatus st) {
        y_end = y;
        if (t_reached) *t_reached = t;
        return st;
    };
    if (t1 == t0) return finish(IntegrationStatus::ok);

    const bool fixed = cfg.fixed_step > 0.0;
    double h_abs = fixed ? cfg.fixed_step
                         : std::min({cfg.init_step, cfg.max_step,
                                     std::abs(t1 - t0)});

    rhs(t, y.data(), k1.data());

    for (long it = 0; it < cfg.max_steps; ++it) {
        const double remaining = (t1 - t) * dir;
        if (remaining <= 1e-14 * std::max(1.0, std::abs(t1)))
            return finish(IntegrationStatus::ok);
        const double h_used_abs = std::min(h_abs, remaining);
        if (!fixed && h_used_abs < 1e-14 * std::max(1.0, std::abs(t)))
            return finish(IntegrationStatus::stalled);
        const double h = h_used_abs * dir;

        for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * kA21 * k1[i];
        rhs(t + kC2 * h, ytmp.data(), k2.data());
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
        rhs(t + kC3 * h, ytmp.data(), k3.data());
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
        rhs(t + kC4 * h, ytmp.data(), k4.data());
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] +
                                  kA54 * k4[i]);
        rhs(t + kC5 * h, ytmp.data(), k5.data());
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] +
                                  kA64 * k4[i] + kA65 * k5[i]);
        rhs(t + h, ytmp.data(), k6.data());
        for (size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] +
                                  kB5 * k5[i] + kB6 * k6[i]);
        rhs(t + h, ynew.data(), k7.data());

        if (!fixed) {
            double err2 = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] +
                                      kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
                const double sc =
                    cfg.abs_tol +
                    cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                err2 += (e / sc) * (e / sc);
            }
            const double err = std::sqrt(err2 / static_cast<double>(n));
            double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            factor = std::clamp(factor, 0.2, 5.0);
            const double h_next = std::min(h_used_abs * factor, cfg.max_step);
            if (err > 1.0) {
                h_abs = h_next;
                continue;  // reject, retry with the shrunk step
            }
            h_abs = h_next;
        }

        // Accepted: assemble dense output over [t, t + h].
        step.t0 = t;
        step.h = h;
        for (size_t i = 0; i < n; ++i) {
            const double ydiff = ynew[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            step.r1[i] = y[i];
            step.r2[i] = ydiff;
            step.r3[i] = bspl;
            step.r4[i] = ydiff - h * k7[i] - bspl;
            step.r5[i] = h * (kD1 * k1[i] + kD3 * k3[i] + kD4 * k4[i] +
                              kD5 * k5[i] + kD6 * k6[i] + kD7 * k7[i]);
        }

        t += h;
        y = ynew;
        k1 = k7;  // FSAL

        if (cb && !cb(step, y.data())) return finish(IntegrationStatus::ok);
    }
    return finish(IntegrationStatus::max_steps_exceeded);
}

Vec3 Trajectory::at(double time) const {
    if (steps.empty()) return y.empty() ? Vec3::Zero() : y.front();
    // Steps are monotone in t (forward or reversed); binary search.
    const bool fwd = steps.front().h >= 0.0;
    size_t lo = 0, hi = steps.size() - 1;
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        const double tend = steps[mid].t1();
        if (fwd ? (tend < time) : (tend > time))
            lo = mid + 1;
        else
            hi = mid;
    }
    return steps[lo].eval3(time);
}

Trajectory integrate(const FlowSystem& sys, const Vec3& p0, double duration) {
    Trajectory traj;
    traj.t.push_back(0.0);
    traj.y.push_back(p0);

    FlatRhs rhs = [&sys](double, const double* y, double* dy) {
        const Vec3 v = sys.field(Vec3(y[0], y[1], y[2]));
        dy[0] = v[0];
        dy[1] = v[1];
        dy[2] = v[2];
    };
    const double y0[3] = {p0[0], p0[1], p0[2]};
    std::vector<double> yend;
    double t_reached = 0.0;
    traj.status = dopri5_drive(
        rhs, 3, 0.0, std::span<const double>(y0, 3), duration, sys.cfg,
        [&traj](const DenseStep& s, const double* y) {
            traj.steps.push_back(s);
            traj.t.push_back(s.t1());
            traj.y.push_back(Vec3(y[0], y[1], y[2]));
            return true;
        },
        yend, &t_reached);
    traj.t_end = t_reached;
    return traj;
}

const Trajectory& require_ok(const Trajectory& traj) {
    if (traj.status == IntegrationStatus::stalled)
        throw IntegrationStallError("integrator step size underflow",
                                    traj.t_end);
    if (traj.status == IntegrationStatus::max_steps_exceeded)
        throw IntegrationStallError("integrator exceeded max step count",
                                    traj.t_end);
    return traj;
}

namespace {

FlatRhs variational_rhs(const FlowSystem& sys) {
    return [&sys](double, const double* y, double* dy) {
        const Vec3 p(y[0], y[1], y[2]);
        const Vec3 v = sys.field(p);
        const Mat3 j = sys.jacobian_at(p);
        dy[0] = v[0];
        dy[1] = v[1];
        dy[2] = v[2];
        // Columns of M stored contiguously after the state.
        for (int c = 0; c < 3; ++c) {
            const Vec3 m(y[3 + 3 * c], y[4 + 3 * c], y[5 + 3 * c]);
            const Vec3 jm = j * m;
            dy[3 + 3 * c] = jm[0];
            dy[4 + 3 * c] = jm[1];
            dy[5 + 3 * c] = jm[2];
        }
    };
}

void pack_state(const Vec3& p, const Mat3& m, double* out) {
    out[0] = p[0];
    out[1] = p[1];
    out[2] = p[2];
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) out[3 + 3 * c + r] = m(r, c);
}

void unpack_state(const double* in, Vec3& p, Mat3& m) {
    p = Vec3(in[0], in[1], in[2]);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) m(r, c) = in[3 + 3 * c + r];
}

}  // namespace

VariationalResult integrate_variational(const FlowSystem& sys, const Vec3& p0,
                                        double T) {
    double y0[12];
    pack_state(p0, Mat3::Identity(), y0);
    std::vector<double> yend;
    VariationalResult res;
    res.status = dopri5_drive(variational_rhs(sys), 12, 0.0,
                              std::span<const double>(y0, 12), T, sys.cfg,
                              nullptr, yend);
    unpack_state(yend.data(), res.y_end, res.dflow);
    return res;
}

RateReport estimate_splitting_rates(const FlowSystem& sys, const Vec3& p,
                                    double T) {
    if (!(T > 0.0)) throw InvalidInputError("rate horizon must be positive");
    RateReport rep;
    rep.horizon = T;

    const double seg = std::min(0.5, T);
    const int nseg = std::max(1, static_cast<int>(std::ceil(T / seg)));
    const FlatRhs rhs = variational_rhs(sys);

    Vec3 cur = p;
    Mat3 frame = Mat3::Identity();
    Eigen::Vector3d logsum = Eigen::Vector3d::Zero();
    double t = 0.0;
    for (int i = 0; i < nseg; ++i) {
        const double t_next = std::min(T, (i + 1) * T / nseg);
        double y0[12];
        pack_state(cur, frame, y0);
        std::vector<double> yend;
        const auto st = dopri5_drive(rhs, 12, t, std::span<const double>(y0, 12),
                                     t_next, sys.cfg, nullptr, yend);
        if (st != IntegrationStatus::ok) {
            rep.status = st;
            break;
        }
        Mat3 m;
        unpack_state(yend.data(), cur, m);
        const Eigen::HouseholderQR<Mat3> qr(m);
        Mat3 q = qr.householderQ();
        Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int c = 0; c < 3; ++c) {
            if (r(c, c) < 0.0) {
                r.row(c) = -r.row(c);
                q.col(c) = -q.col(c);
            }
            logsum[c] += std::log(std::max(r(c, c), 1e-300));
        }
        frame = q;
        t = t_next;
        ++rep.renormalizations;
    }
    const double span = t > 0.0 ? t : T;
    std::array<double, 3> exps{logsum[0] / span, logsum[1] / span,
                               logsum[2] / span};
    std::sort(exps.begin(), exps.end(), std::greater<double>());
    rep.exponents = exps;
    rep.contraction_exponent = exps[2];
    rep.volume_exponent = exps[0] + exps[1];
    rep.domination_gap = exps[1] - exps[2];
    return rep;
}

}  // namespace orbitforge

#pragma once

// 3-D flow layer: vector fields with Jacobians, an embedded adaptive
// Dormand-Prince 5(4) integrator with dense output, variational
// integration, and finite-time splitting-rate estimation.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "orbitforge/errors.hpp"

namespace orbitforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    double max_step = 1.0;
    double init_step = 1e-3;
    double fixed_step = 0.0;  // > 0 disables error control (order checks)
    long max_steps = 5'000'000;
};

struct FlowSystem {
    std::function<Vec3(const Vec3&)> field;
    std::function<Mat3(const Vec3&)> jacobian;  // empty: finite differences
    IntegratorConfig cfg;

    Mat3 jacobian_at(const Vec3& p) const;
};

// Max relative mismatch between the analytic and finite-difference Jacobian
// over the given points (consistency check, expected <= 1e-5).
double jacobian_consistency(const FlowSystem& sys,
                            const std::vector<Vec3>& pts);

// One accepted integrator step with its quartic dense-output polynomial.
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<double> r1, r2, r3, r4, r5;

    double t1() const { return t0 + h; }
    int dim() const { return static_cast<int>(r1.size()); }
    void eval(double t, double* out) const;
    Vec3 eval3(double t) const;
};

enum class IntegrationStatus { ok, stalled, max_steps_exceeded };

// Right-hand side in flat form. Callback returns false to stop the drive
// after the current accepted step (status stays ok).
using FlatRhs = std::function<void(double t, const double* y, double* dydt)>;
using StepCallback = std::function<bool(const DenseStep&, const double* y)>;

IntegrationStatus dopri5_drive(const FlatRhs& rhs, int dim, double t0,
                               std::span<const double> y0, double t1,
                               const IntegratorConfig& cfg,
                               const StepCallback& cb,
                               std::vector<double>& y_end,
                               double* t_reached = nullptr);

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec3> y;
    std::vector<DenseStep> steps;
    IntegrationStatus status = IntegrationStatus::ok;
    double t_end = 0.0;

    Vec3 at(double time) const;       // dense interpolation
    const Vec3& endpoint() const { return y.back(); }
};

// Integrate from t = 0 over the (possibly negative) duration.
Trajectory integrate(const FlowSystem& sys, const Vec3& p0, double duration);

// Throws IntegrationStallError / InvalidInputError on a failed trajectory.
const Trajectory& require_ok(const Trajectory& traj);

struct VariationalResult {
    Vec3 y_end;
    Mat3 dflow;  // DX_T at p0
    IntegrationStatus status = IntegrationStatus::ok;
};

// Integrates the flow together with its variational equation M' = DX(y) M.
VariationalResult integrate_variational(const FlowSystem& sys, const Vec3& p0,
                                        double T);

struct RateReport {
    std::array<double, 3> exponents{};  // descending
    double contraction_exponent = 0.0;  // smallest (stable surrogate)
    double volume_exponent = 0.0;       // sum of the two largest (central)
    double domination_gap = 0.0;        // middle minus smallest
    double horizon = 0.0;
    int renormalizations = 0;
    IntegrationStatus status = IntegrationStatus::ok;
};

// Finite-time exponents via variational integration with periodic QR
// renormalization (overflow-safe).
RateReport estimate_splitting_rates(const FlowSystem& sys, const Vec3& p,
                                    double T);

}  // namespace orbitforge

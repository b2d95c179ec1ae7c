#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "dsm/flow.hpp"

// Deterministic time integration of the flow ODEs with trajectory recording,
// termination criteria and a high-resolution reference oracle.

namespace dsm {

struct BallExitCriterion {
    double radius = 0.0;
    Vec center;
};

struct IntegratorConfig {
    enum class Method { Rk4Fixed, Rk45Adaptive };
    Method method = Method::Rk45Adaptive;
    double step = 0.01;       // fixed-step size for rk4
    double abs_tol = 1e-10;   // adaptive tolerances
    double rel_tol = 1e-8;
    double t_max = 10.0;
    double record_every = 0.0;  // 0: record every accepted step
    std::optional<double> residual_below;
    std::optional<BallExitCriterion> ball_exit;
};

enum class StopReason { Converged, Horizon, BallExit, StepFailure };

const char* stop_reason_name(StopReason r);

struct Sample {
    double t = 0.0;
    Vec x;
    double res_norm = 0.0;
    std::optional<double> err_norm;   // ||x - x_hat|| when known
    std::optional<double> eps;        // schedule value, regularized flows
    std::optional<double> b_norm;     // ||B(t)||, coupled flows
    std::optional<double> w_norm;     // ||F'(x) B - I||, coupled flows
    std::optional<double> bound_res;  // theorem bound columns, filled by theory
    std::optional<double> bound_err;
};

struct Trajectory {
    std::vector<Sample> samples;
    StopReason stop_reason = StopReason::Horizon;
    long step_count = 0;
};

Trajectory integrate_flow(const FlowField& f, const Vec& x0, const IntegratorConfig& cfg);

// Inverse-free coupled system; records additionally ||B(t)|| and ||W(t)||.
Trajectory integrate_coupled(const FlowField& f, const CoupledState& s0, const IntegratorConfig& cfg);

// High-resolution rk4 endpoint with step halving until two successive
// refinements agree to 1e-10.  Test infrastructure; independent of the
// adaptive path.
Vec reference_oracle(const FlowField& f, const Vec& x0, double t_end);

// CSV columns: t, res_norm, err_norm, eps, b_norm, w_norm, bound_res,
// bound_err; absent columns empty, 17 significant digits.
void write_csv(const Trajectory& traj, std::ostream& out);

}  // namespace dsm

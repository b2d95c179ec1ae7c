#include "dsm/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

namespace dsm {

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Converged: return "converged";
        case StopReason::Horizon: return "horizon";
        case StopReason::BallExit: return "ball_exit";
        case StopReason::StepFailure: return "step_failure";
    }
    return "unknown";
}

namespace {

using Rhs = std::function<Vec(double, const Vec&)>;

Vec rk4_step(const Rhs& rhs, double t, const Vec& y, double h) {
    const Vec k1 = rhs(t, y);
    const Vec k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
    const Vec k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
    const Vec k4 = rhs(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) pair.
struct Dopri45Result {
    Vec y5;
    double err;  // scaled error estimate; accept when <= 1
};

Dopri45Result dopri45_step(const Rhs& rhs, double t, const Vec& y, double h, double atol,
                           double rtol) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const Vec k1 = rhs(t, y);
    const Vec k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vec y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = rhs(t + h, y5);
    const Vec err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double sum = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
        const double r = err_vec(i) / sc;
        sum += r * r;
    }
    return {std::move(y5), std::sqrt(sum / static_cast<double>(y.size()))};
}

struct Recorder {
    const IntegratorConfig& cfg;
    std::function<Sample(double, const Vec&)> make_sample;
    std::function<double(const Vec&, const Vec&)> distance;  // domain-metric distance
    Trajectory traj;
    double next_record = 0.0;

    Recorder(const IntegratorConfig& c, std::function<Sample(double, const Vec&)> ms,
             std::function<double(const Vec&, const Vec&)> dist)
        : cfg(c), make_sample(std::move(ms)), distance(std::move(dist)) {}

    // Returns the stop reason if a termination criterion fired at this state.
    std::optional<StopReason> record(double t, const Vec& y, bool force) {
        Sample s = make_sample(t, y);
        const bool due = cfg.record_every <= 0.0 || t + 1e-12 >= next_record;
        if (due || force) {
            traj.samples.push_back(s);
            if (cfg.record_every > 0.0)
                while (next_record <= t + 1e-12) next_record += cfg.record_every;
        }
        if (cfg.residual_below && s.res_norm <= *cfg.residual_below) {
            if (!due && !force) traj.samples.push_back(s);
            return StopReason::Converged;
        }
        if (cfg.ball_exit) {
            const double d = distance(s.x, cfg.ball_exit->center);
            if (d > cfg.ball_exit->radius) {
                if (!due && !force) traj.samples.push_back(s);  // keep the first exit sample
                return StopReason::BallExit;
            }
        }
        return std::nullopt;
    }
};

Trajectory drive(const Rhs& rhs, const Vec& y0, const IntegratorConfig& cfg,
                 const std::function<Sample(double, const Vec&)>& make_sample,
                 const std::function<double(const Vec&, const Vec&)>& distance) {
    Recorder rec(cfg, make_sample, distance);
    double t = 0.0;
    Vec y = y0;

    if (auto stop = rec.record(t, y, true)) {
        rec.traj.stop_reason = *stop;
        return std::move(rec.traj);
    }

    if (cfg.method == IntegratorConfig::Method::Rk4Fixed) {
        if (!(cfg.step > 0.0)) throw std::invalid_argument("integrate: step must be positive");
        while (t < cfg.t_max - 1e-15) {
            const double h = std::min(cfg.step, cfg.t_max - t);
            y = rk4_step(rhs, t, y, h);
            t += h;
            ++rec.traj.step_count;
            if (auto stop = rec.record(t, y, t >= cfg.t_max - 1e-15)) {
                rec.traj.stop_reason = *stop;
                return std::move(rec.traj);
            }
        }
        rec.traj.stop_reason = StopReason::Horizon;
        return std::move(rec.traj);
    }

    // rk45 adaptive
    double h = std::min(0.01, cfg.t_max);
    while (t < cfg.t_max - 1e-15) {
        h = std::min(h, cfg.t_max - t);
        if (h < 1e-14) {
            rec.traj.stop_reason = StopReason::StepFailure;
            return std::move(rec.traj);
        }
        const Dopri45Result step = dopri45_step(rhs, t, y, h, cfg.abs_tol, cfg.rel_tol);
        if (step.err <= 1.0) {
            t += h;
            y = step.y5;
            ++rec.traj.step_count;
            if (auto stop = rec.record(t, y, t >= cfg.t_max - 1e-15)) {
                rec.traj.stop_reason = *stop;
                return std::move(rec.traj);
            }
        }
        const double factor =
            step.err > 0.0 ? 0.9 * std::pow(step.err, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
    }
    rec.traj.stop_reason = StopReason::Horizon;
    return std::move(rec.traj);
}

}  // namespace

Trajectory integrate_flow(const FlowField& f, const Vec& x0, const IntegratorConfig& cfg) {
    if (f.kind() == FlowKind::InverseFree)
        throw std::logic_error("integrate_flow: use integrate_coupled for the inverse_free kind");
    const Problem& p = f.problem();

    auto rhs = [&f](double t, const Vec& y) { return f.phi(y, t); };
    auto make_sample = [&](double t, const Vec& y) {
        Sample s;
        s.t = t;
        s.x = y;
        s.res_norm = p.residual_norm(y);
        if (p.known_solution) s.err_norm = p.domain_metric.norm(y - *p.known_solution);
        if (f.schedule()) s.eps = f.schedule()->eps(t);
        return s;
    };
    auto distance = [&p](const Vec& a, const Vec& b) { return p.domain_metric.norm(a - b); };
    return drive(rhs, x0, cfg, make_sample, distance);
}

Trajectory integrate_coupled(const FlowField& f, const CoupledState& s0,
                             const IntegratorConfig& cfg) {
    if (f.kind() != FlowKind::InverseFree)
        throw std::logic_error("integrate_coupled: flow must be inverse_free");
    const Problem& p = f.problem();
    const Eigen::Index n = p.n;

    // Coupled state flattened to length n + n^2: x first, then B columnwise.
    auto unflatten = [n](const Vec& y) {
        CoupledState s;
        s.x = y.head(n);
        s.B = Eigen::Map<const Mat>(y.data() + n, n, n);
        return s;
    };
    auto rhs = [&](double, const Vec& y) {
        const CoupledState s = unflatten(y);
        const CoupledState d = f.coupled_rhs(s);
        Vec out(n + n * n);
        out.head(n) = d.x;
        Eigen::Map<Mat>(out.data() + n, n, n) = d.B;
        return out;
    };
    auto make_sample = [&](double t, const Vec& y) {
        const CoupledState s = unflatten(y);
        Sample smp;
        smp.t = t;
        smp.x = s.x;
        smp.res_norm = p.residual_norm(s.x);
        if (p.known_solution) smp.err_norm = p.domain_metric.norm(s.x - *p.known_solution);
        smp.b_norm = LinearMap(s.B, p.codomain_metric, p.domain_metric).operator_norm();
        const Mat w = p.jacobian_matrix(s.x) * s.B - Mat::Identity(n, n);
        smp.w_norm = LinearMap(w, p.codomain_metric, p.codomain_metric).operator_norm();
        return smp;
    };

    Vec y0(n + n * n);
    y0.head(n) = s0.x;
    Eigen::Map<Mat>(y0.data() + n, n, n) = s0.B;
    auto distance = [&p, n](const Vec& a, const Vec& b) {
        return p.domain_metric.norm(a.head(n) - b.head(std::min<Eigen::Index>(n, b.size())));
    };
    return drive(rhs, y0, cfg, make_sample, distance);
}

Vec reference_oracle(const FlowField& f, const Vec& x0, double t_end) {
    auto rhs = [&f](double t, const Vec& y) { return f.phi(y, t); };
    auto run = [&](double h) {
        double t = 0.0;
        Vec y = x0;
        while (t < t_end - 1e-15) {
            const double step = std::min(h, t_end - t);
            y = rk4_step(rhs, t, y, step);
            t += step;
        }
        return y;
    };

    double h = 1e-4 * t_end;
    Vec prev = run(h);
    for (int i = 0; i < 6; ++i) {
        h *= 0.5;
        Vec next = run(h);
        if ((next - prev).lpNorm<Eigen::Infinity>() <= 1e-10) return next;
        prev = std::move(next);
    }
    throw std::runtime_error("reference_oracle: step halving did not converge to 1e-10");
}

namespace {

void write_cell(std::ostream& out, const std::optional<double>& v) {
    out << ',';
    if (v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", *v);
        out << buf;
    }
}

}  // namespace

void write_csv(const Trajectory& traj, std::ostream& out) {
    out << "t,res_norm,err_norm,eps,b_norm,w_norm,bound_res,bound_err\n";
    char buf[64];
    for (const Sample& s : traj.samples) {
        std::snprintf(buf, sizeof(buf), "%.17g", s.t);
        out << buf;
        write_cell(out, s.res_norm);
        write_cell(out, s.err_norm);
        write_cell(out, s.eps);
        write_cell(out, s.b_norm);
        write_cell(out, s.w_norm);
        write_cell(out, s.bound_res);
        write_cell(out, s.bound_err);
        out << '\n';
    }
}

}  // namespace dsm

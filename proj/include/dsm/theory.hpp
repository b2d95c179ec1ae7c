#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsm/integrate.hpp"
#include "dsm/problem.hpp"
#include "dsm/schedule.hpp"

// Constant estimation, theorem-precondition certificates, convergence-bound
// evaluators, the operator Gronwall bound, and decay-rate fitting.

namespace dsm {

struct EstimatedValue {
    double value = 0.0;
    bool analytic = false;            // true when taken from a problem hint
    std::optional<double> sampled;    // sampled consistency value when an
                                      // analytic hint overrides it
};

struct ConstantEstimates {
    EstimatedValue M1;      // sup ||F'(x)|| over the ball
    EstimatedValue M2;      // Lipschitz bound on F'
    EstimatedValue m1;      // ||[F'(x0)]^{-1}||
    EstimatedValue c;       // ||[F'(x)]^{-1}||^2 <= 1/c over the ball
    EstimatedValue CG;      // structural constant ||G - I|| <= CG ||x - x0||
    std::optional<double> kappa_min;  // integral-equation diagnostic
    std::optional<double> v_norm;     // min-norm solution of F'(x0) v = x_hat - x0
    Vec center;
    double radius = 0.0;
    int samples = 0;
    unsigned seed = 0;
    std::vector<std::string> notes;
};

enum class TheoremId { Lemma21, ModifiedNewton, InverseFree, Regularized, CorollaryNoise };

const char* theorem_name(TheoremId id);

struct Condition {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
    double slack() const { return rhs - lhs; }  // conditions are lhs <= rhs
};

enum class CertificateOutcome { Pass, Fail, DegeneratePass };

struct Certificate {
    TheoremId theorem = TheoremId::Lemma21;
    ConstantEstimates constants;
    std::map<std::string, double> derived;  // r, r_tilde, R, gamma, sigma, rho, c1, c2, ...
    std::vector<Condition> conditions;
    CertificateOutcome overall = CertificateOutcome::Fail;
    std::vector<std::string> notes;

    bool passed() const { return overall != CertificateOutcome::Fail; }
    const Condition* find(const std::string& name) const;
};

// Sup-type constants estimated on the ball U(radius, center) from a seeded
// low-discrepancy point set; analytic hints on the problem override the
// sampled values (both are kept).
ConstantEstimates estimate_constants(const Problem& p, const Vec& center, double radius,
                                     int samples, unsigned seed);

Certificate certify_modified_newton(const Problem& p, const Vec& x0, const ConstantEstimates& est);

// Iterates the ball radius R twice (constants on U(R, x0) define R).
Certificate certify_inverse_free(const Problem& p, const Vec& x0, const Mat& B0,
                                 ConstantEstimates est,
                                 const std::function<ConstantEstimates(double)>& reestimate = {});

Certificate certify_regularized(const Problem& p, const Vec& x0, const EpsilonSchedule& s,
                                const ConstantEstimates& est);

Certificate certify_noise(const Problem& p, const Vec& x0, const EpsilonSchedule& s,
                          const ConstantEstimates& est, double delta);

// Numeric evaluation of the operator Gronwall bound
//   e^{-I(t)} [ integral_0^t ||G(s)|| e^{I(s)} ds + v0 ],  I(s) = integral_0^s zeta.
// Adaptive Simpson quadrature, tolerance 1e-10.
double gronwall_bound(const std::function<double(double)>& zeta,
                      const std::function<double(double)>& g_norm, double v0_norm, double t);

struct BoundCheck {
    std::string name;
    double max_ratio = 0.0;  // observed / bound, max over samples
    double worst_time = 0.0;
    bool pass = false;
    std::string note;
};

struct BoundReport {
    std::vector<BoundCheck> checks;
    bool certified = true;  // false: bounds informational only
    std::vector<std::string> notes;
    bool all_pass() const;
};

// Per-sample evaluation of every bound the certificate asserts; ratio
// tolerance 1 + 1e-6 attributes small excesses to integration error.
// Also fills the bound_res / bound_err trajectory columns in place.
BoundReport check_bounds(Trajectory& traj, const Certificate& cert);

struct DecayFit {
    double rate = 0.0;       // lambda in C e^{-lambda t}
    double amplitude = 0.0;  // C
    double rms = 0.0;        // residual of the log-linear fit
    double t_begin = 0.0;
    double t_end = 0.0;
};

enum class TrajectoryColumn { Residual, Error, BNorm, WNorm };

// Log-linear least squares over the final half of the positive samples.
DecayFit fit_decay(const Trajectory& traj, TrajectoryColumn column);

// Minimum-norm solution v of F'(x0) v = x_hat - x0 in the domain metric;
// nullopt when the problem has no known solution.
std::optional<double> source_v_norm(const Problem& p, const Vec& x0);

std::string certificate_report(const Certificate& cert);
std::string bound_report_text(const BoundReport& rep);

}  // namespace dsm

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Regularization schedules eps(t): validity predicates, feasibility
// inequalities for exponential schedules, the rho radius and the noisy-data
// stopping time.

namespace dsm {

class EpsilonSchedule {
public:
    enum class Kind { Exponential, Rational };

    // eps(t) = a e^{-b t}
    static EpsilonSchedule exponential(double a, double b);
    // eps(t) = a / (1 + t)^p  (admissible beyond the paper's example)
    static EpsilonSchedule rational(double a, double p);

    Kind kind() const { return kind_; }
    double amplitude() const { return a_; }
    double rate() const { return b_; }  // b for exponential, p for rational

    double eps(double t) const;
    double deps(double t) const;

private:
    EpsilonSchedule(Kind kind, double a, double b);
    Kind kind_;
    double a_;
    double b_;
};

struct ScheduleProperty {
    std::string name;
    bool pass = false;
    std::string witness;  // failing sample, when any
};

struct ValidityReport {
    std::vector<ScheduleProperty> properties;
    bool all_pass() const;
};

// Checks: eps positive / strictly decreasing to zero; deps/eps nondecreasing
// (sampled at 100 points); eps(0) > |deps(0)|.
ValidityReport validate(const EpsilonSchedule& s);

struct FeasibilityReport {
    bool contraction_ok = false;  // sqrt(2 ||v|| M2) < 1
    bool inequality_ok = false;   // b + a CG sqrt(2||v||/M2) <= 1 - sqrt(2||v|| M2)
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - lhs
    bool degenerate = false;
    std::string note;
};

// Exponential-schedule feasibility of the exact condition, in the equivalent
// normalized form.
FeasibilityReport feasibility_exponential(double a, double b, double M2, double CG, double v_norm);

struct ConditionCheck {
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // lhs - rhs
    bool degenerate = false;
    std::string note;
};

// eps(0) - |deps(0)| >= [M2 + CG eps(0)] eps(0) sqrt(2 v_norm / M2)
ConditionCheck check_condition_36(const EpsilonSchedule& s, double M2, double CG, double v_norm);

// Noisy-data variant with the factor-2 right-hand side.
ConditionCheck check_condition_36d(const EpsilonSchedule& s, double M2, double CG, double v_norm);

// rho = (eps(0) - |deps(0)|) / (M2 + CG eps(0)); requires a valid schedule.
double rho(const EpsilonSchedule& s, double M2, double CG);

struct StoppingTime {
    double tau = 0.0;
    bool noise_dominates = false;  // sqrt(delta / v_norm) >= eps(0): stop at t = 0
};

// tau_delta with eps(tau_delta) = sqrt(delta / v_norm); closed form for
// exponential schedules, bisection for rational ones.
StoppingTime stopping_time(const EpsilonSchedule& s, double delta, double v_norm);

// Floor applied to M2 in the conditions above when a problem is linear; the
// conditions are formally vacuous there and the result is flagged degenerate.
inline constexpr double kM2Floor = 1e-14;

}  // namespace dsm

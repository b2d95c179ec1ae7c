#include "dsm/schedule.hpp"

#include <cmath>
#include <sstream>

namespace dsm {

EpsilonSchedule::EpsilonSchedule(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("EpsilonSchedule: parameters must be positive");
}

EpsilonSchedule EpsilonSchedule::exponential(double a, double b) {
    return EpsilonSchedule(Kind::Exponential, a, b);
}

EpsilonSchedule EpsilonSchedule::rational(double a, double p) {
    return EpsilonSchedule(Kind::Rational, a, p);
}

double EpsilonSchedule::eps(double t) const {
    if (kind_ == Kind::Exponential) return a_ * std::exp(-b_ * t);
    return a_ / std::pow(1.0 + t, b_);
}

double EpsilonSchedule::deps(double t) const {
    if (kind_ == Kind::Exponential) return -b_ * a_ * std::exp(-b_ * t);
    return -b_ * a_ / std::pow(1.0 + t, b_ + 1.0);
}

bool ValidityReport::all_pass() const {
    for (const auto& p : properties)
        if (!p.pass) return false;
    return true;
}

ValidityReport validate(const EpsilonSchedule& s) {
    ValidityReport rep;
    const int samples = 100;
    const double t_hi = 50.0;

    ScheduleProperty positive_decreasing{"eps positive, strictly decreasing to zero", true, ""};
    double prev = s.eps(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double t = t_hi * i / samples;
        const double e = s.eps(t);
        if (!(e > 0.0) || !(e < prev)) {
            positive_decreasing.pass = false;
            std::ostringstream os;
            os << "t=" << t << " eps=" << e;
            positive_decreasing.witness = os.str();
            break;
        }
        prev = e;
    }
    rep.properties.push_back(positive_decreasing);

    ScheduleProperty ratio_monotone{"deps/eps nondecreasing", true, ""};
    double prev_ratio = s.deps(0.0) / s.eps(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double t = t_hi * i / samples;
        const double r = s.deps(t) / s.eps(t);
        if (r < prev_ratio - 1e-12) {
            ratio_monotone.pass = false;
            std::ostringstream os;
            os << "t=" << t << " ratio=" << r << " < " << prev_ratio;
            ratio_monotone.witness = os.str();
            break;
        }
        prev_ratio = r;
    }
    rep.properties.push_back(ratio_monotone);

    ScheduleProperty initial{"eps(0) > |deps(0)|", s.eps(0.0) > std::abs(s.deps(0.0)), ""};
    if (!initial.pass) {
        std::ostringstream os;
        os << "eps(0)=" << s.eps(0.0) << " |deps(0)|=" << std::abs(s.deps(0.0));
        initial.witness = os.str();
    }
    rep.properties.push_back(initial);
    return rep;
}

FeasibilityReport feasibility_exponential(double a, double b, double M2, double CG, double v_norm) {
    FeasibilityReport rep;
    if (v_norm < 0.0) throw std::invalid_argument("feasibility_exponential: v_norm must be >= 0");
    if (M2 < kM2Floor) {
        rep.degenerate = true;
        rep.note = "degenerate: condition (M2 -> 0) trivially satisfiable";
        M2 = kM2Floor;
        if (v_norm == 0.0) {
            rep.contraction_ok = true;
            rep.inequality_ok = b <= 1.0;
            rep.lhs = b;
            rep.rhs = 1.0;
            rep.slack = rep.rhs - rep.lhs;
            return rep;
        }
    }
    const double root = std::sqrt(2.0 * v_norm * M2);
    rep.contraction_ok = root < 1.0;
    rep.lhs = b + a * CG * std::sqrt(2.0 * v_norm / M2);
    rep.rhs = 1.0 - root;
    rep.slack = rep.rhs - rep.lhs;
    rep.inequality_ok = rep.contraction_ok && rep.lhs <= rep.rhs;
    return rep;
}

namespace {

ConditionCheck condition_36_impl(const EpsilonSchedule& s, double M2, double CG, double v_norm,
                                 double rhs_factor) {
    ConditionCheck chk;
    if (M2 < kM2Floor) {
        chk.degenerate = true;
        chk.note = "M2-degenerate; condition formally vacuous";
        M2 = kM2Floor;
        if (v_norm == 0.0) {
            chk.lhs = s.eps(0.0) - std::abs(s.deps(0.0));
            chk.rhs = 0.0;
            chk.slack = chk.lhs;
            chk.pass = chk.lhs >= 0.0;
            return chk;
        }
    }
    const double e0 = s.eps(0.0);
    chk.lhs = e0 - std::abs(s.deps(0.0));
    chk.rhs = rhs_factor * (M2 + CG * e0) * e0 * std::sqrt(2.0 * v_norm / M2);
    chk.slack = chk.lhs - chk.rhs;
    chk.pass = chk.lhs >= chk.rhs;
    return chk;
}

}  // namespace

ConditionCheck check_condition_36(const EpsilonSchedule& s, double M2, double CG, double v_norm) {
    return condition_36_impl(s, M2, CG, v_norm, 1.0);
}

ConditionCheck check_condition_36d(const EpsilonSchedule& s, double M2, double CG, double v_norm) {
    // RHS is 2 [M2 + CG eps(0)] eps(0) sqrt(v/M2) = sqrt(2) times the (3.6) RHS.
    return condition_36_impl(s, M2, CG, v_norm, std::sqrt(2.0));
}

double rho(const EpsilonSchedule& s, double M2, double CG) {
    if (!validate(s).all_pass()) throw std::invalid_argument("rho: schedule fails validity checks");
    const double e0 = s.eps(0.0);
    return (e0 - std::abs(s.deps(0.0))) / (M2 + CG * e0);
}

StoppingTime stopping_time(const EpsilonSchedule& s, double delta, double v_norm) {
    if (!(delta > 0.0) || !(v_norm > 0.0))
        throw std::invalid_argument("stopping_time: delta and v_norm must be positive");
    const double target = std::sqrt(delta / v_norm);
    if (target >= s.eps(0.0)) return {0.0, true};

    if (s.kind() == EpsilonSchedule::Kind::Exponential) {
        // a e^{-b tau} = sqrt(delta / v)  =>  tau = ln(a sqrt(v/delta)) / b
        const double tau = std::log(s.amplitude() * std::sqrt(v_norm / delta)) / s.rate();
        return {tau, false};
    }

    // Rational kind: bisection on the strictly decreasing eps.
    double lo = 0.0, hi = 1.0;
    while (s.eps(hi) > target) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (s.eps(mid) > target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * (1.0 + hi)) break;
    }
    return {0.5 * (lo + hi), false};
}

}  // namespace dsm

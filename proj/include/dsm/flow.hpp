#pragma once

#include <memory>
#include <optional>

#include "dsm/hilbert.hpp"
#include "dsm/problem.hpp"
#include "dsm/schedule.hpp"

// Right-hand sides of the dynamical systems: the generic Phi-flow variants,
// the inverse-free coupled system and the regularized modified Newton flow.

namespace dsm {

enum class FlowKind {
    ModifiedNewton,
    Newton,
    SimpleIteration,
    Gradient,
    GaussNewton,
    RegularizedModifiedNewton,
    InverseFree,
};

const char* flow_kind_name(FlowKind k);
std::optional<FlowKind> flow_kind_from_name(const std::string& name);

struct CoupledState {
    Vec x;
    Mat B;
};

struct FlowOptions {
    std::optional<EpsilonSchedule> schedule;  // required for the regularized kind
    std::optional<Mat> B0;                    // inverse-free initial operator; zero map if absent
};

class FlowField {
public:
    // Builds the flow; the modified/regularized kinds capture the Jacobian at
    // x0 once here and never re-evaluate it.  The regularized kind checks
    // non-negativity of F'(x0) and, when violated, automatically routes
    // through symmetrize(p, x0) and records that it did.
    FlowField(FlowKind kind, Problem problem, Vec x0, FlowOptions opts = {});

    FlowKind kind() const { return kind_; }
    const Problem& problem() const { return problem_; }
    const Vec& anchor() const { return x0_; }
    const std::optional<EpsilonSchedule>& schedule() const { return schedule_; }
    const Mat& initial_B() const { return B0_; }
    bool symmetrized() const { return symmetrized_; }
    bool uncertified_B0() const { return uncertified_B0_; }
    const LinearMap& frozen_jacobian() const;

    // Phi(x, t); t is ignored by the autonomous kinds.
    Vec phi(const Vec& x, double t = 0.0) const;

    // (x_dot, B_dot) for the inverse-free system; performs no linear solves.
    CoupledState coupled_rhs(const CoupledState& s) const;

private:
    FlowKind kind_;
    Problem problem_;
    Vec x0_;
    std::optional<EpsilonSchedule> schedule_;
    Mat B0_;
    std::optional<LinearMap> frozen_;
    std::shared_ptr<Eigen::FullPivLU<Mat>> frozen_lu_;  // reused for eps = 0 solves
    bool symmetrized_ = false;
    bool uncertified_B0_ = false;
};

// Individual flow fields, as free functions over a constructed FlowField.
Vec phi_modified_newton(const Vec& x, const FlowField& f);
Vec phi_newton(const Vec& x, const FlowField& f);
Vec phi_simple(const Vec& x, const FlowField& f);
Vec phi_gradient(const Vec& x, const FlowField& f);
Vec phi_gauss_newton(const Vec& x, const FlowField& f);
Vec rhs_regularized(const Vec& x, double t, const FlowField& f);
CoupledState rhs_inverse_free(const CoupledState& s, const FlowField& f);

}  // namespace dsm

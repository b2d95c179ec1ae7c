#include "dsm/flow.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace dsm {

const char* flow_kind_name(FlowKind k) {
    switch (k) {
        case FlowKind::ModifiedNewton: return "modified_newton";
        case FlowKind::Newton: return "newton";
        case FlowKind::SimpleIteration: return "simple_iteration";
        case FlowKind::Gradient: return "gradient";
        case FlowKind::GaussNewton: return "gauss_newton";
        case FlowKind::RegularizedModifiedNewton: return "regularized_modified_newton";
        case FlowKind::InverseFree: return "inverse_free";
    }
    return "unknown";
}

std::optional<FlowKind> flow_kind_from_name(const std::string& name) {
    for (FlowKind k : {FlowKind::ModifiedNewton, FlowKind::Newton, FlowKind::SimpleIteration,
                       FlowKind::Gradient, FlowKind::GaussNewton,
                       FlowKind::RegularizedModifiedNewton, FlowKind::InverseFree})
        if (name == flow_kind_name(k)) return k;
    return std::nullopt;
}

namespace {

double min_symmetric_eigenvalue(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

FlowField::FlowField(FlowKind kind, Problem problem, Vec x0, FlowOptions opts)
    : kind_(kind), problem_(std::move(problem)), x0_(std::move(x0)),
      schedule_(std::move(opts.schedule)) {
    if (x0_.size() != problem_.n) throw DimensionMismatch("FlowField: x0 dimension mismatch");

    if (kind_ == FlowKind::RegularizedModifiedNewton) {
        if (!schedule_) throw std::invalid_argument("regularized flow requires an EpsilonSchedule");
        if (!validate(*schedule_).all_pass())
            throw std::invalid_argument("regularized flow requires a valid EpsilonSchedule");
        // Condition (3.4): (F'(x0) h, h) >= 0 in the domain inner product;
        // fall back to the auxiliary problem F'*(x0) F(x) = 0 when violated.
        Mat j0 = problem_.domain_metric.matrix() * problem_.jacobian_matrix(x0_);
        if (min_symmetric_eigenvalue(j0) < -1e-12) {
            problem_ = symmetrize(problem_, x0_);
            symmetrized_ = true;
        }
    }

    if (kind_ == FlowKind::ModifiedNewton || kind_ == FlowKind::RegularizedModifiedNewton) {
        frozen_ = problem_.jacobian(x0_);
        if (kind_ == FlowKind::ModifiedNewton) {
            Mat m = frozen_->matrix();
            auto lu = std::make_shared<Eigen::FullPivLU<Mat>>(m);
            const double pivot = lu->matrixLU().diagonal().cwiseAbs().minCoeff();
            if (!(pivot > 1e-14 * std::max(m.norm(), 1e-300)))
                throw SingularOperator("modified_newton frozen Jacobian");
            frozen_lu_ = std::move(lu);
        }
    }

    if (kind_ == FlowKind::InverseFree) {
        B0_ = opts.B0 ? *opts.B0 : Mat::Zero(problem_.n, problem_.n);
        if (B0_.rows() != problem_.n || B0_.cols() != problem_.n)
            throw DimensionMismatch("FlowField: B0 dimension mismatch");
        if (!opts.B0) uncertified_B0_ = true;  // gamma = 0 with the zero map
    }
}

const LinearMap& FlowField::frozen_jacobian() const {
    if (!frozen_) throw std::logic_error("flow has no frozen Jacobian");
    return *frozen_;
}

Vec phi_modified_newton(const Vec& x, const FlowField& f) {
    return f.phi(x, 0.0);
}

Vec phi_newton(const Vec& x, const FlowField& f) {
    return -solve_shifted(f.problem().jacobian(x), 0.0, f.problem().evaluate(x), "newton");
}

Vec phi_simple(const Vec& x, const FlowField& f) { return -f.problem().evaluate(x); }

Vec phi_gradient(const Vec& x, const FlowField& f) {
    const LinearMap j = f.problem().jacobian(x);
    return -(j.adjoint().matrix() * f.problem().evaluate(x));
}

Vec phi_gauss_newton(const Vec& x, const FlowField& f) {
    const LinearMap j = f.problem().jacobian(x);
    const Mat adj = j.adjoint().matrix();
    LinearMap normal(adj * j.matrix(), j.domain_metric(), j.domain_metric());
    return -solve_shifted(normal, 0.0, Vec(adj * f.problem().evaluate(x)), "gauss_newton");
}

Vec rhs_regularized(const Vec& x, double t, const FlowField& f) {
    const double eps = f.schedule()->eps(t);
    const Vec rhs = f.problem().evaluate(x) + eps * (x - f.anchor());
    return -solve_shifted(f.frozen_jacobian(), eps, rhs, "regularized_modified_newton");
}

CoupledState rhs_inverse_free(const CoupledState& s, const FlowField& f) {
    const Vec fx = f.problem().evaluate(s.x);
    const Mat j = f.problem().jacobian_matrix(s.x);
    const Mat adj = LinearMap(j, f.problem().domain_metric, f.problem().codomain_metric)
                        .adjoint()
                        .matrix();
    CoupledState d;
    d.x = -(s.B * fx);
    d.B = -(adj * (j * s.B)) + adj;
    return d;
}

Vec FlowField::phi(const Vec& x, double t) const {
    switch (kind_) {
        case FlowKind::ModifiedNewton: {
            const Vec fx = problem_.evaluate(x);
            return -frozen_lu_->solve(fx);
        }
        case FlowKind::Newton:
            return phi_newton(x, *this);
        case FlowKind::SimpleIteration:
            return phi_simple(x, *this);
        case FlowKind::Gradient:
            return phi_gradient(x, *this);
        case FlowKind::GaussNewton:
            return phi_gauss_newton(x, *this);
        case FlowKind::RegularizedModifiedNewton:
            return rhs_regularized(x, t, *this);
        case FlowKind::InverseFree:
            throw std::logic_error("inverse_free flow needs coupled_rhs, not phi");
    }
    throw std::logic_error("unreachable flow kind");
}

CoupledState FlowField::coupled_rhs(const CoupledState& s) const {
    if (kind_ != FlowKind::InverseFree)
        throw std::logic_error("coupled_rhs is only defined for the inverse_free kind");
    return rhs_inverse_free(s, *this);
}

}  // namespace dsm

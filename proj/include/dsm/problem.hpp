#pragma once

#include <functional>
#include <optional>
#include <string>

#include "dsm/hilbert.hpp"

// Concrete instances of F: H -> H with Jacobians, manufactured solutions,
// the first-kind integral equation, adjoint symmetrization and noisy data.

namespace dsm {

struct UnsupportedProblem : std::runtime_error {
    explicit UnsupportedProblem(const std::string& what) : std::runtime_error(what) {}
};

// Analytic constant bounds, valid on the ball they were stated for.
struct ConstantsHint {
    std::optional<double> M1;
    std::optional<double> M2;
    std::optional<double> CG;
    double ball_radius = 0.0;
};

struct Problem {
    Eigen::Index n = 0;
    std::string name;
    std::function<Vec(const Vec&)> residual;
    std::function<Mat(const Vec&)> jacobian_matrix;
    GramMetric domain_metric = GramMetric::identity(1);
    GramMetric codomain_metric = GramMetric::identity(1);
    std::optional<Vec> known_solution;
    std::optional<ConstantsHint> constants_hint;

    // Separable data term: F(x) = psi(x) - y.  Set for problems that support
    // perturb_data; rebuild produces the same problem with y replaced.
    std::optional<Vec> data;
    std::function<Problem(const Vec&)> rebuild_with_data;
    // Metric in which ||y - y_delta|| is measured; defaults to the codomain
    // metric.  Symmetrized problems keep the original data-space metric here.
    std::optional<GramMetric> data_metric;

    // Remark-3.3 diagnostic |g_u(s_i, x_i)| minimum, when the problem came
    // from an integral equation.
    std::function<double(const Vec&)> kappa_min;

    Vec evaluate(const Vec& x) const;
    LinearMap jacobian(const Vec& x) const;
    double residual_norm(const Vec& x) const;
};

struct IntegralEquationSpec {
    std::function<double(double, double)> kernel;        // k(t, s)
    std::function<double(double, double)> nonlinearity;  // g(s, u)
    std::function<double(double, double)> nonlinearity_du;  // g_u(s, u)
    Vec target;              // y on the quadrature nodes; empty -> zero
    Eigen::Index nodes = 0;  // n >= 3, uniform on [0,1], trapezoid rule
    enum class Metric { Identity, L2Trapezoid, H1 } domain_metric = Metric::Identity;
};

struct NoiseModel {
    double delta = 0.0;
    unsigned seed = 0;
};

// F(x) = A (x - shift), known solution = shift, M2 = 0.
Problem make_linear_problem(const LinearMap& matrix, const Vec& shift);

// Scalar F(x) = x + beta x^2 - y (y = 0 unless perturbed); known solution
// solves the quadratic, x_hat = 0 for y = 0.  Analytic hints M2 = 2 beta and
// CG = 2 beta / (1 + 2 beta x0) are attached for the given anchor x0.
Problem make_polynomial_problem(double beta, double x0_hint);

// Discretized first-kind integral equation F(x) = Q gvec(x) - y on uniform
// trapezoid nodes.
Problem build_integral_problem(const IntegralEquationSpec& spec);

// Auxiliary problem phi(x) = F'*(x0) F(x) with phi'(x) = F'*(x0) F'(x);
// the symmetric part of phi'(x0) is non-negative by construction.
Problem symmetrize(const Problem& p, const Vec& x0);

// Replaces the data vector y by a seeded perturbation y_delta with
// ||y - y_delta|| = delta exactly (codomain norm); clears known_solution.
Problem perturb_data(const Problem& p, const NoiseModel& nm);

// Trapezoid weights on n uniform nodes over [0,1].
Vec trapezoid_weights(Eigen::Index n);

}  // namespace dsm

#include "dsm/problem.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace dsm {

Vec Problem::evaluate(const Vec& x) const {
    if (x.size() != n) throw DimensionMismatch("Problem::evaluate: dimension mismatch");
    Vec r = residual(x);
    if (!r.allFinite()) throw std::runtime_error("Problem '" + name + "': non-finite residual");
    return r;
}

LinearMap Problem::jacobian(const Vec& x) const {
    if (x.size() != n) throw DimensionMismatch("Problem::jacobian: dimension mismatch");
    Mat j = jacobian_matrix(x);
    if (!j.allFinite()) throw std::runtime_error("Problem '" + name + "': non-finite Jacobian");
    return LinearMap(std::move(j), domain_metric, codomain_metric);
}

double Problem::residual_norm(const Vec& x) const { return codomain_metric.norm(evaluate(x)); }

Problem make_linear_problem(const LinearMap& matrix, const Vec& shift) {
    if (!matrix.square()) throw std::invalid_argument("make_linear_problem: matrix must be square");
    if (matrix.smallest_singular_value() <= 0.0)
        throw std::invalid_argument("make_linear_problem: matrix is singular");
    const Mat a = matrix.matrix();
    const Vec y = a * shift;  // F(x) = A x - y

    Problem p;
    p.n = a.rows();
    p.name = "linear";
    p.domain_metric = matrix.domain_metric();
    p.codomain_metric = matrix.codomain_metric();
    p.residual = [a, y](const Vec& x) -> Vec { return a * x - y; };
    p.jacobian_matrix = [a](const Vec&) -> Mat { return a; };
    p.known_solution = shift;
    p.constants_hint = ConstantsHint{std::nullopt, 0.0, std::nullopt,
                                     std::numeric_limits<double>::infinity()};
    p.data = y;
    p.rebuild_with_data = [matrix, a](const Vec& yd) {
        Problem q = make_linear_problem(matrix, Vec::Zero(a.rows()));
        q.residual = [a, yd](const Vec& x) -> Vec { return a * x - yd; };
        q.data = yd;
        q.known_solution.reset();
        return q;
    };
    return p;
}

Problem make_polynomial_problem(double beta, double x0_hint) {
    if (beta < 0.0) throw std::invalid_argument("make_polynomial_problem: beta must be >= 0");

    Problem p;
    p.n = 1;
    p.name = "polynomial";
    p.residual = [beta](const Vec& x) -> Vec {
        Vec r(1);
        r(0) = x(0) + beta * x(0) * x(0);
        return r;
    };
    p.jacobian_matrix = [beta](const Vec& x) -> Mat {
        Mat j(1, 1);
        j(0, 0) = 1.0 + 2.0 * beta * x(0);
        return j;
    };
    p.known_solution = Vec::Zero(1);
    ConstantsHint hint;
    hint.M2 = 2.0 * beta;
    const double fp0 = 1.0 + 2.0 * beta * x0_hint;
    if (fp0 > 0.0) hint.CG = 2.0 * beta / fp0;
    hint.ball_radius = std::numeric_limits<double>::infinity();
    p.constants_hint = hint;
    p.data = Vec::Zero(1);
    p.rebuild_with_data = [beta, x0_hint](const Vec& yd) {
        Problem q = make_polynomial_problem(beta, x0_hint);
        q.residual = [beta, yd](const Vec& x) -> Vec {
            Vec r(1);
            r(0) = x(0) + beta * x(0) * x(0) - yd(0);
            return r;
        };
        q.data = yd;
        q.known_solution.reset();
        return q;
    };
    return p;
}

Vec trapezoid_weights(Eigen::Index n) {
    const double h = 1.0 / static_cast<double>(n - 1);
    Vec w = Vec::Constant(n, h);
    w(0) = h / 2.0;
    w(n - 1) = h / 2.0;
    return w;
}

Problem build_integral_problem(const IntegralEquationSpec& spec) {
    const Eigen::Index n = spec.nodes;
    if (n < 3) throw std::invalid_argument("build_integral_problem: need n >= 3 nodes");

    const Vec w = trapezoid_weights(n);
    Vec nodes(n);
    for (Eigen::Index i = 0; i < n; ++i) nodes(i) = static_cast<double>(i) / static_cast<double>(n - 1);

    Mat q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double kij = spec.kernel(nodes(i), nodes(j));
            if (!std::isfinite(kij)) throw std::runtime_error("integral problem: non-finite kernel sample");
            q(i, j) = kij * w(j);
        }

    Vec y = spec.target.size() ? spec.target : Vec::Zero(n);
    if (y.size() != n) throw DimensionMismatch("integral problem: target dimension mismatch");

    auto g = spec.nonlinearity;
    auto gu = spec.nonlinearity_du;

    GramMetric dom = GramMetric::identity(n);
    GramMetric cod = GramMetric::identity(n);
    switch (spec.domain_metric) {
        case IntegralEquationSpec::Metric::Identity:
            break;
        case IntegralEquationSpec::Metric::L2Trapezoid:
            dom = GramMetric::diagonal(w);
            cod = GramMetric::diagonal(w);
            break;
        case IntegralEquationSpec::Metric::H1:
            dom = GramMetric::h1(n);
            cod = GramMetric::diagonal(w);
            break;
    }

    Problem p;
    p.n = n;
    p.name = "integral";
    p.domain_metric = dom;
    p.codomain_metric = cod;
    p.residual = [q, g, nodes, y](const Vec& x) -> Vec {
        Vec gv(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            gv(i) = g(nodes(i), x(i));
            if (!std::isfinite(gv(i)))
                throw std::runtime_error("integral problem: non-finite nonlinearity sample");
        }
        return q * gv - y;
    };
    p.jacobian_matrix = [q, gu, nodes](const Vec& x) -> Mat {
        Vec d(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) d(i) = gu(nodes(i), x(i));
        return q * d.asDiagonal();
    };
    p.kappa_min = [gu, nodes](const Vec& x) {
        double kmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < x.size(); ++i) kmin = std::min(kmin, std::abs(gu(nodes(i), x(i))));
        return kmin;
    };
    p.data = y;
    p.rebuild_with_data = [spec](const Vec& yd) {
        IntegralEquationSpec s2 = spec;
        s2.target = yd;
        Problem q2 = build_integral_problem(s2);
        q2.known_solution.reset();
        return q2;
    };
    return p;
}

Problem symmetrize(const Problem& p, const Vec& x0) {
    const LinearMap j0 = p.jacobian(x0);
    const LinearMap j0_adj = j0.adjoint();
    const Mat adj = j0_adj.matrix();

    Problem phi;
    phi.n = p.n;
    phi.name = p.name + "+symmetrized";
    phi.domain_metric = p.domain_metric;
    phi.codomain_metric = p.domain_metric;  // phi maps H into itself
    auto base_res = p.residual;
    auto base_jac = p.jacobian_matrix;
    phi.residual = [adj, base_res](const Vec& x) -> Vec { return adj * base_res(x); };
    phi.jacobian_matrix = [adj, base_jac](const Vec& x) -> Mat { return adj * base_jac(x); };
    phi.known_solution = p.known_solution;
    phi.kappa_min = p.kappa_min;
    if (p.constants_hint) {
        // ||phi'(x1) - phi'(x2)|| <= ||F'*(x0)|| M2 ||x1 - x2||; G is unchanged.
        ConstantsHint h = *p.constants_hint;
        if (h.M2) h.M2 = *h.M2 * j0_adj.operator_norm();
        h.M1.reset();
        phi.constants_hint = h;
    }
    if (p.data && p.rebuild_with_data) {
        phi.data = p.data;
        phi.data_metric = p.data_metric ? p.data_metric : std::optional<GramMetric>(p.codomain_metric);
        auto rebuild = p.rebuild_with_data;
        phi.rebuild_with_data = [rebuild, x0](const Vec& yd) { return symmetrize(rebuild(yd), x0); };
    }
    return phi;
}

Problem perturb_data(const Problem& p, const NoiseModel& nm) {
    if (!p.data || !p.rebuild_with_data)
        throw UnsupportedProblem("perturb_data: problem '" + p.name + "' has no separable data term");
    const Vec& y = *p.data;
    const GramMetric& dm = p.data_metric ? *p.data_metric : p.codomain_metric;
    Vec e = Vec::Zero(y.size());
    if (nm.delta > 0.0) {
        std::mt19937 rng(nm.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = gauss(rng);
        if (dm.norm(e) == 0.0) e(0) = 1.0;
        e *= nm.delta / dm.norm(e);
    }
    Problem q = p.rebuild_with_data(y + e);
    q.known_solution.reset();
    q.name = p.name + "+noise";
    return q;
}

}  // namespace dsm

#include <doctest.h>

#include <random>

#include "dsm/problem.hpp"

using namespace dsm;

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

// Central finite differences of the residual, the independent Jacobian check.
Mat fd_jacobian(const Problem& p, const Vec& x, double h = 1e-6) {
    Mat j(p.n, p.n);
    for (Eigen::Index k = 0; k < p.n; ++k) {
        Vec xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        j.col(k) = (p.evaluate(xp) - p.evaluate(xm)) / (2.0 * h);
    }
    return j;
}

void check_jacobian_agrees(const Problem& p, const Vec& center, double spread, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-spread, spread);
    for (int trial = 0; trial < 10; ++trial) {
        Vec x = center;
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += unif(rng);
        const Mat analytic = p.jacobian_matrix(x);
        const Mat fd = fd_jacobian(p, x);
        const double scale = std::max(analytic.norm(), 1e-8);
        CHECK((analytic - fd).norm() / scale <= 1e-5);
    }
}

IntegralEquationSpec smooth_spec(Eigen::Index n) {
    IntegralEquationSpec spec;
    spec.nodes = n;
    spec.kernel = [](double t, double s) { return std::exp(t * s); };
    spec.nonlinearity = [](double, double u) { return u + u * u * u / 3.0; };
    spec.nonlinearity_du = [](double, double u) { return 1.0 + u * u; };
    return spec;
}

Vec linear_nodes(Eigen::Index n, double scale) {
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = scale * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

}  // namespace

TEST_CASE("linear problem: residual, Jacobian, manufactured solution") {
    auto id1 = GramMetric::identity(1);
    Mat one(1, 1);
    one << 1;
    Problem p = make_linear_problem(LinearMap(one, id1, id1), scalar(0.0));
    CHECK(p.evaluate(scalar(1.0))(0) == doctest::Approx(1.0));
    CHECK(p.jacobian_matrix(scalar(1.0))(0, 0) == doctest::Approx(1.0));

    auto id2 = GramMetric::identity(2);
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 3;
    Vec shift(2);
    shift << 1, 1;
    Problem q = make_linear_problem(LinearMap(d, id2, id2), shift);
    CHECK(q.evaluate(shift).norm() == doctest::Approx(0.0));
    CHECK(q.residual_norm(*q.known_solution) <= 1e-10);
    CHECK(*q.constants_hint->M2 == doctest::Approx(0.0));
}

TEST_CASE("linear problem rejects singular matrix") {
    auto id = GramMetric::identity(2);
    CHECK_THROWS(make_linear_problem(LinearMap(Mat::Zero(2, 2), id, id), Vec::Zero(2)));
}

TEST_CASE("polynomial problem: values, hints, Jacobian check") {
    Problem p = make_polynomial_problem(1.0, 0.01);
    CHECK(p.evaluate(scalar(0.01))(0) == doctest::Approx(0.0101));
    CHECK(p.jacobian_matrix(scalar(0.01))(0, 0) == doctest::Approx(1.02));
    CHECK(*p.constants_hint->M2 == doctest::Approx(2.0));
    CHECK(*p.constants_hint->CG == doctest::Approx(2.0 / 1.02));
    CHECK(p.residual_norm(*p.known_solution) <= 1e-10);
    check_jacobian_agrees(p, scalar(0.0), 0.5, 3);

    Problem lin = make_polynomial_problem(0.0, 0.0);  // beta = 0 reduces to F(x) = x
    CHECK(lin.evaluate(scalar(2.0))(0) == doctest::Approx(2.0));
    CHECK(lin.jacobian_matrix(scalar(2.0))(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("integral problem: trapezoid weights and zero kernel") {
    Vec w = trapezoid_weights(5);
    CHECK(w.sum() == doctest::Approx(1.0));

    IntegralEquationSpec spec = smooth_spec(5);
    spec.kernel = [](double, double) { return 0.0; };
    Vec y(5);
    y << 1, 2, 3, 4, 5;
    spec.target = y;
    Problem p = build_integral_problem(spec);
    CHECK((p.evaluate(Vec::Ones(5)) + y).norm() == doctest::Approx(0.0));
}

TEST_CASE("integral problem: constant kernel with identity nonlinearity averages") {
    IntegralEquationSpec spec;
    spec.nodes = 9;
    spec.kernel = [](double, double) { return 1.0; };
    spec.nonlinearity = [](double, double u) { return u; };
    spec.nonlinearity_du = [](double, double) { return 1.0; };
    Problem p = build_integral_problem(spec);
    const double c = 3.7;
    Vec psi = p.evaluate(Vec::Constant(9, c));
    for (Eigen::Index i = 0; i < 9; ++i) CHECK(psi(i) == doctest::Approx(c));
}

TEST_CASE("integral problem: manufactured solution and Jacobian agreement") {
    IntegralEquationSpec spec = smooth_spec(21);
    Vec xhat = linear_nodes(21, 1.0);
    Problem base = build_integral_problem(spec);
    spec.target = base.evaluate(xhat);  // y = psi(x_hat)
    Problem p = build_integral_problem(spec);
    p.known_solution = xhat;
    CHECK(p.residual_norm(xhat) <= 1e-10);
    check_jacobian_agrees(p, xhat, 0.1, 5);
    CHECK(p.kappa_min(xhat) >= 1.0);  // g_u = 1 + u^2 >= 1
}

TEST_CASE("integral problem: quadrature converges at trapezoid order") {
    auto residual_error = [](Eigen::Index n) {
        IntegralEquationSpec spec = smooth_spec(n);
        Problem p = build_integral_problem(spec);
        // psi(x)(t) for x(s) = s against a fine-grid reference value at t = 0.
        Vec x = linear_nodes(n, 1.0);
        const double coarse = p.evaluate(x)(0);
        IntegralEquationSpec fine_spec = smooth_spec(2001);
        Problem fine = build_integral_problem(fine_spec);
        const double ref = fine.evaluate(linear_nodes(2001, 1.0))(0);
        return std::abs(coarse - ref);
    };
    const double e1 = residual_error(11);
    const double e2 = residual_error(21);
    CHECK(e2 < e1);
    CHECK(e1 / e2 > 3.0);  // halving h cuts the error by about 4
}

TEST_CASE("nonlinearity derivative matches finite differences") {
    IntegralEquationSpec spec = smooth_spec(5);
    for (double u : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
        const double fd =
            (spec.nonlinearity(0.5, u + 1e-6) - spec.nonlinearity(0.5, u - 1e-6)) / 2e-6;
        CHECK(spec.nonlinearity_du(0.5, u) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("symmetrize: scalar sign fix and PSD structure") {
    // F(x) = -x: phi(x) = F'*(x0) F(x) = (-1)(-x) = x, phi'(x0) = 1 >= 0.
    auto id = GramMetric::identity(1);
    Mat minus_one(1, 1);
    minus_one << -1;
    Problem p = make_linear_problem(LinearMap(minus_one, id, id), scalar(0.0));
    Problem phi = symmetrize(p, scalar(1.0));
    CHECK(phi.evaluate(scalar(2.0))(0) == doctest::Approx(2.0));
    CHECK(phi.jacobian_matrix(scalar(1.0))(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("symmetrize: linear map gives Gram matrix, solutions carry over") {
    auto id = GramMetric::identity(2);
    Mat a(2, 2);
    a << 1, 2, -1, 3;
    Vec shift(2);
    shift << 0.5, -0.25;
    Problem p = make_linear_problem(LinearMap(a, id, id), shift);
    Problem phi = symmetrize(p, Vec::Zero(2));
    const Mat expected = a.transpose() * a;
    CHECK((phi.jacobian_matrix(Vec::Zero(2)) - expected).norm() < 1e-12);
    // symmetric PSD
    Eigen::SelfAdjointEigenSolver<Mat> es(expected);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    // every solution of F carries over
    CHECK(phi.residual_norm(shift) <= 1e-10);
}

TEST_CASE("perturb_data: exact delta on the sphere, seeds differ") {
    Problem p = make_polynomial_problem(1.0, 0.01);
    Problem q0 = perturb_data(p, NoiseModel{0.0, 5});
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        Vec x = scalar(unif(rng));
        CHECK(q0.evaluate(x)(0) == doctest::Approx(p.evaluate(x)(0)));
    }

    Problem q1 = perturb_data(p, NoiseModel{0.1, 5});
    Problem q2 = perturb_data(p, NoiseModel{0.1, 6});
    CHECK_FALSE(q1.known_solution.has_value());
    for (int i = 0; i < 10; ++i) {
        Vec x = scalar(unif(rng));
        CHECK(std::abs(q1.evaluate(x)(0) - p.evaluate(x)(0)) == doctest::Approx(0.1));
    }
    // equal norms, scalar directions may or may not coincide; check the data shift
    CHECK(std::abs((*q1.data - *p.data)(0)) == doctest::Approx(0.1));
    CHECK(std::abs((*q2.data - *p.data)(0)) == doctest::Approx(0.1));
}

TEST_CASE("perturb_data on multidimensional data: norm exact, directions differ by seed") {
    IntegralEquationSpec spec = smooth_spec(11);
    Vec xhat = linear_nodes(11, 1.0);
    Problem base = build_integral_problem(spec);
    spec.target = base.evaluate(xhat);
    Problem p = build_integral_problem(spec);

    Problem q1 = perturb_data(p, NoiseModel{0.05, 1});
    Problem q2 = perturb_data(p, NoiseModel{0.05, 2});
    CHECK(p.codomain_metric.norm(*q1.data - *p.data) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(p.codomain_metric.norm(*q2.data - *p.data) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK((*q1.data - *q2.data).norm() > 1e-6);
}

TEST_CASE("perturb_data rejects problems without a separable data term") {
    Problem p;
    p.n = 1;
    p.name = "opaque";
    p.residual = [](const Vec& x) { return x; };
    p.jacobian_matrix = [](const Vec&) { return Mat::Identity(1, 1); };
    CHECK_THROWS_AS(perturb_data(p, NoiseModel{0.1, 0}), UnsupportedProblem);
}

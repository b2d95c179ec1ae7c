#include "dsm/hilbert.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace dsm {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw DimensionMismatch(what);
}

}  // namespace

GramMetric::GramMetric(Kind kind, Mat gram) : kind_(kind), dim_(gram.rows()), gram_(std::move(gram)) {
    require(gram_.rows() == gram_.cols() && gram_.rows() >= 1, "Gram matrix must be square, n >= 1");
    llt_.compute(gram_);
    if (llt_.info() != Eigen::Success)
        throw std::invalid_argument("Gram matrix is not positive definite");
    // LLT succeeds for semi-definite matrices in edge cases; check the
    // smallest eigenvalue explicitly.
    Eigen::SelfAdjointEigenSolver<Mat> es(gram_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("Gram matrix has non-positive eigenvalue");
    chol_lower_ = llt_.matrixL();
}

GramMetric GramMetric::identity(Eigen::Index n) {
    return GramMetric(Kind::Identity, Mat::Identity(n, n));
}

GramMetric GramMetric::diagonal(const Vec& weights) {
    return GramMetric(Kind::DiagonalWeights, Mat(weights.asDiagonal()));
}

GramMetric GramMetric::h1(Eigen::Index n) {
    require(n >= 2, "H1 metric needs n >= 2 nodes");
    const double h = 1.0 / static_cast<double>(n - 1);
    Mat g = Mat::Identity(n, n);
    // First-difference stiffness D^T D scaled by 1/h^2.
    const double w = 1.0 / (h * h);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        g(i, i) += w;
        g(i + 1, i + 1) += w;
        g(i, i + 1) -= w;
        g(i + 1, i) -= w;
    }
    return GramMetric(Kind::TridiagonalH1, std::move(g));
}

double GramMetric::inner(const Vec& u, const Vec& v) const {
    require(u.size() == dim_ && v.size() == dim_, "inner_product: dimension mismatch");
    if (is_identity()) return u.dot(v);
    return u.dot(gram_ * v);
}

double GramMetric::norm(const Vec& u) const {
    if (is_identity()) return u.norm();
    return std::sqrt(std::max(0.0, inner(u, u)));
}

Vec GramMetric::apply_inverse(const Vec& rhs) const { return llt_.solve(rhs); }
Mat GramMetric::apply_inverse(const Mat& rhs) const { return llt_.solve(rhs); }

LinearMap::LinearMap(Mat matrix, GramMetric domain_metric, GramMetric codomain_metric)
    : matrix_(std::move(matrix)), dom_(std::move(domain_metric)), cod_(std::move(codomain_metric)) {
    require(matrix_.cols() == dom_.dim(), "LinearMap: domain metric dimension mismatch");
    require(matrix_.rows() == cod_.dim(), "LinearMap: codomain metric dimension mismatch");
}

LinearMap LinearMap::identity(const GramMetric& m) {
    return LinearMap(Mat::Identity(m.dim(), m.dim()), m, m);
}

Vec LinearMap::apply(const Vec& h) const {
    require(h.size() == cols(), "LinearMap::apply: dimension mismatch");
    return matrix_ * h;
}

LinearMap LinearMap::adjoint() const {
    if (dom_.is_identity() && cod_.is_identity())
        return LinearMap(matrix_.transpose(), cod_, dom_);
    Mat at_gcod = matrix_.transpose() * cod_.matrix();
    return LinearMap(dom_.apply_inverse(at_gcod), cod_, dom_);
}

Mat LinearMap::weighted() const {
    Mat w = matrix_;
    if (!cod_.is_identity()) w = cod_.chol_lower().transpose() * w;
    if (!dom_.is_identity())
        w = dom_.chol_lower().transpose().triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(w);
    return w;
}

double LinearMap::operator_norm() const {
    Eigen::JacobiSVD<Mat> svd(weighted());
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double LinearMap::smallest_singular_value() const {
    Eigen::JacobiSVD<Mat> svd(weighted());
    const auto& sv = svd.singularValues();
    if (sv.size() < std::min(rows(), cols())) return 0.0;
    return sv(sv.size() - 1);
}

double inner_product(const Vec& u, const Vec& v, const GramMetric& m) { return m.inner(u, v); }
double norm(const Vec& u, const GramMetric& m) { return m.norm(u); }

namespace {

Mat solve_shifted_impl(const LinearMap& A, double eps, const Mat& rhs, const std::string& requester) {
    if (!A.square()) throw DimensionMismatch("solve_shifted: operator must be square");
    if (rhs.rows() != A.rows()) throw DimensionMismatch("solve_shifted: rhs dimension mismatch");
    Mat shifted = A.matrix();
    shifted.diagonal().array() += eps;
    Eigen::FullPivLU<Mat> lu(shifted);
    const double scale = shifted.norm();
    const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(pivot > 1e-14 * std::max(scale, 1e-300)))
        throw SingularOperator(requester);
    return lu.solve(rhs);
}

}  // namespace

Vec solve_shifted(const LinearMap& A, double eps, const Vec& rhs, const std::string& requester) {
    return solve_shifted_impl(A, eps, rhs, requester);
}

Mat solve_shifted(const LinearMap& A, double eps, const Mat& rhs, const std::string& requester) {
    return solve_shifted_impl(A, eps, rhs, requester);
}

}  // namespace dsm

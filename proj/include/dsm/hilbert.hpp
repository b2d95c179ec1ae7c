#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

// Finite-dimensional model of a real Hilbert space: vectors in R^n with a
// configurable Gram metric defining inner products, norms and adjoints.

namespace dsm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a linear solve hits a numerically singular operator.  Carries
// the name of the scheme that requested the solve.
struct SingularOperator : std::runtime_error {
    explicit SingularOperator(const std::string& requester)
        : std::runtime_error("singular operator encountered in " + requester),
          scheme(requester) {}
    std::string scheme;
};

class GramMetric {
public:
    enum class Kind { Identity, DiagonalWeights, TridiagonalH1 };

    static GramMetric identity(Eigen::Index n);
    static GramMetric diagonal(const Vec& weights);
    // Discrete H^1 on n uniform nodes over [0,1]: identity plus the
    // first-difference stiffness matrix scaled by 1/h^2, h = 1/(n-1).
    static GramMetric h1(Eigen::Index n);

    Kind kind() const { return kind_; }
    Eigen::Index dim() const { return dim_; }
    const Mat& matrix() const { return gram_; }
    bool is_identity() const { return kind_ == Kind::Identity; }

    double inner(const Vec& u, const Vec& v) const;
    double norm(const Vec& u) const;

    // Cholesky factor L with G = L L^T.
    const Mat& chol_lower() const { return chol_lower_; }
    // Solves G y = rhs.
    Vec apply_inverse(const Vec& rhs) const;
    Mat apply_inverse(const Mat& rhs) const;

private:
    GramMetric(Kind kind, Mat gram);

    Kind kind_;
    Eigen::Index dim_;
    Mat gram_;
    Mat chol_lower_;
    Eigen::LLT<Mat> llt_;
};

// Dense linear map between two metrized spaces.  Norms, singular values and
// adjoints are all taken in the metric-induced sense; identity metrics
// recover the plain matrix quantities.
class LinearMap {
public:
    LinearMap(Mat matrix, GramMetric domain_metric, GramMetric codomain_metric);

    static LinearMap identity(const GramMetric& m);

    const Mat& matrix() const { return matrix_; }
    const GramMetric& domain_metric() const { return dom_; }
    const GramMetric& codomain_metric() const { return cod_; }
    Eigen::Index rows() const { return matrix_.rows(); }
    Eigen::Index cols() const { return matrix_.cols(); }
    bool square() const { return rows() == cols(); }

    Vec apply(const Vec& h) const;

    // Gram-metric adjoint G_dom^{-1} A^T G_cod; transpose for identity metrics.
    LinearMap adjoint() const;

    // Metric-induced operator norm sup ||A h||_cod / ||h||_dom.
    double operator_norm() const;
    // Smallest singular value in the metric-induced norm; 0 for singular maps.
    double smallest_singular_value() const;

private:
    // The matrix L_cod^T A L_dom^{-T} whose plain singular values are the
    // metric-induced ones.
    Mat weighted() const;

    Mat matrix_;
    GramMetric dom_;
    GramMetric cod_;
};

double inner_product(const Vec& u, const Vec& v, const GramMetric& m);
double norm(const Vec& u, const GramMetric& m);

// Solves (A + eps I) y = rhs by dense LU with full pivoting.  Throws
// SingularOperator naming `requester` when the shifted matrix is numerically
// singular (pivot below 1e-14 * ||A + eps I||).
Vec solve_shifted(const LinearMap& A, double eps, const Vec& rhs,
                  const std::string& requester = "solve_shifted");
Mat solve_shifted(const LinearMap& A, double eps, const Mat& rhs,
                  const std::string& requester = "solve_shifted");

}  // namespace dsm

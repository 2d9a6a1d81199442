#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace kreglab {

// Diagnostics from a truncated-SVD least-squares solve.
struct SolveReport {
    Eigen::Index effective_rank = 0;
    double max_singular_value = 0.0;
    double min_kept_singular_value = 0.0;
    double residual_norm = 0.0;
};

struct LeastSquaresSolution {
    Eigen::VectorXd coefficients;
    SolveReport report;
};

// Minimum-norm least-squares solution of B c = f via SVD.  Singular values
// sigma_i <= rcond * sigma_max are treated as zero; the report records the
// kept rank, the extreme kept singular values, and ||B c - f||.
inline LeastSquaresSolution pseudoinverse_solve(const Eigen::MatrixXd& b, const Eigen::VectorXd& f,
                                                double rcond = 1e-10) {
    if (b.rows() < 1 || b.cols() < 1)
        throw std::invalid_argument("pseudoinverse_solve: system must have at least one row and column");
    if (f.size() != b.rows())
        throw std::invalid_argument("pseudoinverse_solve: rhs has length " + std::to_string(f.size()) +
                                    ", expected " + std::to_string(b.rows()));
    if (!(rcond > 0.0 && rcond < 1.0))
        throw std::invalid_argument("pseudoinverse_solve: rcond must lie in (0, 1)");
    if (!b.allFinite() || !f.allFinite())
        throw std::invalid_argument("pseudoinverse_solve: non-finite entries in the system");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
    const double threshold = rcond * sigma_max;

    Eigen::Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > threshold) ++rank;

    Eigen::VectorXd c = Eigen::VectorXd::Zero(b.cols());
    if (rank > 0) {
        const Eigen::VectorXd projected = svd.matrixU().leftCols(rank).transpose() * f;
        c = svd.matrixV().leftCols(rank) * (projected.array() / sigma.head(rank).array()).matrix();
    }

    SolveReport report;
    report.effective_rank = rank;
    report.max_singular_value = sigma_max;
    report.min_kept_singular_value = rank > 0 ? sigma(rank - 1) : 0.0;
    report.residual_norm = (b * c - f).norm();
    return {std::move(c), report};
}

// Direct symmetric solve of K c = f, for a K that already carries its
// regularization on the diagonal.  Uses Cholesky plus iterative refinement;
// fails when K is not numerically positive definite.
inline Eigen::VectorXd regularized_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& f) {
    if (k.rows() < 1 || k.rows() != k.cols())
        throw std::invalid_argument("regularized_solve: matrix must be square and nonempty");
    if (f.size() != k.rows())
        throw std::invalid_argument("regularized_solve: rhs has length " + std::to_string(f.size()) +
                                    ", expected " + std::to_string(k.rows()));
    if (!k.allFinite() || !f.allFinite())
        throw std::invalid_argument("regularized_solve: non-finite entries in the system");
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("regularized_solve: matrix is not symmetric");

    const double f_norm = f.norm();
    if (f_norm == 0.0) return Eigen::VectorXd::Zero(k.rows());

    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "regularized_solve: factorization failed, the matrix is not positive definite; "
            "increase the regularization delta");

    Eigen::VectorXd c = llt.solve(f);
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd residual = f - k * c;
        if (residual.norm() <= 1e-8 * f_norm) return c;
        c += llt.solve(residual);
    }
    if (!c.allFinite() || (f - k * c).norm() > 1e-8 * f_norm)
        throw std::runtime_error(
            "regularized_solve: solve did not reach the required accuracy; "
            "increase the regularization delta");
    return c;
}

}  // namespace kreglab

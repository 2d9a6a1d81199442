#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kreglab {

// Matern-family variants with closed forms: nu = inf, 1/2, 3/2, 5/2.
// The prefactor is fixed to 1, so every kernel value lies in (0, 1].
enum class KernelFamily { SquaredExponential, Exponential, Matern32, Matern52 };

inline std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "squared_exponential";
        case KernelFamily::Exponential: return "exponential";
        case KernelFamily::Matern32: return "matern32";
        case KernelFamily::Matern52: return "matern52";
    }
    throw std::logic_error("kernels: unknown family enumerator");
}

inline KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "squared_exponential" || name == "rbf") return KernelFamily::SquaredExponential;
    if (name == "exponential") return KernelFamily::Exponential;
    if (name == "matern32") return KernelFamily::Matern32;
    if (name == "matern52") return KernelFamily::Matern52;
    throw std::invalid_argument("unknown kernel family '" + name + "'");
}

// One kernel family together with Z >= 1 length parameters.  Each length
// contributes one column block to a design matrix, so Z = 1 is an ordinary
// single-length kernel and Z = 2 is the double-zeta kernel.  Lengths are kept
// strictly increasing: duplicate lengths would make the blocks identical and
// the design matrix exactly rank-deficient by construction.
class KernelSpec {
public:
    KernelSpec(KernelFamily family, std::vector<double> lengths)
        : family_(family), lengths_(std::move(lengths)) {
        if (lengths_.empty())
            throw std::invalid_argument("KernelSpec: at least one length parameter is required");
        for (std::size_t z = 0; z < lengths_.size(); ++z) {
            if (!(lengths_[z] > 0.0) || !std::isfinite(lengths_[z]))
                throw std::invalid_argument("KernelSpec: length parameters must be positive and finite");
            if (z > 0 && !(lengths_[z] > lengths_[z - 1]))
                throw std::invalid_argument("KernelSpec: length parameters must be strictly increasing");
        }
    }

    static KernelSpec single(KernelFamily family, double length) {
        return KernelSpec(family, {length});
    }

    // Lengths (l, r1*l, r2*l, ...) for ratios r > 1.
    static KernelSpec with_ratios(KernelFamily family, double length, const std::vector<double>& ratios) {
        std::vector<double> lengths{length};
        for (double r : ratios) lengths.push_back(r * length);
        return KernelSpec(family, std::move(lengths));
    }

    KernelFamily family() const { return family_; }
    const std::vector<double>& lengths() const { return lengths_; }
    int n_zeta() const { return static_cast<int>(lengths_.size()); }

private:
    KernelFamily family_;
    std::vector<double> lengths_;
};

inline double squared_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("squared_distance: dimension mismatch (" +
                                    std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    if (x.size() == 0) throw std::invalid_argument("squared_distance: vectors must have dimension >= 1");
    return (x - y).squaredNorm();
}

namespace detail {

// Scalar kernel core shared by the scalar and matrix entry points, so that a
// matrix entry is bitwise equal to the corresponding scalar evaluation.
inline double kernel_value_unchecked(KernelFamily family, double l, double r2) {
    switch (family) {
        case KernelFamily::SquaredExponential:
            return std::exp(-r2 / (2.0 * l * l));
        case KernelFamily::Exponential:
            return std::exp(-std::sqrt(r2) / l);
        case KernelFamily::Matern32: {
            const double a = std::sqrt(3.0) * std::sqrt(r2) / l;
            return (1.0 + a) * std::exp(-a);
        }
        case KernelFamily::Matern52: {
            const double a = std::sqrt(5.0) * std::sqrt(r2) / l;
            return (1.0 + a + 5.0 * r2 / (3.0 * l * l)) * std::exp(-a);
        }
    }
    return 0.0;  // unreachable
}

}  // namespace detail

// Kernel value at squared distance r2; 1 at r2 = 0, strictly decreasing in r2.
inline double kernel_value(KernelFamily family, double l, double r2) {
    if (!(l > 0.0)) throw std::invalid_argument("kernel_value: length parameter must be positive");
    if (r2 < 0.0) throw std::invalid_argument("kernel_value: squared distance must be nonnegative");
    return detail::kernel_value_unchecked(family, l, r2);
}

// All pairwise squared distances, rows x centers.  Differences are formed
// per pair (not via the Gram identity) so the result is stable under a
// common translation of both point sets.
inline Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& centers) {
    if (rows.cols() != centers.cols())
        throw std::invalid_argument("pairwise_squared_distances: dimension mismatch (" +
                                    std::to_string(rows.cols()) + " vs " + std::to_string(centers.cols()) + ")");
    if (centers.cols() < 1)
        throw std::invalid_argument("pairwise_squared_distances: points must have dimension >= 1");
    Eigen::MatrixXd r2(rows.rows(), centers.rows());
    for (Eigen::Index n = 0; n < centers.rows(); ++n)
        r2.col(n) = (rows.rowwise() - centers.row(n)).rowwise().squaredNorm();
    return r2;
}

// Elementwise kernel over a matrix of squared distances.
inline Eigen::MatrixXd apply_kernel(const Eigen::MatrixXd& squared_distances, KernelFamily family, double l) {
    if (!(l > 0.0)) throw std::invalid_argument("apply_kernel: length parameter must be positive");
    return squared_distances.unaryExpr(
        [family, l](double r2) { return detail::kernel_value_unchecked(family, l, r2); });
}

// M x (Z*N) design matrix: one column block per length parameter, blocks
// concatenated left to right in length order.
inline Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& centers,
                                     const KernelSpec& spec) {
    if (centers.rows() == 0) throw std::invalid_argument("design_matrix: centers must be nonempty");
    const Eigen::MatrixXd r2 = pairwise_squared_distances(rows, centers);
    const Eigen::Index n = centers.rows();
    Eigen::MatrixXd b(rows.rows(), static_cast<Eigen::Index>(spec.n_zeta()) * n);
    for (int z = 0; z < spec.n_zeta(); ++z)
        b.middleCols(static_cast<Eigen::Index>(z) * n, n) = apply_kernel(r2, spec.family(), spec.lengths()[z]);
    return b;
}

// Symmetric M x M kernel matrix with 1 + delta on the diagonal.
inline Eigen::MatrixXd square_covariance_matrix(const Eigen::MatrixXd& points, KernelFamily family,
                                                double l, double delta) {
    if (delta < 0.0) throw std::invalid_argument("square_covariance_matrix: delta must be nonnegative");
    if (points.rows() == 0) throw std::invalid_argument("square_covariance_matrix: points must be nonempty");
    Eigen::MatrixXd k = apply_kernel(pairwise_squared_distances(points, points), family, l);
    k.diagonal().array() = 1.0 + delta;
    return k;
}

}  // namespace kreglab

#include "hmflow/quadrature.hpp"

#include "hmflow/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace hmflow {

GaussianRule gauss_hermite(std::size_t order) {
    if (order < 1 || order > 200) fail(ErrorCode::InvalidArgument, "Gauss-Hermite order must be in [1, 200]");
    // Golub-Welsch: Jacobi matrix of the monic probabilists' Hermite recurrence.
    const auto n = static_cast<Eigen::Index>(order);
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        const double off = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussianRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (Eigen::Index k = 0; k < n; ++k) {
        rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
        const double v0 = eig.eigenvectors()(0, k);
        rule.weights[static_cast<std::size_t>(k)] = v0 * v0;
    }
    return rule;
}

}  // namespace hmflow

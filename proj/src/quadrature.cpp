#include "dhedge/quadrature.hpp"

#include "dhedge/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace dhedge {

QuadratureRule gauss_quadrature(std::size_t n, double mean, double variance) {
    if (n < 2) throw InvalidParameter("gauss_quadrature: need at least 2 nodes");
    if (!(variance > 0.0)) throw DegenerateVariance("gauss_quadrature: variance must be positive");

    // Jacobi matrix of the probabilists' Hermite polynomials: zero diagonal,
    // off-diagonal sqrt(k). Eigenvalues are the standard-normal nodes, the
    // squared first eigenvector components the weights.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k < n; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
        jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("gauss_quadrature: eigen decomposition failed");

    QuadratureRule rule;
    rule.mean = mean;
    rule.variance = variance;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double sd = std::sqrt(variance);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = solver.eigenvalues()(static_cast<Eigen::Index>(i));
        const double v0 = solver.eigenvectors()(0, static_cast<Eigen::Index>(i));
        rule.nodes[i] = mean + sd * z;
        rule.weights[i] = v0 * v0;
        wsum += rule.weights[i];
    }
    for (auto& w : rule.weights) w /= wsum;
    return rule;
}

} // namespace dhedge

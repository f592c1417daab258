#pragma once

#include <cstddef>
#include <vector>

namespace dhedge {

/// Gauss-Hermite style rule for integrals against N(mean, variance).
/// Weights are normalized to sum to one, so the rule is a discrete
/// probability approximation of the normal law, exact on polynomials
/// up to degree 2n-1.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    double mean = 0.0;
    double variance = 1.0;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double expect(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
        return acc;
    }
};

/// Golub-Welsch construction; throws DegenerateVariance if variance <= 0
/// and InvalidParameter if n < 2.
QuadratureRule gauss_quadrature(std::size_t n, double mean, double variance);

} // namespace dhedge

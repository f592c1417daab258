#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace dhedge {

/// Monotone cubic Hermite interpolation (Fritsch-Carlson slope limiting).
/// Evaluation outside the abscissa range clamps to the nearest endpoint.
class PchipInterpolant {
public:
    PchipInterpolant() = default;
    PchipInterpolant(std::span<const double> x, std::span<const double> y);

    double operator()(double xq) const;

private:
    std::vector<double> x_, y_, d_; // nodes, values, endpoint derivatives
};

/// One-shot pchip evaluation over externally owned arrays; avoids allocating
/// an interpolant when a row is only queried once.
double pchip_eval(std::span<const double> x, std::span<const double> y, double xq);

} // namespace dhedge

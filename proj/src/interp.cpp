#include "dhedge/interp.hpp"

#include <cassert>
#include <cmath>

namespace dhedge {

namespace {

// Fritsch-Carlson limited derivative at an interior node from the two
// adjacent secants and spacings.
double limited_derivative(double h0, double h1, double s0, double s1) {
    if (s0 * s1 <= 0.0) return 0.0;
    const double w0 = 2.0 * h1 + h0;
    const double w1 = h1 + 2.0 * h0;
    return (w0 + w1) / (w0 / s0 + w1 / s1);
}

// One-sided endpoint derivative (shape-preserving three-point formula).
double endpoint_derivative(double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0) return 0.0;
    if (s0 * s1 <= 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
    return d;
}

double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double xq) {
    const double h = x1 - x0;
    const double t = (xq - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return y0 * (2.0 * t3 - 3.0 * t2 + 1.0) + h * d0 * (t3 - 2.0 * t2 + t) +
           y1 * (-2.0 * t3 + 3.0 * t2) + h * d1 * (t3 - t2);
}

std::size_t locate(std::span<const double> x, double xq) {
    const auto it = std::upper_bound(x.begin(), x.end(), xq);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return 0;
    if (i >= x.size()) return x.size() - 2;
    return i - 1;
}

double node_derivative(std::span<const double> x, std::span<const double> y, std::size_t i) {
    const std::size_t n = x.size();
    assert(n >= 2);
    if (n == 2) return (y[1] - y[0]) / (x[1] - x[0]);
    if (i == 0) {
        const double h0 = x[1] - x[0], h1 = x[2] - x[1];
        return endpoint_derivative(h0, h1, (y[1] - y[0]) / h0, (y[2] - y[1]) / h1);
    }
    if (i == n - 1) {
        const double h0 = x[n - 1] - x[n - 2], h1 = x[n - 2] - x[n - 3];
        return endpoint_derivative(h0, h1, (y[n - 1] - y[n - 2]) / h0,
                                   (y[n - 2] - y[n - 3]) / h1);
    }
    const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    return limited_derivative(h0, h1, (y[i] - y[i - 1]) / h0, (y[i + 1] - y[i]) / h1);
}

} // namespace

PchipInterpolant::PchipInterpolant(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
    assert(x_.size() == y_.size() && x_.size() >= 2);
    d_.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) d_[i] = node_derivative(x_, y_, i);
}

double PchipInterpolant::operator()(double xq) const {
    if (xq <= x_.front()) return y_.front();
    if (xq >= x_.back()) return y_.back();
    const std::size_t i = locate(x_, xq);
    return hermite(x_[i], x_[i + 1], y_[i], y_[i + 1], d_[i], d_[i + 1], xq);
}

double pchip_eval(std::span<const double> x, std::span<const double> y, double xq) {
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    const std::size_t i = locate(x, xq);
    const double d0 = node_derivative(x, y, i);
    const double d1 = node_derivative(x, y, i + 1);
    return hermite(x[i], x[i + 1], y[i], y[i + 1], d0, d1, xq);
}

} // namespace dhedge

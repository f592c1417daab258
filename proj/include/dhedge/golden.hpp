#pragma once

#include <cmath>
#include <utility>

namespace dhedge {

/// Golden-section minimization on [a, b]. No unimodality is assumed by
/// callers; they bracket with a coarse scan first so the cell contains the
/// relevant minimum. Returns (argmin, min).
template <class F>
std::pair<double, double> golden_minimize(F&& f, double a, double b,
                                          double xtol = 1e-10, int max_iter = 200) {
    constexpr double invphi = 0.6180339887498949;
    if (b < a) std::swap(a, b);
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > xtol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

} // namespace dhedge

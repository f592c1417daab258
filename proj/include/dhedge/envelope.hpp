#pragma once

#include "dhedge/model.hpp"

#include <utility>
#include <vector>

namespace dhedge {

/// Concave envelope of a payoff over all of R.
///
/// For the bounded payoff class the only affine majorants on the whole line
/// are constants (any nonzero slope eventually falls below one of the
/// constant tails), so the envelope collapses to sup f. The computation
/// still goes through the general route: upper concave hull of the
/// breakpoints, intersected with tail-slope feasibility.
struct EnvelopeResult {
    bool finite = true;
    std::vector<std::pair<double, double>> hull_vertices; // (x, fhat(x))
    double value_at_s0 = 0.0;
    double right_derivative_at_s0 = 0.0;

    double eval(double x) const; // envelope value at x (constant tails of the hull)
};

EnvelopeResult concave_envelope(const PayoffSpec& spec, double s0);

/// Super-replication price fhat(s0) and buy-and-hold hedge slope d+fhat(s0).
/// The pair is certified against f at all breakpoints and both tails; throws
/// InfiniteEnvelope if the envelope is not finite (impossible for the
/// bounded class, reported for future payoff classes).
std::pair<double, double> superrep_price(const PayoffSpec& spec, const ModelParams& params);

} // namespace dhedge

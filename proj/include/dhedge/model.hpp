#pragma once

#include <cstddef>
#include <vector>

namespace dhedge {

/// Bachelier dynamics S_t = s0 + sigma W_t + mu t.
struct ModelParams {
    double s0 = 0.0;
    double sigma = 1.0; // currency per sqrt-time, > 0
    double mu = 0.0;    // currency per time
    double T = 1.0;     // horizon, > 0

    /// Throws InvalidParameter on non-finite fields, sigma <= 0 or T <= 0.
    void validate() const;
};

/// Continuous, nonnegative, bounded piecewise-linear payoff. Constant tails
/// (equal to the endpoint values) keep the function bounded, so the
/// sub-quadratic growth condition holds trivially with p = 0.
struct PayoffSpec {
    std::vector<double> breakpoints; // strictly increasing
    std::vector<double> values;      // >= 0, same length
    double left_tail_value = 0.0;    // must equal values.front()
    double right_tail_value = 0.0;   // must equal values.back()

    // Filled by validate_payoff().
    double sup_value = 0.0;
    std::vector<double> slopes; // per interior segment
    bool validated = false;

    double lipschitz() const; // max |slope|
};

/// Constant payoff f == c as a degenerate two-point spec.
PayoffSpec constant_payoff(double c);
/// min(max(x - lo, 0), hi - lo) style capped call on [lo, hi] scaled to cap.
PayoffSpec capped_call_payoff(double lo = 0.0, double hi = 1.0, double cap = 1.0);
/// Triangle payoff peaking at `peak`.
PayoffSpec butterfly_payoff(double left = -1.0, double peak = 0.0, double right = 1.0,
                            double height = 1.0);

/// Accepts iff breakpoints strictly increase, values are >= 0 and tails match
/// the endpoint values; caches sup f and the segment slopes.
/// Throws NonMonotoneBreakpoints / NegativeValue / DiscontinuousTail.
PayoffSpec validate_payoff(PayoffSpec spec);

/// Piecewise-linear interpolation between breakpoints, tail constants outside.
double eval_payoff(const PayoffSpec& spec, double x);

} // namespace dhedge

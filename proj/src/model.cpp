#include "dhedge/model.hpp"

#include "dhedge/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dhedge {

void ModelParams::validate() const {
    if (!std::isfinite(s0) || !std::isfinite(mu))
        throw InvalidParameter("ModelParams: s0 and mu must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidParameter("ModelParams: sigma must be positive and finite");
    if (!(T > 0.0) || !std::isfinite(T))
        throw InvalidParameter("ModelParams: T must be positive and finite");
}

double PayoffSpec::lipschitz() const {
    double lip = 0.0;
    for (double m : slopes) lip = std::max(lip, std::abs(m));
    return lip;
}

PayoffSpec constant_payoff(double c) {
    PayoffSpec spec;
    spec.breakpoints = {0.0, 1.0};
    spec.values = {c, c};
    spec.left_tail_value = c;
    spec.right_tail_value = c;
    return validate_payoff(spec);
}

PayoffSpec capped_call_payoff(double lo, double hi, double cap) {
    PayoffSpec spec;
    spec.breakpoints = {lo, hi};
    spec.values = {0.0, cap};
    spec.left_tail_value = 0.0;
    spec.right_tail_value = cap;
    return validate_payoff(spec);
}

PayoffSpec butterfly_payoff(double left, double peak, double right, double height) {
    PayoffSpec spec;
    spec.breakpoints = {left, peak, right};
    spec.values = {0.0, height, 0.0};
    spec.left_tail_value = 0.0;
    spec.right_tail_value = 0.0;
    return validate_payoff(spec);
}

PayoffSpec validate_payoff(PayoffSpec spec) {
    const auto& b = spec.breakpoints;
    const auto& v = spec.values;
    if (b.empty() || b.size() != v.size())
        throw InvalidParameter("PayoffSpec: breakpoints/values must be non-empty and equal length");
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
        if (!(b[i] < b[i + 1]))
            throw NonMonotoneBreakpoints("PayoffSpec: breakpoints must strictly increase");
    for (double x : b)
        if (!std::isfinite(x)) throw InvalidParameter("PayoffSpec: non-finite breakpoint");
    for (double y : v) {
        if (!std::isfinite(y)) throw InvalidParameter("PayoffSpec: non-finite value");
        if (y < 0.0) throw NegativeValue("PayoffSpec: payoff values must be nonnegative");
    }
    if (spec.left_tail_value < 0.0 || spec.right_tail_value < 0.0)
        throw NegativeValue("PayoffSpec: tail values must be nonnegative");
    if (spec.left_tail_value != v.front())
        throw DiscontinuousTail("PayoffSpec: left tail must equal first value");
    if (spec.right_tail_value != v.back())
        throw DiscontinuousTail("PayoffSpec: right tail must equal last value");

    spec.sup_value = *std::max_element(v.begin(), v.end());
    spec.slopes.clear();
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
        spec.slopes.push_back((v[i + 1] - v[i]) / (b[i + 1] - b[i]));
    spec.validated = true;
    return spec;
}

double eval_payoff(const PayoffSpec& spec, double x) {
    const auto& b = spec.breakpoints;
    const auto& v = spec.values;
    if (x <= b.front()) return spec.left_tail_value;
    if (x >= b.back()) return spec.right_tail_value;
    const auto it = std::upper_bound(b.begin(), b.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - b.begin()) - 1;
    const double t = (x - b[i]) / (b[i + 1] - b[i]);
    return v[i] + t * (v[i + 1] - v[i]);
}

} // namespace dhedge

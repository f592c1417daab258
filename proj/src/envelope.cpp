#include "dhedge/envelope.hpp"

#include "dhedge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dhedge {

namespace {

// Smallest affine-majorant value at x for a fixed slope beta: the intercept
// is pinned by the tightest breakpoint constraint.
double majorant_at(const PayoffSpec& spec, double beta, double x) {
    double intercept = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.breakpoints.size(); ++i)
        intercept = std::max(intercept, spec.values[i] - beta * spec.breakpoints[i]);
    return intercept + beta * x;
}

} // namespace

double EnvelopeResult::eval(double x) const {
    if (hull_vertices.empty()) return 0.0;
    if (x <= hull_vertices.front().first) return hull_vertices.front().second;
    if (x >= hull_vertices.back().first) return hull_vertices.back().second;
    for (std::size_t i = 0; i + 1 < hull_vertices.size(); ++i) {
        const auto& [x0, y0] = hull_vertices[i];
        const auto& [x1, y1] = hull_vertices[i + 1];
        if (x <= x1) return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
    return hull_vertices.back().second;
}

EnvelopeResult concave_envelope(const PayoffSpec& spec, double s0) {
    if (!spec.validated) throw InvalidParameter("concave_envelope: spec not validated");

    // Admissible majorant slopes are [a_R, a_L] where a_L/a_R are the tail
    // slopes of f. Constant tails give a_L = a_R = 0; the envelope is finite
    // iff a_R <= a_L.
    const double slope_left = 0.0;
    const double slope_right = 0.0;

    EnvelopeResult result;
    result.finite = slope_right <= slope_left;
    if (!result.finite) {
        result.value_at_s0 = std::numeric_limits<double>::infinity();
        return result;
    }

    // fhat(x) = min over admissible beta of the tightest affine majorant.
    // The objective is convex piecewise-linear in beta, so the minimum is
    // attained at an interval endpoint or a pairwise breakpoint slope.
    std::vector<double> betas = {slope_right, slope_left};
    for (std::size_t i = 0; i < spec.breakpoints.size(); ++i)
        for (std::size_t j = i + 1; j < spec.breakpoints.size(); ++j) {
            const double m = (spec.values[j] - spec.values[i]) /
                             (spec.breakpoints[j] - spec.breakpoints[i]);
            betas.push_back(std::clamp(m, slope_right, slope_left));
        }

    auto envelope_at = [&](double x) {
        double best = std::numeric_limits<double>::infinity();
        for (double beta : betas) best = std::min(best, majorant_at(spec, beta, x));
        return best;
    };

    // Vertices: envelope values at payoff breakpoints, collinear points pruned.
    std::vector<std::pair<double, double>> verts;
    for (double b : spec.breakpoints) verts.emplace_back(b, envelope_at(b));
    std::vector<std::pair<double, double>> pruned;
    for (const auto& v : verts) {
        while (pruned.size() >= 2) {
            const auto& [x0, y0] = pruned[pruned.size() - 2];
            const auto& [x1, y1] = pruned[pruned.size() - 1];
            const double cross = (x1 - x0) * (v.second - y0) - (v.first - x0) * (y1 - y0);
            if (std::abs(cross) <= 1e-12 * (1.0 + std::abs(y0)) * (1.0 + v.first - x0))
                pruned.pop_back();
            else
                break;
        }
        pruned.push_back(v);
    }
    result.hull_vertices = std::move(pruned);
    result.value_at_s0 = envelope_at(s0);

    // Right derivative: slope of the hull segment to the right of s0; the
    // right tail slope (0) beyond the last vertex.
    result.right_derivative_at_s0 = slope_right;
    const auto& hv = result.hull_vertices;
    if (s0 < hv.front().first) {
        result.right_derivative_at_s0 =
            hv.size() >= 2 && hv.front().second != hv[1].second
                ? (hv[1].second - hv.front().second) / (hv[1].first - hv.front().first)
                : slope_left;
        // Left of the hull the envelope runs at slope a_L = 0.
        if (result.value_at_s0 == hv.front().second) result.right_derivative_at_s0 = slope_left;
    } else if (s0 < hv.back().first) {
        for (std::size_t i = 0; i + 1 < hv.size(); ++i)
            if (s0 >= hv[i].first && s0 < hv[i + 1].first) {
                result.right_derivative_at_s0 =
                    (hv[i + 1].second - hv[i].second) / (hv[i + 1].first - hv[i].first);
                break;
            }
    }
    return result;
}

std::pair<double, double> superrep_price(const PayoffSpec& spec, const ModelParams& params) {
    params.validate();
    const EnvelopeResult env = concave_envelope(spec, params.s0);
    if (!env.finite) throw InfiniteEnvelope("superrep_price: concave envelope is infinite");

    // Certify the super-hedge: price + slope * (x - s0) >= f(x) at all
    // breakpoints and both tails.
    const double price = env.value_at_s0;
    const double slope = env.right_derivative_at_s0;
    auto line = [&](double x) { return price + slope * (x - params.s0); };
    constexpr double tol = 1e-9;
    for (std::size_t i = 0; i < spec.breakpoints.size(); ++i)
        if (line(spec.breakpoints[i]) < spec.values[i] - tol)
            throw std::runtime_error("superrep_price: certificate failed at a breakpoint");
    if (slope > 0.0 || (slope == 0.0 && price < spec.left_tail_value - tol))
        throw std::runtime_error("superrep_price: certificate failed on the left tail");
    if (slope < 0.0 || (slope == 0.0 && price < spec.right_tail_value - tol))
        throw std::runtime_error("superrep_price: certificate failed on the right tail");
    return {price, slope};
}

} // namespace dhedge

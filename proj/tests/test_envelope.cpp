#include "dhedge/envelope.hpp"
#include "dhedge/model.hpp"
#include "dhedge/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace dhedge;

namespace {

PayoffSpec two_plateau() {
    PayoffSpec spec;
    spec.breakpoints = {0.0, 1.0};
    spec.values = {0.5, 1.0};
    spec.left_tail_value = 0.5;
    spec.right_tail_value = 1.0;
    return validate_payoff(spec);
}

} // namespace

TEST_CASE("bounded payoffs force a constant envelope equal to sup f") {
    ModelParams params;
    params.s0 = 0.5;
    for (const PayoffSpec& spec :
         {capped_call_payoff(), butterfly_payoff(), two_plateau(), constant_payoff(0.7)}) {
        const auto [price, slope] = superrep_price(spec, params);
        CHECK(price == doctest::Approx(spec.sup_value).epsilon(1e-13));
        CHECK(std::abs(slope) <= 1e-13);
    }
}

TEST_CASE("two-plateau envelope matches a dense affine-majorant oracle") {
    const PayoffSpec spec = two_plateau();
    ModelParams params;
    params.s0 = 0.5;
    const auto [price, slope] = superrep_price(spec, params);

    // Brute force over a (slope, intercept) grid: smallest l(s0) among affine
    // functions dominating f at breakpoints and far into both tails.
    double best = 1e300;
    for (int bi = -400; bi <= 400; ++bi) {
        const double beta = bi / 100.0;
        double intercept = -1e300;
        for (double x : {-1e4, 0.0, 1.0, 1e4})
            intercept = std::max(intercept, eval_payoff(spec, x) - beta * x);
        best = std::min(best, intercept + beta * params.s0);
    }
    CHECK(price <= best + 1e-12);
    CHECK(price == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(slope) <= 1e-13);
}

TEST_CASE("envelope properties on random payoffs") {
    SeededStream rng(11, 0);
    for (int rep = 0; rep < 25; ++rep) {
        PayoffSpec spec;
        const std::size_t n = 2 + static_cast<std::size_t>(rng.next_uniform() * 5);
        double x = -2.0;
        for (std::size_t i = 0; i < n; ++i) {
            x += 0.2 + rng.next_uniform();
            spec.breakpoints.push_back(x);
            spec.values.push_back(3.0 * rng.next_uniform());
        }
        spec.left_tail_value = spec.values.front();
        spec.right_tail_value = spec.values.back();
        spec = validate_payoff(spec);

        const double s0 = -3.0 + 6.0 * rng.next_uniform();
        const EnvelopeResult env = concave_envelope(spec, s0);
        REQUIRE(env.finite);
        CHECK(env.value_at_s0 >= eval_payoff(spec, s0) - 1e-12);

        // Domination at random points.
        for (int k = 0; k < 1000; ++k) {
            const double xq = -10.0 + 20.0 * rng.next_uniform();
            CHECK(env.eval(xq) >= eval_payoff(spec, xq) - 1e-12);
        }
        // Concavity: midpoint inequality on hull vertices.
        for (std::size_t i = 0; i + 2 < env.hull_vertices.size(); ++i) {
            const auto& [xa, ya] = env.hull_vertices[i];
            const auto& [xc, yc] = env.hull_vertices[i + 2];
            const double xm = 0.5 * (xa + xc);
            CHECK(env.eval(xm) >= 0.5 * (ya + yc) - 1e-10);
        }
        // Super-hedge certificate everywhere.
        ModelParams params;
        params.s0 = s0;
        const auto [price, slope] = superrep_price(spec, params);
        for (int k = 0; k < 500; ++k) {
            const double xq = -50.0 + 100.0 * rng.next_uniform();
            CHECK(price + slope * (xq - s0) >= eval_payoff(spec, xq) - 1e-12);
        }
    }
}

#include "dhedge/errors.hpp"
#include "dhedge/model.hpp"
#include "dhedge/quadrature.hpp"
#include "dhedge/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace dhedge;

TEST_CASE("payoff evaluation matches the textbook cases") {
    const PayoffSpec call = capped_call_payoff();
    CHECK(eval_payoff(call, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(eval_payoff(call, -3.0) == 0.0);
    CHECK(eval_payoff(call, 7.0) == 1.0);
    const PayoffSpec fly = butterfly_payoff();
    CHECK(eval_payoff(fly, 0.25) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(eval_payoff(fly, 0.0) == 1.0);
    CHECK(eval_payoff(fly, -5.0) == 0.0);
}

TEST_CASE("payoff validation accepts and rejects as documented") {
    CHECK(capped_call_payoff().sup_value == 1.0);

    PayoffSpec bad = capped_call_payoff();
    bad.values = {0.0, -0.1};
    bad.right_tail_value = -0.1;
    CHECK_THROWS_AS(validate_payoff(bad), NegativeValue);

    PayoffSpec tail = capped_call_payoff();
    tail.left_tail_value = 0.5;
    CHECK_THROWS_AS(validate_payoff(tail), DiscontinuousTail);

    PayoffSpec order = capped_call_payoff();
    order.breakpoints = {1.0, 0.0};
    CHECK_THROWS_AS(validate_payoff(order), NonMonotoneBreakpoints);
}

TEST_CASE("payoff interpolation agrees with a direct two-point line") {
    SeededStream rng(2024, 0);
    for (int rep = 0; rep < 50; ++rep) {
        PayoffSpec spec;
        const std::size_t n = 2 + static_cast<std::size_t>(rng.next_uniform() * 6);
        double x = -3.0;
        for (std::size_t i = 0; i < n; ++i) {
            x += 0.1 + rng.next_uniform();
            spec.breakpoints.push_back(x);
            spec.values.push_back(5.0 * rng.next_uniform());
        }
        spec.left_tail_value = spec.values.front();
        spec.right_tail_value = spec.values.back();
        spec = validate_payoff(spec);
        for (int k = 0; k + 1 < static_cast<int>(n); ++k) {
            const double a = spec.breakpoints[k], b = spec.breakpoints[k + 1];
            const double t = rng.next_uniform();
            const double xq = a + t * (b - a);
            const double line = spec.values[k] +
                                (xq - a) / (b - a) * (spec.values[k + 1] - spec.values[k]);
            CHECK(eval_payoff(spec, xq) == doctest::Approx(line).epsilon(1e-12));
        }
        double sup_seen = 0.0;
        for (int k = 0; k < 2000; ++k)
            sup_seen = std::max(sup_seen, eval_payoff(spec, -10.0 + 20.0 * rng.next_uniform()));
        CHECK(sup_seen <= spec.sup_value + 1e-12);
    }
}

TEST_CASE("cached supremum dominates 1e5 random evaluations") {
    const PayoffSpec fly = butterfly_payoff(-2.0, 0.3, 1.0, 2.5);
    SeededStream rng(7, 1);
    for (int k = 0; k < 100000; ++k)
        CHECK(eval_payoff(fly, -20.0 + 40.0 * rng.next_uniform()) <= fly.sup_value + 1e-12);
}

TEST_CASE("two-point quadrature solves the moment equations") {
    const QuadratureRule rule = gauss_quadrature(2, 0.0, 1.0);
    REQUIRE(rule.size() == 2);
    CHECK(std::min(rule.nodes[0], rule.nodes[1]) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::max(rule.nodes[0], rule.nodes[1]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rule.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rule.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("quadrature moment identities") {
    for (std::size_t n : {std::size_t(2), std::size_t(8), std::size_t(20), std::size_t(64)}) {
        const double mean = 0.3, var = 2.5;
        const QuadratureRule rule = gauss_quadrature(n, mean, var);
        double w = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w += rule.weights[i];
            m1 += rule.weights[i] * rule.nodes[i];
            m2 += rule.weights[i] * (rule.nodes[i] - mean) * (rule.nodes[i] - mean);
        }
        CHECK(std::abs(w - 1.0) <= 1e-12);
        CHECK(std::abs(m1 - mean) <= 1e-10);
        CHECK(std::abs(m2 - var) <= 1e-8 * var);
    }
    // Normal fourth moment at n = 20.
    const QuadratureRule rule = gauss_quadrature(20, 0.0, 1.0);
    const double m4 = rule.expect([](double z) { return z * z * z * z; });
    CHECK(std::abs(m4 - 3.0) <= 1e-8);
}

TEST_CASE("quadrature rejects degenerate inputs") {
    CHECK_THROWS_AS(gauss_quadrature(8, 0.0, 0.0), DegenerateVariance);
    CHECK_THROWS_AS(gauss_quadrature(8, 0.0, -1.0), DegenerateVariance);
    CHECK_THROWS_AS(gauss_quadrature(1, 0.0, 1.0), InvalidParameter);
}

TEST_CASE("model parameter validation") {
    ModelParams bad;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad.sigma = 1.0;
    bad.T = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("seeded streams are deterministic and splittable") {
    SeededStream a(42, 3);
    SeededStream b(42, 3);
    for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

    SeededStream c(42, 4);
    bool differs = false;
    for (int k = 0; k < 10; ++k) differs = differs || (a.next_u64() != c.next_u64());
    CHECK(differs);

    SeededStream p(9, 0);
    SeededStream child1 = p.child(17);
    SeededStream child2 = p.child(17);
    CHECK(child1.next_normal() == child2.next_normal());
}

TEST_CASE("normal increments: degenerate variance and CLT bound") {
    SeededStream s(5, 0);
    const auto zeros = draw_normal_increments(s, 16, 1.5, 0.0);
    for (double z : zeros) CHECK(z == 1.5);

    SeededStream t(5, 1);
    const auto draws = draw_normal_increments(t, 1000000, 0.0, 1.0);
    double mean = 0.0, var = 0.0;
    for (double z : draws) mean += z;
    mean /= static_cast<double>(draws.size());
    for (double z : draws) var += (z - mean) * (z - mean);
    var /= static_cast<double>(draws.size() - 1);
    CHECK(std::abs(mean) <= 4.0 / 1000.0);
    CHECK(std::abs(var - 1.0) <= 0.01);
}

#include "dhedge/delayed_dp.hpp"
#include "dhedge/errors.hpp"
#include "dhedge/golden.hpp"
#include "dhedge/quadrature.hpp"
#include "dhedge/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace dhedge;

TEST_CASE("denominator closed form and golden-section oracle") {
    ModelParams params;
    CHECK(denominator_value(params, 1.0) == 1.0);

    params.mu = 1.0;
    params.T = 2.0;
    CHECK(denominator_value(params, 3.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    // One-period numeric minimization over a constant position.
    for (double lambda : {0.7, 2.0}) {
        const QuadratureRule rule =
            gauss_quadrature(64, params.mu * params.T, params.sigma * params.sigma * params.T);
        const auto obj = [&](double gamma) {
            return rule.expect([&](double ds) { return std::exp(-lambda * gamma * ds); });
        };
        const double center = params.mu / (lambda * params.sigma * params.sigma);
        const auto [gmin, vmin] = golden_minimize(obj, center - 2.0, center + 2.0, 1e-12);
        (void)gmin;
        CHECK(std::abs(vmin - denominator_value(params, lambda)) <= 1e-8);
    }
}

TEST_CASE("terminal value: closed forms and constant factoring") {
    DelayedProblem problem;
    problem.params.mu = 0.4;
    problem.spec = constant_payoff(0.0);
    problem.N = 4;
    problem.lambda = 1.5;
    const double delta = problem.step();
    const double g_star = problem.params.mu / (problem.lambda * 1.0);
    const double expected = std::exp(-problem.params.mu * problem.params.mu * delta / 2.0);
    CHECK(terminal_value(0.3, g_star, problem) == doctest::Approx(expected).epsilon(1e-12));

    DelayedProblem cash = problem;
    cash.spec = constant_payoff(0.7);
    CHECK(terminal_value(0.3, g_star, cash) ==
          doctest::Approx(std::exp(cash.lambda * 0.7) * expected).epsilon(1e-12));
}

TEST_CASE("terminal value matches a 1e7-sample Monte Carlo oracle") {
    DelayedProblem problem;
    problem.spec = butterfly_payoff();
    problem.N = 4; // delta = 0.25
    problem.lambda = 1.0;
    const double value = terminal_value(0.0, 0.0, problem);

    SeededStream rng(123, 0);
    const std::size_t n = 10000000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double z = rng.next_normal(0.0, 0.25);
        const double x = std::exp(eval_payoff(problem.spec, z)); // g = 0
        const double d = x - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (x - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    CHECK(std::abs(value - mean) <= 3.0 * se);
}

TEST_CASE("terminal value guards against overflow") {
    DelayedProblem problem;
    problem.spec = butterfly_payoff();
    problem.N = 2;
    problem.lambda = 1.0;
    CHECK_THROWS_AS(terminal_value(0.0, 1e5, problem), OverflowGuard);
}

TEST_CASE("backward step reproduces the f = 0 closed form") {
    DelayedProblem problem;
    problem.params.mu = 0.5;
    problem.spec = constant_payoff(0.0);
    problem.N = 4;
    problem.lambda = 2.0;
    const double delta = problem.step();
    const ValueGrid terminal = make_terminal_grid(problem);
    const ValueGrid stepped = backward_step(terminal, problem);

    // V_j(s, g) = exp(-lambda g mu d + lambda^2 g^2 d / 2) * exp(-mu^2 d / 2),
    // independent of s; the optimal committed position is mu / (lambda sigma^2).
    const double lam = problem.lambda, mu = problem.params.mu;
    for (std::size_t gi = 0; gi < stepped.g_nodes.size(); gi += 7) {
        const double g = stepped.g_nodes[gi];
        const double expected = -lam * g * mu * delta + lam * lam * g * g * delta / 2.0 -
                                mu * mu * delta / 2.0;
        for (std::size_t si = 20; si < stepped.s_nodes.size(); si += 40)
            CHECK(stepped.log_at(si, gi) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("full DP prices trivial payoffs exactly") {
    DelayedProblem problem;
    problem.params.mu = 0.3;
    problem.N = 4;
    problem.lambda = 2.0;

    problem.spec = constant_payoff(0.0);
    CHECK(std::abs(indifference_price_dp(problem).price) <= 1e-6);

    problem.spec = constant_payoff(0.8);
    CHECK(indifference_price_dp(problem).price == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("tree oracle: trivial payoff and direct two-period minimization") {
    DelayedProblem problem;
    problem.params.mu = 0.25;
    problem.spec = constant_payoff(0.0);
    problem.N = 2;
    problem.lambda = 1.5;
    CHECK(std::abs(indifference_price_tree_oracle(problem, 3)) <= 1e-8);

    problem.spec = butterfly_payoff();
    const double oracle = indifference_price_tree_oracle(problem, 3);

    // Independent re-derivation: both positions are deterministic, so the
    // numerator is a plain 2-variable minimization over the 9 path pairs.
    const IncrementDist inc = lattice_increments(problem, 3);
    const double lam = problem.lambda;
    const auto numerator = [&](double g1, double g2) {
        double acc = 0.0;
        for (std::size_t a = 0; a < inc.nodes.size(); ++a)
            for (std::size_t b = 0; b < inc.nodes.size(); ++b) {
                const double sT = inc.nodes[a] + inc.nodes[b];
                const double gains = g1 * inc.nodes[a] + g2 * inc.nodes[b];
                acc += inc.weights[a] * inc.weights[b] *
                       std::exp(-lam * (gains - eval_payoff(problem.spec, sT)));
            }
        return acc;
    };
    const auto outer = [&](double g1) {
        return golden_minimize([&](double g2) { return numerator(g1, g2); }, -5.0, 5.0, 1e-12)
            .second;
    };
    const auto [g1_best, num_best] = golden_minimize(outer, -5.0, 5.0, 1e-12);
    (void)g1_best;
    double den = 0.0;
    {
        const auto one = [&](double g) {
            double acc = 0.0;
            for (std::size_t a = 0; a < inc.nodes.size(); ++a)
                acc += inc.weights[a] * std::exp(-lam * g * inc.nodes[a]);
            return acc;
        };
        const double per = golden_minimize(one, -5.0, 5.0, 1e-12).second;
        den = per * per;
    }
    const double direct = std::log(num_best / den) / lam;
    CHECK(oracle == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("tree DP equals the enumeration oracle at N = 3") {
    DelayedProblem problem;
    problem.params.mu = 0.1;
    problem.spec = butterfly_payoff();
    problem.N = 3;
    problem.lambda = 2.0;
    for (std::size_t q : {std::size_t(2), std::size_t(3)}) {
        const double oracle = indifference_price_tree_oracle(problem, q);
        const double dp = indifference_price_tree_dp(problem, q);
        CHECK(std::abs(dp - oracle) <= 1e-6);
    }
}

TEST_CASE("delay monotonicity and price bounds") {
    DelayedProblem problem;
    problem.params.mu = 0.2;
    problem.spec = butterfly_payoff();
    problem.N = 4;
    problem.lambda = 4.0;
    const PriceReport report = indifference_price_dp(problem);
    CHECK(report.price >= zero_delay_price(problem) - 1e-6);
    CHECK(report.price >= 0.0);
    CHECK(report.price <= problem.spec.sup_value + 1e-6);
    CHECK(report.denominator_log ==
          doctest::Approx(-problem.params.mu * problem.params.mu * problem.params.T / 2.0)
              .epsilon(1e-14));
}

TEST_CASE("grid refinement stability") {
    DelayedProblem coarse;
    coarse.spec = butterfly_payoff();
    coarse.N = 8;
    coarse.lambda = 8.0;
    DelayedProblem fine = coarse;
    fine.s_node_count = 241;
    fine.g_node_count = 121;
    fine.quad_nodes = 60;
    const double p_coarse = indifference_price_dp(coarse).price;
    const double p_fine = indifference_price_dp(fine).price;
    CHECK(std::abs(p_coarse - p_fine) <= 1e-3);
}

TEST_CASE("convergence study on a cash payoff has zero gaps") {
    ModelParams params;
    params.mu = 0.2;
    const auto rows = convergence_study(1.0, constant_payoff(0.5), params, {4, 8}, 0.5);
    for (const auto& row : rows) {
        CHECK(std::abs(row.gap) <= 1e-6);
        CHECK(row.lambda == doctest::Approx(static_cast<double>(row.N)).epsilon(1e-14));
        CHECK(row.H == doctest::Approx(1.0 / static_cast<double>(row.N)).epsilon(1e-14));
    }
}

TEST_CASE("lattice increments match the Gaussian moments") {
    DelayedProblem problem;
    problem.params.mu = 0.3;
    problem.spec = butterfly_payoff();
    problem.N = 4;
    problem.lambda = 1.0;
    const double d = problem.step();
    for (std::size_t q : {std::size_t(2), std::size_t(3)}) {
        const IncrementDist inc = lattice_increments(problem, q);
        double w = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t k = 0; k < inc.nodes.size(); ++k) {
            w += inc.weights[k];
            m1 += inc.weights[k] * inc.nodes[k];
            m2 += inc.weights[k] * (inc.nodes[k] - problem.params.mu * d) *
                  (inc.nodes[k] - problem.params.mu * d);
        }
        CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m1 == doctest::Approx(problem.params.mu * d).epsilon(1e-12));
        CHECK(m2 == doctest::Approx(d).epsilon(1e-12));
    }
}

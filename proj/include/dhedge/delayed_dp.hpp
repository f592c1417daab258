#pragma once

#include "dhedge/model.hpp"
#include "dhedge/quadrature.hpp"

#include <cstddef>
#include <vector>

namespace dhedge {

/// Discrete-time indifference pricing on a uniform N-period grid where every
/// position must be committed one grid period before it applies (delay
/// H = T/N). The DP state is (latest observed price, committed position);
/// this reduction is valid because increments are independent Gaussians and
/// the payoff depends only on S_T.
struct DelayedProblem {
    ModelParams params;
    PayoffSpec spec;
    std::size_t N = 2;    // trading periods, >= 2
    double lambda = 1.0;  // risk aversion, > 0
    // delay is fixed to one grid period (H = T/N)

    // Numerical knobs.
    std::size_t quad_nodes = 40;
    std::size_t s_node_count = 161;
    std::size_t g_node_count = 81;
    double s_span_sds = 6.0;   // s grid: s0 +- span * sigma * sqrt(T)
    double g_span_lip = 4.0;   // g grid: mu/(lambda sigma^2) +- span * Lip(f)

    void validate() const;
    double step() const { return params.T / static_cast<double>(N); }
    std::vector<double> make_s_nodes() const;
    std::vector<double> make_g_nodes() const;
};

/// One stage's value function, stored as log V_j on the (s, g) product grid.
/// Log storage keeps the recursion finite for the large risk aversions of the
/// scaling study; entries are laid out per-g contiguous in s.
struct ValueGrid {
    std::size_t stage = 0;
    std::vector<double> s_nodes;
    std::vector<double> g_nodes;
    std::vector<double> log_values; // index: g * s_nodes.size() + s
    double clamped_mass = 0.0;      // probability-weighted quadrature mass clamped at the s edges

    double log_at(std::size_t si, std::size_t gi) const {
        return log_values[gi * s_nodes.size() + si];
    }
};

struct PriceReport {
    double numerator_log = 0.0;   // log inf E[exp(-lambda (V - F))]
    double denominator_log = 0.0; // -mu^2 T / (2 sigma^2)
    double price = 0.0;           // (numerator_log - denominator_log) / lambda
    // Diagnostics.
    double clamped_mass = 0.0;    // worst probability-weighted clamped mass over stages
    double s_lo = 0.0, s_hi = 0.0, g_lo = 0.0, g_hi = 0.0;
    std::size_t quad_nodes = 0;
};

/// Increment distribution abstraction: Gauss-Hermite for the continuous
/// model, a moment-matched q-point lattice for the tree oracle.
struct IncrementDist {
    std::vector<double> nodes;
    std::vector<double> weights;
};

IncrementDist gaussian_increments(const DelayedProblem& problem);
/// q-point lattice matching mean mu*dt and variance sigma^2*dt (q in {2,3};
/// q = 3 also matches the normal fourth moment).
IncrementDist lattice_increments(const DelayedProblem& problem, std::size_t q = 3);

/// Closed form exp(-mu^2 T / (2 sigma^2)); the denominator of the price
/// ratio, attained by the constant strategy mu/(lambda sigma^2) and hence
/// independent of both lambda and the delay.
double denominator_value(const ModelParams& params, double lambda);

/// log V_{N+1}(s, g) = log E_Z[exp(-lambda (g Z - f(s + Z)))], Z the last
/// period increment. Piecewise-exact: per affine piece of f the integrand is
/// exp(linear) * Gaussian, integrable in closed form via the normal CDF.
double terminal_log_value(double s, double g, const DelayedProblem& problem);
/// Linear-space wrapper; throws OverflowGuard when the exponent exceeds 700.
double terminal_value(double s, double g, const DelayedProblem& problem);

ValueGrid make_terminal_grid(const DelayedProblem& problem);

/// V_j(s, g) = min over c of E_Z[exp(-lambda g Z) V_{j+1}(s + Z, c)].
/// s interpolation: monotone cubic on log values; c search: coarse scan over
/// the g nodes plus golden-section refinement on the bracketing cell.
ValueGrid backward_step(const ValueGrid& v_next, const DelayedProblem& problem);

PriceReport indifference_price_dp(const DelayedProblem& problem);

/// Diagnostic: same DP without the delay (positions chosen on current
/// information); the delayed price can never be below this one.
double zero_delay_price(const DelayedProblem& problem);

/// Exact optimization over the delayed strategy class on a discretized
/// increment distribution, N <= 3: deterministic (gamma_1, gamma_2) plus a
/// per-first-branch gamma_3, all by nested golden-section minimization.
double indifference_price_tree_oracle(const DelayedProblem& problem, std::size_t q = 3);
/// Backward recursion on the same lattice, grid-free (terminal stage in
/// closed form), N <= 3. Must agree with the enumeration oracle.
double indifference_price_tree_dp(const DelayedProblem& problem, std::size_t q = 3);

struct ConvergenceRow {
    std::size_t N = 0;
    double H = 0.0;
    double lambda = 0.0;
    double price = 0.0;
    double limit_value = 0.0;
    double gap = 0.0;
};

/// Prices pi(T/N, A N / T, f) along N_list against a precomputed limit value.
std::vector<ConvergenceRow> convergence_study(double A, const PayoffSpec& spec,
                                              const ModelParams& params,
                                              const std::vector<std::size_t>& N_list,
                                              double limit_val);

} // namespace dhedge

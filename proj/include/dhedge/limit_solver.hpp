#pragma once

#include "dhedge/model.hpp"
#include "dhedge/quadrature.hpp"

#include <vector>

namespace dhedge {

/// Volatility-control limit of the delayed-information indifference price,
/// computed through its transport reformulation: maximize
///   integral of f(s0 + zeta(z)) - (1/(2 A sigma^2)) (zeta(z) - sigma z)^2
/// over maps zeta with zero mean against mu = N(0, T).
struct LimitProblem {
    double A = 1.0; // re-scaled risk aversion, > 0
    ModelParams params;
    PayoffSpec spec;
    QuadratureRule quad; // for N(0, T)

    void validate() const;
};

/// When f is not concave the transported map can jump at the resolved
/// multiplier; the optimum then randomizes the jumping node(s) between the two
/// branches. value and constraint_residual refer to that (relaxed) optimum,
/// zeta_values reports the branch carrying the larger probability.
struct LimitSolution {
    double multiplier = 0.0;            // Lagrange multiplier for the mean constraint
    std::vector<double> zeta_values;    // optimal transported map at the quadrature nodes
    double value = 0.0;                 // objective at the optimum
    double constraint_residual = 0.0;   // |sum_i w_i zeta_i|
    bool penalty_fallback_used = false; // bisection residual exceeded tolerance
};

LimitProblem make_limit_problem(double A, const ModelParams& params, const PayoffSpec& spec,
                                std::size_t quad_nodes = 64);

/// Global maximizer over zeta of
///   f(s0 + zeta) - (1/(2 A sigma^2)) (zeta - sigma z)^2 - multiplier * zeta.
/// Exact per affine piece of f (clamped quadratic vertex); ties break to the
/// smallest zeta.
double pointwise_argmax(double z, double multiplier, const LimitProblem& problem);

/// Multiplier solving sum_i w_i zeta*(z_i) = 0 by bisection on the monotone
/// constraint function; returns the trace point with smallest |residual| and
/// falls back to a quadratic-penalty sweep when the residual stays above
/// tolerance (the pointwise argmax can jump for nonconcave f).
LimitSolution multiplier_root(const LimitProblem& problem, double constraint_tol = 1e-8);

/// Full solve: resolved multiplier, zeta profile, objective value.
LimitSolution limit_value(const LimitProblem& problem, double constraint_tol = 1e-8);

/// Independent oracle for small node counts: dense multiplier sweep with a
/// pointwise grid argmax inside, constraint enforced at grid tolerance.
double limit_value_bruteforce(const LimitProblem& problem, std::size_t zeta_grid_resolution,
                              std::size_t multiplier_sweep = 10000);

} // namespace dhedge

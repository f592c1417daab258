#include "dhedge/limit_solver.hpp"

#include "dhedge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dhedge {

namespace {

struct Piece {
    double lo, hi;    // zeta interval (may be +-inf)
    double slope;     // slope of f on the piece, in zeta coordinates
    double f_at_lo;   // payoff value at the left edge (tail constant for lo = -inf)
};

std::vector<Piece> payoff_pieces(const PayoffSpec& spec, double s0) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<Piece> pieces;
    pieces.push_back({-inf, spec.breakpoints.front() - s0, 0.0, spec.left_tail_value});
    for (std::size_t i = 0; i + 1 < spec.breakpoints.size(); ++i)
        pieces.push_back({spec.breakpoints[i] - s0, spec.breakpoints[i + 1] - s0,
                          spec.slopes[i], spec.values[i]});
    pieces.push_back({spec.breakpoints.back() - s0, inf, 0.0, spec.right_tail_value});
    return pieces;
}

struct ArgmaxResult {
    double zeta;
    double lagrangian; // objective value including the -multiplier*zeta term
};

ArgmaxResult argmax_impl(double z, double multiplier, const LimitProblem& p) {
    const double c = 1.0 / (2.0 * p.A * p.params.sigma * p.params.sigma);
    const double target = p.params.sigma * z;
    const auto pieces = payoff_pieces(p.spec, p.params.s0);

    auto g = [&](const Piece& pc, double zeta) {
        const double anchor = std::isfinite(pc.lo) ? pc.lo : zeta; // tails are flat
        const double fval = pc.f_at_lo + pc.slope * (zeta - anchor);
        const double d = zeta - target;
        return fval - c * d * d - multiplier * zeta;
    };

    double best_zeta = target;
    double best_val = -std::numeric_limits<double>::infinity();
    const double tie_eps = 1e-13 * (1.0 + p.spec.sup_value);
    auto consider = [&](const Piece& pc, double zeta) {
        const double val = g(pc, zeta);
        if (val > best_val + tie_eps || (val > best_val - tie_eps && zeta < best_zeta)) {
            best_val = val;
            best_zeta = zeta;
        }
    };

    for (const auto& pc : pieces) {
        // Each piece of g is a concave quadratic; its clamped vertex is the
        // piece maximum.
        double vertex = target + (pc.slope - multiplier) / (2.0 * c);
        vertex = std::clamp(vertex, pc.lo, pc.hi);
        consider(pc, vertex);
        if (std::isfinite(pc.lo)) consider(pc, pc.lo);
        if (std::isfinite(pc.hi)) consider(pc, pc.hi);
    }
    return {best_zeta, best_val};
}

double constraint_value(double multiplier, const LimitProblem& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.quad.size(); ++i)
        acc += p.quad.weights[i] * argmax_impl(p.quad.nodes[i], multiplier, p).zeta;
    return acc;
}

double objective_at(const LimitProblem& p, const std::vector<double>& zeta) {
    const double c = 1.0 / (2.0 * p.A * p.params.sigma * p.params.sigma);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.quad.size(); ++i) {
        const double d = zeta[i] - p.params.sigma * p.quad.nodes[i];
        acc += p.quad.weights[i] * (eval_payoff(p.spec, p.params.s0 + zeta[i]) - c * d * d);
    }
    return acc;
}

double signed_mean(const LimitProblem& p, const std::vector<double>& zeta) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.quad.size(); ++i) acc += p.quad.weights[i] * zeta[i];
    return acc;
}

LimitSolution solution_at(const LimitProblem& p, double multiplier, bool fallback) {
    LimitSolution sol;
    sol.multiplier = multiplier;
    sol.penalty_fallback_used = fallback;
    sol.zeta_values.resize(p.quad.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < p.quad.size(); ++i) {
        sol.zeta_values[i] = argmax_impl(p.quad.nodes[i], multiplier, p).zeta;
        mean += p.quad.weights[i] * sol.zeta_values[i];
    }
    sol.constraint_residual = std::abs(mean);
    sol.value = objective_at(p, sol.zeta_values);
    return sol;
}

} // namespace

void LimitProblem::validate() const {
    params.validate();
    if (!(A > 0.0)) throw InvalidParameter("LimitProblem: A must be positive");
    if (!spec.validated) throw InvalidParameter("LimitProblem: payoff not validated");
    if (std::abs(quad.variance - params.T) > 1e-12 * params.T)
        throw InvalidParameter("LimitProblem: quadrature variance must equal T");
}

LimitProblem make_limit_problem(double A, const ModelParams& params, const PayoffSpec& spec,
                                std::size_t quad_nodes) {
    LimitProblem p;
    p.A = A;
    p.params = params;
    p.spec = spec;
    p.quad = gauss_quadrature(quad_nodes, 0.0, params.T);
    p.validate();
    return p;
}

double pointwise_argmax(double z, double multiplier, const LimitProblem& problem) {
    return argmax_impl(z, multiplier, problem).zeta;
}

LimitSolution multiplier_root(const LimitProblem& problem, double constraint_tol) {
    problem.validate();

    // G is nonincreasing in the multiplier. Expand a bracket around zero.
    double lo = -1.0, hi = 1.0;
    double g_lo = constraint_value(lo, problem);
    double g_hi = constraint_value(hi, problem);
    while (g_lo < 0.0 && lo > -1e6) {
        lo *= 2.0;
        g_lo = constraint_value(lo, problem);
    }
    while (g_hi > 0.0 && hi < 1e6) {
        hi *= 2.0;
        g_hi = constraint_value(hi, problem);
    }
    if (g_lo < 0.0 || g_hi > 0.0)
        throw BracketingFailure("multiplier_root: no sign change within |multiplier| <= 1e6");

    double best_lambda = std::abs(g_lo) <= std::abs(g_hi) ? lo : hi;
    double best_res = std::min(std::abs(g_lo), std::abs(g_hi));
    auto track = [&](double lambda, double g) {
        if (std::abs(g) < best_res) {
            best_res = std::abs(g);
            best_lambda = lambda;
        }
    };
    track(lo, g_lo);
    track(hi, g_hi);

    while (hi - lo > 1e-10 * (1.0 + std::abs(lo) + std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = constraint_value(mid, problem);
        track(mid, g_mid);
        if (g_mid > 0.0)
            lo = mid;
        else
            hi = mid;
    }

    if (best_res <= constraint_tol) return solution_at(problem, best_lambda, false);

    // For nonconcave f the pointwise argmax jumps at the root multiplier and
    // no deterministic profile meets the constraint: the optimum of the
    // quadrature problem randomizes the jumping node(s) between their two
    // branches. Mix the two bracket-edge profiles so the constraint holds
    // exactly; the objective is linear in that mixture and all branch values
    // share the same Lagrangian, so the mixed value is the relaxed optimum.
    const LimitSolution sol_pos = solution_at(problem, lo, false);
    const LimitSolution sol_neg = solution_at(problem, hi, false);
    const double g_pos = signed_mean(problem, sol_pos.zeta_values);
    const double g_neg = signed_mean(problem, sol_neg.zeta_values);
    if (g_pos >= 0.0 && g_neg <= 0.0 && g_pos - g_neg > 0.0) {
        const double alpha = -g_neg / (g_pos - g_neg);
        LimitSolution mixed = alpha >= 0.5 ? sol_pos : sol_neg;
        mixed.multiplier = 0.5 * (lo + hi);
        mixed.value = alpha * sol_pos.value + (1.0 - alpha) * sol_neg.value;
        mixed.constraint_residual = std::abs(alpha * g_pos + (1.0 - alpha) * g_neg);
        if (mixed.constraint_residual <= constraint_tol) return mixed;
    }

    // Quadratic-penalty fallback: maximize objective - rho * G^2, whose first
    // order condition is the fixed point lambda = 2 rho G(lambda). The map
    // lambda - 2 rho G(lambda) is increasing, so bisection applies.
    for (double rho = 1e2; rho <= 1e12; rho *= 100.0) {
        double plo = -1e6, phi = 1e6;
        for (int it = 0; it < 200 && phi - plo > 1e-12 * (1.0 + std::abs(plo) + std::abs(phi));
             ++it) {
            const double mid = 0.5 * (plo + phi);
            const double h = mid - 2.0 * rho * constraint_value(mid, problem);
            if (h < 0.0)
                plo = mid;
            else
                phi = mid;
        }
        const double lambda = 0.5 * (plo + phi);
        track(lambda, constraint_value(lambda, problem));
    }
    return solution_at(problem, best_lambda, true);
}

LimitSolution limit_value(const LimitProblem& problem, double constraint_tol) {
    return multiplier_root(problem, constraint_tol);
}

double limit_value_bruteforce(const LimitProblem& problem, std::size_t zeta_grid_resolution,
                              std::size_t multiplier_sweep) {
    problem.validate();
    if (problem.quad.size() > 12)
        throw InvalidParameter("limit_value_bruteforce: intended for <= 12 quadrature nodes");

    const double sigma = problem.params.sigma;
    const double c = 1.0 / (2.0 * problem.A * sigma * sigma);
    const double max_slope = std::max(problem.spec.lipschitz(), 1e-3);
    const double lambda_max = max_slope + 1.0;

    // Shared zeta grid covering all nodes' penalty targets, every payoff
    // kink, the exact targets sigma*z_i, and the largest vertex offsets.
    const double offset = (2.0 * max_slope + 1.0) / (2.0 * c);
    double glo = std::numeric_limits<double>::infinity();
    double ghi = -glo;
    for (double z : problem.quad.nodes) {
        glo = std::min(glo, sigma * z);
        ghi = std::max(ghi, sigma * z);
    }
    for (double b : problem.spec.breakpoints) {
        glo = std::min(glo, b - problem.params.s0);
        ghi = std::max(ghi, b - problem.params.s0);
    }
    glo -= offset;
    ghi += offset;

    std::vector<double> grid;
    grid.reserve(zeta_grid_resolution + problem.spec.breakpoints.size() + problem.quad.size());
    for (std::size_t k = 0; k < zeta_grid_resolution; ++k)
        grid.push_back(glo + (ghi - glo) * static_cast<double>(k) /
                                 static_cast<double>(zeta_grid_resolution - 1));
    for (double b : problem.spec.breakpoints) grid.push_back(b - problem.params.s0);
    for (double z : problem.quad.nodes) grid.push_back(sigma * z);
    std::sort(grid.begin(), grid.end());

    std::vector<double> fvals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        fvals[k] = eval_payoff(problem.spec, problem.params.s0 + grid[k]);

    // For a fixed multiplier: grid argmax per node, then the constraint value
    // and the objective.
    struct SweepPoint {
        double g = 0.0, objective = 0.0;
    };
    auto evaluate = [&](double lambda) {
        SweepPoint pt;
        for (std::size_t i = 0; i < problem.quad.size(); ++i) {
            const double target = sigma * problem.quad.nodes[i];
            double best = -std::numeric_limits<double>::infinity();
            double best_zeta = target, best_obj = 0.0;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double d = grid[k] - target;
                const double obj = fvals[k] - c * d * d;
                const double val = obj - lambda * grid[k];
                if (val > best) {
                    best = val;
                    best_zeta = grid[k];
                    best_obj = obj;
                }
            }
            pt.g += problem.quad.weights[i] * best_zeta;
            pt.objective += problem.quad.weights[i] * best_obj;
        }
        return pt;
    };

    double best_res = std::numeric_limits<double>::infinity();
    double best_value = -std::numeric_limits<double>::infinity();
    double prev_lambda = 0.0, prev_g = 0.0;
    bool have_prev = false;
    double blo = 0.0, bhi = 0.0;
    bool have_bracket = false;
    auto track = [&](double lambda, const SweepPoint& pt) {
        // Lagrangian value corrects for the residual left by the sweep step.
        const double corrected = pt.objective - lambda * pt.g;
        if (std::abs(pt.g) < best_res) {
            best_res = std::abs(pt.g);
            best_value = corrected;
        } else if (std::abs(pt.g) <= best_res * (1.0 + 1e-12) && corrected > best_value) {
            best_value = corrected;
        }
    };

    for (std::size_t m = 0; m < multiplier_sweep; ++m) {
        const double lambda = -lambda_max + 2.0 * lambda_max * static_cast<double>(m) /
                                                static_cast<double>(multiplier_sweep - 1);
        const SweepPoint pt = evaluate(lambda);
        track(lambda, pt);
        if (have_prev && prev_g > 0.0 && pt.g <= 0.0 && !have_bracket) {
            blo = prev_lambda;
            bhi = lambda;
            have_bracket = true;
        }
        prev_lambda = lambda;
        prev_g = pt.g;
        have_prev = true;
    }

    // Refine the sign-change bracket with the same grid-based inner argmax.
    if (have_bracket) {
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (blo + bhi);
            const SweepPoint pt = evaluate(mid);
            track(mid, pt);
            if (pt.g > 0.0)
                blo = mid;
            else
                bhi = mid;
        }
    }
    return best_value;
}

} // namespace dhedge

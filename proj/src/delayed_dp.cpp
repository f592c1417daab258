#include "dhedge/delayed_dp.hpp"

#include "dhedge/errors.hpp"
#include "dhedge/golden.hpp"
#include "dhedge/interp.hpp"
#include "dhedge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dhedge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double log_sum_exp(const std::vector<double>& terms) {
    double m = kNegInf;
    for (double t : terms) m = std::max(m, t);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - m);
    return m + std::log(acc);
}

/// Coarse scan over `xs` followed by golden refinement on the bracketing
/// cell. `fn` must accept any x inside [xs.front(), xs.back()].
template <class F>
std::pair<double, double> scan_golden_min(const std::vector<double>& xs, F&& fn,
                                          double xtol = 1e-9) {
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double v = fn(xs[k]);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    if (xs.size() == 1) return {xs[0], best_val};
    const double lo = xs[best == 0 ? 0 : best - 1];
    const double hi = xs[std::min(best + 1, xs.size() - 1)];
    auto [x, v] = golden_minimize(fn, lo, hi, xtol);
    if (best_val < v) return {xs[best], best_val};
    return {x, v};
}

} // namespace

void DelayedProblem::validate() const {
    params.validate();
    if (!spec.validated) throw InvalidParameter("DelayedProblem: payoff not validated");
    if (N < 2) throw InvalidParameter("DelayedProblem: N must be >= 2");
    if (!(lambda > 0.0)) throw InvalidParameter("DelayedProblem: lambda must be positive");
    if (quad_nodes < 2 || s_node_count < 4 || g_node_count < 2)
        throw InvalidParameter("DelayedProblem: degenerate grid configuration");
}

std::vector<double> DelayedProblem::make_s_nodes() const {
    const double half = s_span_sds * params.sigma * std::sqrt(params.T);
    std::vector<double> s(s_node_count);
    for (std::size_t i = 0; i < s_node_count; ++i)
        s[i] = params.s0 - half +
               2.0 * half * static_cast<double>(i) / static_cast<double>(s_node_count - 1);
    return s;
}

std::vector<double> DelayedProblem::make_g_nodes() const {
    const double center = params.mu / (lambda * params.sigma * params.sigma);
    const double lip = spec.lipschitz();
    const double half = lip > 0.0 ? g_span_lip * lip : 1e-6;
    std::vector<double> g(g_node_count);
    for (std::size_t i = 0; i < g_node_count; ++i)
        g[i] = center - half +
               2.0 * half * static_cast<double>(i) / static_cast<double>(g_node_count - 1);
    return g;
}

IncrementDist gaussian_increments(const DelayedProblem& problem) {
    const double dt = problem.step();
    const QuadratureRule rule = gauss_quadrature(problem.quad_nodes, problem.params.mu * dt,
                                                 problem.params.sigma * problem.params.sigma * dt);
    return {rule.nodes, rule.weights};
}

IncrementDist lattice_increments(const DelayedProblem& problem, std::size_t q) {
    const double dt = problem.step();
    const double m = problem.params.mu * dt;
    const double sd = problem.params.sigma * std::sqrt(dt);
    if (q == 2) return {{m - sd, m + sd}, {0.5, 0.5}};
    if (q == 3) {
        const double a = sd * std::sqrt(3.0);
        return {{m - a, m, m + a}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}};
    }
    throw InvalidParameter("lattice_increments: q must be 2 or 3");
}

double denominator_value(const ModelParams& params, double lambda) {
    params.validate();
    if (!(lambda > 0.0)) throw InvalidParameter("denominator_value: lambda must be positive");
    const double mu = params.mu, sigma = params.sigma;
    return std::exp(-mu * mu * params.T / (2.0 * sigma * sigma));
}

double terminal_log_value(double s, double g, const DelayedProblem& problem) {
    const double dt = problem.step();
    const double lambda = problem.lambda;
    const double mz = problem.params.mu * dt;
    const double v = problem.params.sigma * problem.params.sigma * dt;
    const double sd = std::sqrt(v);
    const auto& b = problem.spec.breakpoints;
    const auto& fv = problem.spec.values;

    // Integrand exp(lambda f(s+Z) - lambda g Z) against N(mz, v); each affine
    // piece of f contributes exp(cZ + d) * Gaussian, which integrates to
    // exp(d + c mz + c^2 v / 2) * [Phi(b') - Phi(a')] with shifted bounds.
    std::vector<double> terms;
    auto add_piece = [&](double a_z, double b_z, double slope, double f_anchor,
                         double z_anchor) {
        const double c = lambda * (slope - g);
        const double d = lambda * (f_anchor - slope * z_anchor);
        const double shift = mz + c * v;
        const double hi = std::isfinite(b_z) ? normal_cdf((b_z - shift) / sd) : 1.0;
        const double lo = std::isfinite(a_z) ? normal_cdf((a_z - shift) / sd) : 0.0;
        const double mass = hi - lo;
        if (mass <= 0.0) return;
        terms.push_back(d + c * mz + 0.5 * c * c * v + std::log(mass));
    };

    const double inf = std::numeric_limits<double>::infinity();
    add_piece(-inf, b.front() - s, 0.0, problem.spec.left_tail_value, 0.0);
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
        add_piece(b[i] - s, b[i + 1] - s, problem.spec.slopes[i], fv[i], b[i] - s);
    add_piece(b.back() - s, inf, 0.0, problem.spec.right_tail_value, 0.0);
    return log_sum_exp(terms);
}

double terminal_value(double s, double g, const DelayedProblem& problem) {
    const double lv = terminal_log_value(s, g, problem);
    if (std::abs(lv) > 700.0) {
        std::ostringstream msg;
        msg << "terminal_value: exponent " << lv << " exceeds 700 at s=" << s << " g=" << g;
        throw OverflowGuard(msg.str());
    }
    return std::exp(lv);
}

ValueGrid make_terminal_grid(const DelayedProblem& problem) {
    problem.validate();
    ValueGrid grid;
    grid.stage = problem.N + 1;
    grid.s_nodes = problem.make_s_nodes();
    grid.g_nodes = problem.make_g_nodes();
    const std::size_t ns = grid.s_nodes.size();
    grid.log_values.resize(ns * grid.g_nodes.size());
    parallel_for(grid.g_nodes.size(), [&](std::size_t gi) {
        for (std::size_t si = 0; si < ns; ++si)
            grid.log_values[gi * ns + si] =
                terminal_log_value(grid.s_nodes[si], grid.g_nodes[gi], problem);
    });
    return grid;
}

namespace {

// Probability weights for the clamped-mass diagnostic: terminal-law density
// of S over the s grid.
std::vector<double> s_visit_weights(const DelayedProblem& problem,
                                    const std::vector<double>& s_nodes) {
    const double var = problem.params.sigma * problem.params.sigma * problem.params.T;
    std::vector<double> w(s_nodes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < s_nodes.size(); ++i) {
        const double d = s_nodes[i] - problem.params.s0;
        w[i] = std::exp(-0.5 * d * d / var);
        total += w[i];
    }
    for (auto& x : w) x /= total;
    return w;
}

struct StageInterp {
    std::vector<PchipInterpolant> per_g; // log V_{j+1}(., g_k) in s
};

StageInterp build_stage_interp(const ValueGrid& grid) {
    StageInterp interp;
    const std::size_t ns = grid.s_nodes.size();
    interp.per_g.reserve(grid.g_nodes.size());
    for (std::size_t gi = 0; gi < grid.g_nodes.size(); ++gi)
        interp.per_g.emplace_back(
            std::span<const double>(grid.s_nodes),
            std::span<const double>(grid.log_values.data() + gi * ns, ns));
    return interp;
}

} // namespace

ValueGrid backward_step(const ValueGrid& v_next, const DelayedProblem& problem) {
    problem.validate();
    const IncrementDist inc = gaussian_increments(problem);
    const std::size_t nq = inc.nodes.size();
    const std::size_t ns = v_next.s_nodes.size();
    const std::size_t ng = v_next.g_nodes.size();
    const double lambda = problem.lambda;

    ValueGrid out;
    out.stage = v_next.stage - 1;
    out.s_nodes = v_next.s_nodes;
    out.g_nodes = v_next.g_nodes;
    out.log_values.resize(ns * ng);

    const StageInterp interp = build_stage_interp(v_next);
    std::vector<double> log_w(nq);
    for (std::size_t q = 0; q < nq; ++q) log_w[q] = std::log(inc.weights[q]);

    const std::vector<double> visit_w = s_visit_weights(problem, out.s_nodes);
    std::vector<double> clamp_per_s(ns, 0.0);

    parallel_for(ns, [&](std::size_t si) {
        const double s = out.s_nodes[si];
        // log V_{j+1}(s + Z_q, g_k) for all quadrature nodes and candidate
        // positions; shared across the g loop below.
        std::vector<double> U(nq * ng);
        double clamped = 0.0;
        for (std::size_t q = 0; q < nq; ++q) {
            const double sq = s + inc.nodes[q];
            if (sq < out.s_nodes.front() || sq > out.s_nodes.back()) clamped += inc.weights[q];
            for (std::size_t gi = 0; gi < ng; ++gi) U[q * ng + gi] = interp.per_g[gi](sq);
        }
        clamp_per_s[si] = clamped;

        // Continuous-in-c surrogate: monotone cubic across the g nodes of
        // each quadrature row, used by the golden refinement.
        std::vector<PchipInterpolant> row(nq);
        for (std::size_t q = 0; q < nq; ++q) {
            std::vector<double> col(ng);
            for (std::size_t gi = 0; gi < ng; ++gi) col[gi] = U[q * ng + gi];
            row[q] = PchipInterpolant(std::span<const double>(out.g_nodes),
                                      std::span<const double>(col));
        }

        std::vector<double> terms(nq);
        for (std::size_t gi = 0; gi < ng; ++gi) {
            const double g = out.g_nodes[gi];
            std::vector<double> a(nq);
            for (std::size_t q = 0; q < nq; ++q) a[q] = log_w[q] - lambda * g * inc.nodes[q];

            // Coarse scan over the candidate grid.
            std::size_t best_k = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < ng; ++k) {
                for (std::size_t q = 0; q < nq; ++q) terms[q] = a[q] + U[q * ng + k];
                const double v = log_sum_exp(terms);
                if (v < best) {
                    best = v;
                    best_k = k;
                }
            }
            // Golden refinement on the bracketing cell; no convexity in c is
            // assumed, the scan localizes the minimum first.
            auto objective = [&](double c) {
                for (std::size_t q = 0; q < nq; ++q) terms[q] = a[q] + row[q](c);
                return log_sum_exp(terms);
            };
            const double lo = out.g_nodes[best_k == 0 ? 0 : best_k - 1];
            const double hi = out.g_nodes[std::min(best_k + 1, ng - 1)];
            const auto [c_star, refined] = golden_minimize(objective, lo, hi, 1e-9);
            (void)c_star;
            out.log_values[gi * ns + si] = std::min(best, refined);
        }
    });

    double weighted_clamp = 0.0;
    for (std::size_t si = 0; si < ns; ++si) weighted_clamp += visit_w[si] * clamp_per_s[si];
    out.clamped_mass = std::max(v_next.clamped_mass, weighted_clamp);
    return out;
}

PriceReport indifference_price_dp(const DelayedProblem& problem) {
    problem.validate();
    ValueGrid grid = make_terminal_grid(problem);
    for (std::size_t j = problem.N; j >= 3; --j) grid = backward_step(grid, problem);

    // Initial stage: gamma_1 and gamma_2 are committed on trivial
    // information, so both are deterministic scalars.
    const IncrementDist inc = gaussian_increments(problem);
    const std::size_t nq = inc.nodes.size();
    const std::size_t ng = grid.g_nodes.size();
    const double lambda = problem.lambda;

    const StageInterp interp = build_stage_interp(grid);
    std::vector<double> U(nq * ng);
    for (std::size_t q = 0; q < nq; ++q) {
        const double sq = problem.params.s0 + inc.nodes[q];
        for (std::size_t gi = 0; gi < ng; ++gi) U[q * ng + gi] = interp.per_g[gi](sq);
    }
    std::vector<PchipInterpolant> row(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        std::vector<double> col(ng);
        for (std::size_t gi = 0; gi < ng; ++gi) col[gi] = U[q * ng + gi];
        row[q] = PchipInterpolant(std::span<const double>(grid.g_nodes),
                                  std::span<const double>(col));
    }
    std::vector<double> log_w(nq);
    for (std::size_t q = 0; q < nq; ++q) log_w[q] = std::log(inc.weights[q]);

    auto objective_pair = [&](double g1, double g2) {
        std::vector<double> terms(nq);
        for (std::size_t q = 0; q < nq; ++q)
            terms[q] = log_w[q] - lambda * g1 * inc.nodes[q] + row[q](g2);
        return log_sum_exp(terms);
    };
    auto inner_min = [&](double g1) {
        return scan_golden_min(grid.g_nodes, [&](double g2) { return objective_pair(g1, g2); })
            .second;
    };
    const double numerator_log = scan_golden_min(grid.g_nodes, inner_min).second;

    PriceReport report;
    report.numerator_log = numerator_log;
    report.denominator_log = -problem.params.mu * problem.params.mu * problem.params.T /
                             (2.0 * problem.params.sigma * problem.params.sigma);
    report.price = (report.numerator_log - report.denominator_log) / lambda;
    report.clamped_mass = grid.clamped_mass;
    report.s_lo = grid.s_nodes.front();
    report.s_hi = grid.s_nodes.back();
    report.g_lo = grid.g_nodes.front();
    report.g_hi = grid.g_nodes.back();
    report.quad_nodes = problem.quad_nodes;
    if (!std::isfinite(report.price)) throw OverflowGuard("indifference_price_dp: price overflow");
    return report;
}

double zero_delay_price(const DelayedProblem& problem) {
    problem.validate();
    const IncrementDist inc = gaussian_increments(problem);
    const std::size_t nq = inc.nodes.size();
    const double lambda = problem.lambda;
    const std::vector<double> s_nodes = problem.make_s_nodes();
    const std::vector<double> g_nodes = problem.make_g_nodes();
    const std::size_t ns = s_nodes.size();
    std::vector<double> log_w(nq);
    for (std::size_t q = 0; q < nq; ++q) log_w[q] = std::log(inc.weights[q]);

    // Terminal: log V(s) = lambda f(s).
    std::vector<double> logv(ns);
    for (std::size_t si = 0; si < ns; ++si)
        logv[si] = lambda * eval_payoff(problem.spec, s_nodes[si]);

    auto step_at = [&](const PchipInterpolant& next, double s) {
        auto objective = [&](double c) {
            std::vector<double> terms(nq);
            for (std::size_t q = 0; q < nq; ++q)
                terms[q] = log_w[q] - lambda * c * inc.nodes[q] + next(s + inc.nodes[q]);
            return log_sum_exp(terms);
        };
        return scan_golden_min(g_nodes, objective).second;
    };

    for (std::size_t j = problem.N; j >= 2; --j) {
        const PchipInterpolant next{std::span<const double>(s_nodes),
                                    std::span<const double>(logv)};
        std::vector<double> updated(ns);
        parallel_for(ns, [&](std::size_t si) { updated[si] = step_at(next, s_nodes[si]); });
        logv = std::move(updated);
    }
    const PchipInterpolant next{std::span<const double>(s_nodes), std::span<const double>(logv)};
    const double numerator_log = step_at(next, problem.params.s0);
    const double denominator_log = -problem.params.mu * problem.params.mu * problem.params.T /
                                   (2.0 * problem.params.sigma * problem.params.sigma);
    return (numerator_log - denominator_log) / lambda;
}

namespace {

// Denominator on a lattice distribution: with independent increments the
// infimum factorizes per period and is attained by a constant position.
double denominator_value_on_lattice(const DelayedProblem& problem, const IncrementDist& inc) {
    const double lambda = problem.lambda;
    auto one_period = [&](double g) {
        double acc = 0.0;
        for (std::size_t b = 0; b < inc.nodes.size(); ++b)
            acc += inc.weights[b] * std::exp(-lambda * g * inc.nodes[b]);
        return acc;
    };
    const double center = problem.params.mu / (lambda * problem.params.sigma *
                                               problem.params.sigma);
    const double half = std::abs(center) + 1.0;
    const auto [g_star, value] = golden_minimize(one_period, center - half, center + half, 1e-12);
    (void)g_star;
    return std::pow(value, static_cast<double>(problem.N));
}

std::vector<double> gamma_scan_grid(const DelayedProblem& problem, std::size_t count = 41) {
    const double center = problem.params.mu / (problem.lambda * problem.params.sigma *
                                               problem.params.sigma);
    const double half = 4.0 * problem.spec.lipschitz() + 1.0;
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i)
        xs[i] = center - half + 2.0 * half * static_cast<double>(i) /
                                    static_cast<double>(count - 1);
    return xs;
}

} // namespace

double indifference_price_tree_oracle(const DelayedProblem& problem, std::size_t q) {
    problem.validate();
    if (problem.N > 3)
        throw InvalidParameter("indifference_price_tree_oracle: N must be <= 3");
    const IncrementDist inc = lattice_increments(problem, q);
    const std::size_t nb = inc.nodes.size();
    const double lambda = problem.lambda;
    const double s0 = problem.params.s0;
    const std::vector<double> scan = gamma_scan_grid(problem);

    if (problem.N == 2) {
        auto value = [&](double g1, double g2) {
            double acc = 0.0;
            for (std::size_t i = 0; i < nb; ++i)
                for (std::size_t j = 0; j < nb; ++j) {
                    const double z1 = inc.nodes[i], z2 = inc.nodes[j];
                    const double f = eval_payoff(problem.spec, s0 + z1 + z2);
                    acc += inc.weights[i] * inc.weights[j] *
                           std::exp(-lambda * (g1 * z1 + g2 * z2 - f));
                }
            return acc;
        };
        auto inner = [&](double g1) {
            return scan_golden_min(scan, [&](double g2) { return value(g1, g2); }).second;
        };
        const double numerator = scan_golden_min(scan, inner).second;
        return (std::log(numerator) - std::log(denominator_value_on_lattice(problem, inc))) /
               lambda;
    }

    // N == 3: gamma_3 may depend on the first increment branch.
    auto value = [&](double g1, double g2) {
        double acc = 0.0;
        for (std::size_t b1 = 0; b1 < nb; ++b1) {
            const double z1 = inc.nodes[b1];
            auto tail = [&](double g3) {
                double t = 0.0;
                for (std::size_t b2 = 0; b2 < nb; ++b2)
                    for (std::size_t b3 = 0; b3 < nb; ++b3) {
                        const double z2 = inc.nodes[b2], z3 = inc.nodes[b3];
                        const double f = eval_payoff(problem.spec, s0 + z1 + z2 + z3);
                        t += inc.weights[b2] * inc.weights[b3] *
                             std::exp(-lambda * (g2 * z2 + g3 * z3 - f));
                    }
                return t;
            };
            const double inner = scan_golden_min(scan, tail).second;
            acc += inc.weights[b1] * std::exp(-lambda * g1 * z1) * inner;
        }
        return acc;
    };
    auto inner = [&](double g1) {
        return scan_golden_min(scan, [&](double g2) { return value(g1, g2); }).second;
    };
    const double numerator = scan_golden_min(scan, inner).second;
    return (std::log(numerator) - std::log(denominator_value_on_lattice(problem, inc))) / lambda;
}

double indifference_price_tree_dp(const DelayedProblem& problem, std::size_t q) {
    problem.validate();
    if (problem.N > 3) throw InvalidParameter("indifference_price_tree_dp: N must be <= 3");
    const IncrementDist inc = lattice_increments(problem, q);
    const std::size_t nb = inc.nodes.size();
    const double lambda = problem.lambda;
    const std::vector<double> scan = gamma_scan_grid(problem);

    // Terminal stage, evaluable exactly at any state.
    auto v_terminal = [&](double s, double g) {
        double acc = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            const double z = inc.nodes[b];
            acc += inc.weights[b] *
                   std::exp(-lambda * (g * z - eval_payoff(problem.spec, s + z)));
        }
        return acc;
    };

    auto v3 = [&](double s, double g) {
        if (problem.N == 2) return v_terminal(s, g);
        auto objective = [&](double c) {
            double acc = 0.0;
            for (std::size_t b = 0; b < nb; ++b) {
                const double z = inc.nodes[b];
                acc += inc.weights[b] * std::exp(-lambda * g * z) * v_terminal(s + z, c);
            }
            return acc;
        };
        return scan_golden_min(scan, objective).second;
    };

    auto initial = [&](double g1, double g2) {
        double acc = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            const double z = inc.nodes[b];
            acc += inc.weights[b] * std::exp(-lambda * g1 * z) * v3(problem.params.s0 + z, g2);
        }
        return acc;
    };
    auto inner = [&](double g1) {
        return scan_golden_min(scan, [&](double g2) { return initial(g1, g2); }).second;
    };
    const double numerator = scan_golden_min(scan, inner).second;
    return (std::log(numerator) - std::log(denominator_value_on_lattice(problem, inc))) / lambda;
}

std::vector<ConvergenceRow> convergence_study(double A, const PayoffSpec& spec,
                                              const ModelParams& params,
                                              const std::vector<std::size_t>& N_list,
                                              double limit_val) {
    std::vector<ConvergenceRow> rows;
    for (std::size_t N : N_list) {
        DelayedProblem problem;
        problem.params = params;
        problem.spec = spec;
        problem.N = N;
        const double H = params.T / static_cast<double>(N);
        problem.lambda = A / H;
        const PriceReport report = indifference_price_dp(problem);
        ConvergenceRow row;
        row.N = N;
        row.H = H;
        row.lambda = problem.lambda;
        row.price = report.price;
        row.limit_value = limit_val;
        row.gap = report.price - limit_val;
        rows.push_back(row);
    }
    return rows;
}

} // namespace dhedge

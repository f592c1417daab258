#pragma once

#include "dhedge/model.hpp"
#include "dhedge/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dhedge {

/// Piecewise volatility policy on a deterministic partition of [0, T].
/// Segment j (between t_j and t_{j+1}, j >= 1) maps the latest observed
/// path value to a volatility level through a clamped piecewise-linear
/// function; the initial segment [0, t_1) always runs at the model sigma.
/// Full-history policies can be expressed through the same evaluation hook.
struct PolicyPiece {
    std::vector<double> x;  // abscissae (strictly increasing; a single entry means constant)
    std::vector<double> nu; // volatility levels, clamped outside the x range
};

struct VolatilityPolicy {
    std::vector<double> partition; // 0 = t_0 < ... < t_J = T
    std::vector<PolicyPiece> pieces; // one per segment j = 1..J-1

    double bound() const;     // max |nu| over all pieces
    double lipschitz() const; // max piece slope magnitude

    /// Volatility for segment j given the observed path values
    /// (x_{t_0}, ..., x_{t_{j-1}}); the default pieces read only the last.
    double eval(std::size_t segment_j, std::span<const double> observed, double sigma) const;

    /// Checks the partition, piece shapes and the delay compatibility
    /// condition t_{j-1} <= (t_j - H)^+ required by the construction.
    void validate(double T, double H) const;
};

/// Constant-sigma policy (the trivial measure Q = P when mu = 0).
VolatilityPolicy constant_policy(double T, double nu_before = -1.0);
/// nu = sigma on [0, t_switch), nu = level on [t_switch, T).
VolatilityPolicy piecewise_policy(double T, double t_switch, double level);

/// Simulated ensemble under the relaxed martingale measure: X is sampled
/// directly as a Brownian motion (its law under Q), S is reconstructed
/// pathwise from S_t = s0 + sigma X_t + integral of (mu - sigma kappa). Full
/// paths are streamed; only values at the declared sample times plus the
/// entropy accumulator are retained per path.
struct PathEnsemble {
    double delta = 0.0; // step size
    double H = 0.0;     // delay
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    VolatilityPolicy policy;
    ModelParams params;

    std::vector<double> sample_times;       // sorted, includes T
    std::vector<double> x_at;               // paths x sample_times, row-major
    std::vector<double> s_at;               // ditto
    std::vector<double> kappa_sq_integral;  // per path, trapezoidal
    std::vector<double> drift_integral_at;  // per path x time: S - s0 - sigma X

    double x(std::size_t path, std::size_t t_idx) const {
        return x_at[path * sample_times.size() + t_idx];
    }
    double s(std::size_t path, std::size_t t_idx) const {
        return s_at[path * sample_times.size() + t_idx];
    }
    std::size_t time_index(double t) const; // throws GridMismatch if absent
};

/// Path-dependent drift of the construction:
/// kappa = (mu - (nu_seg - sigma)/H * clamp(x_t - x_{(t-H) v t_j}, -1, 1)) / sigma.
/// `path` holds values on the uniform delta grid up to time t; `shift`
/// perturbs the clamp (used by the negative-control test).
double drift_kappa(std::span<const double> path, double t, double delta,
                   const VolatilityPolicy& policy, double H, const ModelParams& params,
                   double clamp_shift = 0.0);

/// Simulates P paths; requires delta <= H/10 (ResolutionTooCoarse otherwise).
/// Extra observation times may be requested beyond the defaults
/// (partition points and T).
PathEnsemble simulate_paths(const VolatilityPolicy& policy, double H, const ModelParams& params,
                            double delta, std::size_t paths, std::uint64_t seed,
                            std::vector<double> extra_sample_times = {},
                            double clamp_shift = 0.0);

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Relative entropy E_Q[log dQ/dP] = (1/2) E_Q[integral kappa^2]; the scaled
/// quantity H * value is what converges as the delay vanishes.
Estimate entropy_estimate(const PathEnsemble& ensemble);

struct MartingaleStat {
    double s = 0.0, t = 0.0;
    std::string test_function;
    double statistic = 0.0;
    double stderr_ = 0.0;
};

/// Observation times the martingale test needs in the ensemble: for each
/// pair (s, t) the times s, t, tau = (s-H)^+, tau/2 and tau/4.
std::vector<double> martingale_sample_times(const std::vector<std::pair<double, double>>& pairs,
                                            double H);

/// Sample means of (S_t - S_s) h(observed path up to (s-H)^+) for bounded
/// test functions h; the construction predicts zero for all of them.
std::vector<MartingaleStat> relaxed_martingale_test(const PathEnsemble& ensemble,
                                                    const std::vector<std::pair<double, double>>& time_pairs);

/// Weak-duality lower bound E_Q[f(S_T)] - (H/A) * entropy, per-path combined
/// so the standard error accounts for the correlation of the two terms.
Estimate weak_duality_bound(const PathEnsemble& ensemble, double A, const PayoffSpec& spec);

struct EntropyBoundPair {
    std::size_t M = 0;
    Estimate lhs; // entropy estimate
    Estimate rhs; // (1/(2 sigma^2 H)) * M/(M+1) * E[(S - s0 - sigma X)^2 at T_{H/M}]
};

EntropyBoundPair entropy_lower_bound_check(const PathEnsemble& ensemble, std::size_t M);

/// Two-sample Kolmogorov-Smirnov distance between the ensemble's terminal
/// law and the direct sampler of s0 + integral nu dW under P.
double terminal_law_distance(const PathEnsemble& ensemble, std::size_t reference_paths,
                             std::uint64_t reference_seed);

/// Everything the simulate-dual experiment reports.
struct DualReport {
    Estimate entropy;
    double scaled_entropy = 0.0; // H * entropy
    std::vector<MartingaleStat> martingale_stats;
    Estimate weak_duality;
    std::vector<EntropyBoundPair> entropy_bounds;
    double ks_statistic = -1.0;
};

} // namespace dhedge

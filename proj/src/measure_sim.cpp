#include "dhedge/measure_sim.hpp"

#include "dhedge/errors.hpp"
#include "dhedge/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>

namespace dhedge {

namespace {

double clamp_unit(double z) { return std::clamp(z, -1.0, 1.0); }

double interp_on_grid(std::span<const double> path, double delta, double t) {
    if (t <= 0.0) return path.front();
    const double pos = t / delta;
    const std::size_t k = std::min(static_cast<std::size_t>(pos), path.size() - 2);
    const double frac = pos - static_cast<double>(k);
    return path[k] + frac * (path[k + 1] - path[k]);
}

Estimate mean_stderr(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

} // namespace

double VolatilityPolicy::bound() const {
    double b = 0.0;
    for (const auto& piece : pieces)
        for (double v : piece.nu) b = std::max(b, std::abs(v));
    return b;
}

double VolatilityPolicy::lipschitz() const {
    double lip = 0.0;
    for (const auto& piece : pieces)
        for (std::size_t i = 0; i + 1 < piece.x.size(); ++i)
            lip = std::max(lip, std::abs((piece.nu[i + 1] - piece.nu[i]) /
                                         (piece.x[i + 1] - piece.x[i])));
    return lip;
}

double VolatilityPolicy::eval(std::size_t segment_j, std::span<const double> observed,
                              double sigma) const {
    if (segment_j == 0) return sigma;
    const PolicyPiece& piece = pieces.at(segment_j - 1);
    const double x = observed.back();
    if (piece.x.size() == 1 || x <= piece.x.front()) return piece.nu.front();
    if (x >= piece.x.back()) return piece.nu.back();
    const auto it = std::upper_bound(piece.x.begin(), piece.x.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - piece.x.begin()) - 1;
    const double t = (x - piece.x[i]) / (piece.x[i + 1] - piece.x[i]);
    return piece.nu[i] + t * (piece.nu[i + 1] - piece.nu[i]);
}

void VolatilityPolicy::validate(double T, double H) const {
    if (partition.size() < 2 || std::abs(partition.front()) > 1e-12 ||
        std::abs(partition.back() - T) > 1e-9)
        throw InvalidParameter("VolatilityPolicy: partition must run from 0 to T");
    for (std::size_t j = 0; j + 1 < partition.size(); ++j)
        if (!(partition[j] < partition[j + 1]))
            throw InvalidParameter("VolatilityPolicy: partition must strictly increase");
    if (pieces.size() + 2 != partition.size())
        throw InvalidParameter("VolatilityPolicy: need one piece per segment j = 1..J-1");
    for (const auto& piece : pieces) {
        if (piece.x.empty() || piece.x.size() != piece.nu.size())
            throw InvalidParameter("VolatilityPolicy: piece arrays empty or mismatched");
        for (std::size_t i = 0; i + 1 < piece.x.size(); ++i)
            if (!(piece.x[i] < piece.x[i + 1]))
                throw InvalidParameter("VolatilityPolicy: piece abscissae must increase");
        for (double v : piece.nu)
            if (!std::isfinite(v))
                throw InvalidParameter("VolatilityPolicy: non-finite volatility level");
    }
    // The martingale argument needs t_{j-1} <= (t_j - H)^+ for every j.
    for (std::size_t j = 1; j < partition.size(); ++j) {
        const double allowed = std::max(partition[j] - H, 0.0);
        if (partition[j - 1] > allowed + 1e-12)
            throw InvalidParameter(
                "VolatilityPolicy: delay too large for the partition spacing");
    }
}

VolatilityPolicy constant_policy(double T, double nu_level) {
    VolatilityPolicy policy;
    if (nu_level < 0.0) {
        policy.partition = {0.0, T};
    } else {
        policy.partition = {0.0, T / 2.0, T};
        policy.pieces.push_back({{0.0}, {nu_level}});
    }
    return policy;
}

VolatilityPolicy piecewise_policy(double T, double t_switch, double level) {
    VolatilityPolicy policy;
    policy.partition = {0.0, t_switch, T};
    policy.pieces.push_back({{0.0}, {level}});
    return policy;
}

std::size_t PathEnsemble::time_index(double t) const {
    for (std::size_t i = 0; i < sample_times.size(); ++i)
        if (std::abs(sample_times[i] - t) <= 1e-9) return i;
    throw GridMismatch("PathEnsemble: requested time not among the sample times");
}

double drift_kappa(std::span<const double> path, double t, double delta,
                   const VolatilityPolicy& policy, double H, const ModelParams& params,
                   double clamp_shift) {
    const double sigma = params.sigma;
    // Locate the active segment: j >= 1 with t in [t_j, t_{j+1}).
    std::size_t j = 0;
    for (std::size_t k = 1; k + 1 < policy.partition.size(); ++k)
        if (t >= policy.partition[k] - 1e-12) j = k;
    if (j == 0) return params.mu / sigma;

    std::array<double, 16> buf{};
    std::vector<double> spill;
    std::span<double> observed;
    if (j <= buf.size()) {
        observed = std::span<double>(buf.data(), j);
    } else {
        spill.resize(j);
        observed = std::span<double>(spill);
    }
    for (std::size_t k = 0; k < j; ++k)
        observed[k] = interp_on_grid(path, delta, policy.partition[k]);
    const double nu = policy.eval(j, observed, sigma);

    const double t_lag = std::max(t - H, policy.partition[j]);
    const double x_t = interp_on_grid(path, delta, t);
    const double x_lag = interp_on_grid(path, delta, t_lag);
    const double phi = clamp_unit(x_t - x_lag) + clamp_shift;
    return (params.mu - (nu - sigma) / H * phi) / sigma;
}

PathEnsemble simulate_paths(const VolatilityPolicy& policy, double H, const ModelParams& params,
                            double delta, std::size_t paths, std::uint64_t seed,
                            std::vector<double> extra_sample_times, double clamp_shift) {
    params.validate();
    policy.validate(params.T, H);
    if (!(H > 0.0)) throw InvalidParameter("simulate_paths: H must be positive");
    if (delta > H / 10.0 + 1e-12)
        throw ResolutionTooCoarse("simulate_paths: need delta <= H/10");
    if (paths < 1000) throw InvalidParameter("simulate_paths: need at least 1e3 paths");

    const std::size_t steps = static_cast<std::size_t>(std::llround(params.T / delta));
    if (steps < 2 || std::abs(static_cast<double>(steps) * delta - params.T) > 1e-9)
        throw GridMismatch("simulate_paths: delta must divide T");

    PathEnsemble ens;
    ens.delta = delta;
    ens.H = H;
    ens.paths = paths;
    ens.seed = seed;
    ens.policy = policy;
    ens.params = params;

    std::vector<double> times = policy.partition;
    times.push_back(params.T);
    times.insert(times.end(), extra_sample_times.begin(), extra_sample_times.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-9; }),
                times.end());
    ens.sample_times = times;

    const std::size_t nt = times.size();
    ens.x_at.resize(paths * nt);
    ens.s_at.resize(paths * nt);
    ens.drift_integral_at.resize(paths * nt);
    ens.kappa_sq_integral.resize(paths);

    const SeededStream base(seed, 0);
    parallel_for(paths, [&](std::size_t p) {
        SeededStream stream = base.child(p);
        std::vector<double> x(steps + 1);
        std::vector<double> cum_drift(steps + 1);
        x[0] = 0.0;
        cum_drift[0] = 0.0;
        double cum_k2 = 0.0;
        double kappa_prev =
            drift_kappa(std::span<const double>(x.data(), 1), 0.0, delta, policy, H, params,
                        clamp_shift);
        const double sd = std::sqrt(delta);
        for (std::size_t k = 1; k <= steps; ++k) {
            x[k] = x[k - 1] + sd * stream.next_normal();
            const double t_k = static_cast<double>(k) * delta;
            const double kappa =
                drift_kappa(std::span<const double>(x.data(), k + 1), t_k, delta, policy, H,
                            params, clamp_shift);
            const double d_prev = params.mu - params.sigma * kappa_prev;
            const double d_cur = params.mu - params.sigma * kappa;
            cum_drift[k] = cum_drift[k - 1] + 0.5 * delta * (d_prev + d_cur);
            cum_k2 += 0.5 * delta * (kappa_prev * kappa_prev + kappa * kappa);
            kappa_prev = kappa;
        }
        ens.kappa_sq_integral[p] = cum_k2;
        for (std::size_t i = 0; i < nt; ++i) {
            const double xt = interp_on_grid(x, delta, times[i]);
            const double dr = interp_on_grid(cum_drift, delta, times[i]);
            ens.x_at[p * nt + i] = xt;
            ens.drift_integral_at[p * nt + i] = dr;
            ens.s_at[p * nt + i] = params.s0 + params.sigma * xt + dr;
        }
    });
    return ens;
}

Estimate entropy_estimate(const PathEnsemble& ensemble) {
    std::vector<double> half(ensemble.kappa_sq_integral.size());
    for (std::size_t p = 0; p < half.size(); ++p) half[p] = 0.5 * ensemble.kappa_sq_integral[p];
    return mean_stderr(half);
}

std::vector<double> martingale_sample_times(
    const std::vector<std::pair<double, double>>& pairs, double H) {
    std::vector<double> times;
    for (const auto& [s, t] : pairs) {
        const double tau = std::max(s - H, 0.0);
        times.push_back(s);
        times.push_back(t);
        times.push_back(tau);
        times.push_back(tau / 2.0);
        times.push_back(tau / 4.0);
    }
    return times;
}

std::vector<MartingaleStat> relaxed_martingale_test(
    const PathEnsemble& ensemble, const std::vector<std::pair<double, double>>& time_pairs) {
    std::vector<MartingaleStat> stats;
    const std::size_t P = ensemble.paths;
    for (const auto& [s, t] : time_pairs) {
        if (!(s < t)) throw InvalidParameter("relaxed_martingale_test: need s < t");
        const double tau = std::max(s - ensemble.H, 0.0);
        const std::size_t is = ensemble.time_index(s);
        const std::size_t it = ensemble.time_index(t);
        const std::size_t ia = ensemble.time_index(tau);
        const std::size_t ib = ensemble.time_index(tau / 2.0);
        const std::size_t ic = ensemble.time_index(tau / 4.0);

        struct TestFn {
            const char* name;
            std::function<double(double, double, double)> h;
        };
        const std::vector<TestFn> fns = {
            {"one", [](double, double, double) { return 1.0; }},
            {"sign_xa", [](double a, double, double) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }},
            {"clamp_xa", [](double a, double, double) { return clamp_unit(a); }},
            {"clamp_xb_sign_xa",
             [](double a, double b, double) {
                 return clamp_unit(b) * (a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0));
             }},
            {"clamp_xa_xb_xc",
             [](double a, double b, double c) {
                 return clamp_unit(a) * clamp_unit(b) * clamp_unit(c);
             }},
        };

        for (const auto& fn : fns) {
            std::vector<double> samples(P);
            for (std::size_t p = 0; p < P; ++p) {
                const double h = fn.h(ensemble.x(p, ia), ensemble.x(p, ib), ensemble.x(p, ic));
                samples[p] = (ensemble.s(p, it) - ensemble.s(p, is)) * h;
            }
            const Estimate est = mean_stderr(samples);
            stats.push_back({s, t, fn.name, est.value, est.stderr_});
        }
    }
    return stats;
}

Estimate weak_duality_bound(const PathEnsemble& ensemble, double A, const PayoffSpec& spec) {
    if (!(A > 0.0)) throw InvalidParameter("weak_duality_bound: A must be positive");
    const std::size_t iT = ensemble.time_index(ensemble.params.T);
    std::vector<double> samples(ensemble.paths);
    for (std::size_t p = 0; p < ensemble.paths; ++p)
        samples[p] = eval_payoff(spec, ensemble.s(p, iT)) -
                     (ensemble.H / A) * 0.5 * ensemble.kappa_sq_integral[p];
    return mean_stderr(samples);
}

EntropyBoundPair entropy_lower_bound_check(const PathEnsemble& ensemble, std::size_t M) {
    if (M < 1) throw InvalidParameter("entropy_lower_bound_check: M must be >= 1");
    const double h_over_m = ensemble.H / static_cast<double>(M);
    const double ratio = h_over_m / ensemble.delta;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw GridMismatch("entropy_lower_bound_check: delta must divide H/M");
    const double t_max =
        std::floor(ensemble.params.T / h_over_m + 1e-9) * h_over_m; // T_{H/M}
    const std::size_t idx = ensemble.time_index(t_max);

    EntropyBoundPair out;
    out.M = M;
    out.lhs = entropy_estimate(ensemble);
    const double sigma = ensemble.params.sigma;
    const double scale = (1.0 / (2.0 * sigma * sigma * ensemble.H)) *
                         (static_cast<double>(M) / static_cast<double>(M + 1));
    std::vector<double> samples(ensemble.paths);
    for (std::size_t p = 0; p < ensemble.paths; ++p) {
        const double resid = ensemble.drift_integral_at[p * ensemble.sample_times.size() + idx];
        samples[p] = scale * resid * resid;
    }
    out.rhs = mean_stderr(samples);
    return out;
}

double terminal_law_distance(const PathEnsemble& ensemble, std::size_t reference_paths,
                             std::uint64_t reference_seed) {
    const std::size_t iT = ensemble.time_index(ensemble.params.T);
    std::vector<double> sim(ensemble.paths);
    for (std::size_t p = 0; p < ensemble.paths; ++p) sim[p] = ensemble.s(p, iT);

    // Direct sampler of s0 + integral nu dW under P on the policy partition.
    const auto& part = ensemble.policy.partition;
    const double sigma = ensemble.params.sigma;
    std::vector<double> ref(reference_paths);
    const SeededStream base(reference_seed, 1);
    for (std::size_t p = 0; p < reference_paths; ++p) {
        SeededStream stream = base.child(p);
        std::vector<double> w(part.size());
        w[0] = 0.0;
        for (std::size_t j = 1; j < part.size(); ++j)
            w[j] = w[j - 1] + stream.next_normal(0.0, part[j] - part[j - 1]);
        double acc = ensemble.params.s0 + sigma * (w[1] - w[0]); // nu = sigma on [0, t_1)
        for (std::size_t j = 1; j + 1 < part.size(); ++j) {
            const std::span<const double> observed(w.data(), j);
            const double nu = ensemble.policy.eval(j, observed, sigma);
            acc += nu * (w[j + 1] - w[j]);
        }
        ref[p] = acc;
    }

    std::sort(sim.begin(), sim.end());
    std::sort(ref.begin(), ref.end());
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < sim.size() && j < ref.size()) {
        if (sim[i] <= ref[j])
            ++i;
        else
            ++j;
        const double f1 = static_cast<double>(i) / static_cast<double>(sim.size());
        const double f2 = static_cast<double>(j) / static_cast<double>(ref.size());
        ks = std::max(ks, std::abs(f1 - f2));
    }
    return ks;
}

} // namespace dhedge

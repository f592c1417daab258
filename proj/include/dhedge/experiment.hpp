#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dhedge {

/// One experiment run, loadable from a TOML file (flat key = value subset;
/// payoff/params/policy live in JSON sidecar files).
struct ExperimentConfig {
    std::string kind; // limit | discrete | envelope | dual-sim | convergence | acceptance-suite
    std::filesystem::path payoff_file;
    std::filesystem::path params_file;
    std::filesystem::path policy_file;
    double A = 1.0;
    std::size_t N = 8;                   // discrete
    std::vector<std::size_t> N_list;     // convergence
    double lambda = 1.0;
    double H = 0.0;                      // dual-sim delay
    std::size_t paths = 20000;
    std::size_t nodes = 64;              // limit-solver quadrature order
    std::uint64_t seed = 7;
    std::vector<std::size_t> M_list = {1, 2, 5};
    std::filesystem::path out_dir = "out";
    std::size_t threads = 0; // 0 = hardware concurrency

    void validate() const; // throws ConfigParseError
};

ExperimentConfig load_experiment_config(const std::filesystem::path& toml_file);

/// Runs one experiment, writes its artifacts atomically under out_dir and
/// prints a one-line JSON summary to `out`. Returns the process exit code:
/// 0 on success, 1 when an in-config tolerance check fails.
int run_config(const ExperimentConfig& config, std::ostream& out);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Full acceptance suite; writes per-criterion artifacts under out_dir,
/// printing one pass/fail line per criterion to `log`.
std::vector<CriterionResult> run_acceptance(const std::filesystem::path& out_dir,
                                            std::uint64_t seed, std::ostream& log);

} // namespace dhedge

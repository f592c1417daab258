#include "dhedge/errors.hpp"
#include "dhedge/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

// Shared output / parallelism flags.
void add_common(CLI::App* cmd, dhedge::ExperimentConfig& config, std::string& out_dir) {
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    cmd->add_option("--threads", config.threads, "worker thread cap (0 = hardware)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delayed-information hedging and pricing toolkit"};
    app.require_subcommand(1);

    dhedge::ExperimentConfig config;
    std::string out_dir = "out";
    std::string payoff, params, policy;
    std::string config_file;

    auto* limit = app.add_subcommand("price-limit", "vanishing-delay limit price");
    limit->add_option("--payoff", payoff, "payoff JSON")->required();
    limit->add_option("--params", params, "model params JSON")->required();
    limit->add_option("--A", config.A, "re-scaled risk aversion")->required();
    limit->add_option("--nodes", config.nodes, "quadrature nodes")->capture_default_str();
    add_common(limit, config, out_dir);

    auto* discrete = app.add_subcommand("price-discrete", "discrete-time delayed price");
    discrete->add_option("--payoff", payoff, "payoff JSON")->required();
    discrete->add_option("--params", params, "model params JSON")->required();
    discrete->add_option("--N", config.N, "trading periods")->required();
    discrete->add_option("--lambda", config.lambda, "risk aversion")->required();
    add_common(discrete, config, out_dir);

    auto* envelope = app.add_subcommand("envelope", "super-replication price and hedge");
    envelope->add_option("--payoff", payoff, "payoff JSON")->required();
    envelope->add_option("--params", params, "model params JSON")->required();
    add_common(envelope, config, out_dir);

    auto* dual = app.add_subcommand("simulate-dual", "relaxed-measure simulation report");
    dual->add_option("--policy", policy, "volatility policy JSON")->required();
    dual->add_option("--params", params, "model params JSON")->required();
    dual->add_option("--H", config.H, "information delay")->required();
    dual->add_option("--A", config.A, "re-scaled risk aversion")->capture_default_str();
    dual->add_option("--payoff", payoff, "payoff JSON (enables the duality bound)");
    dual->add_option("--paths", config.paths, "Monte Carlo paths")->capture_default_str();
    dual->add_option("--seed", config.seed, "base seed")->capture_default_str();
    add_common(dual, config, out_dir);

    auto* conv = app.add_subcommand("convergence", "price convergence to the limit");
    conv->add_option("--payoff", payoff, "payoff JSON")->required();
    conv->add_option("--params", params, "model params JSON")->required();
    conv->add_option("--A", config.A, "re-scaled risk aversion")->required();
    conv->add_option("--N", config.N_list, "trading-period list")->required()->delimiter(',');
    conv->add_option("--nodes", config.nodes, "quadrature nodes")->capture_default_str();
    add_common(conv, config, out_dir);

    auto* accept = app.add_subcommand("acceptance-suite", "run every acceptance criterion");
    accept->add_option("--seed", config.seed, "base seed")->capture_default_str();
    add_common(accept, config, out_dir);

    auto* run = app.add_subcommand("run", "run an experiment described by a TOML config");
    run->add_option("--config", config_file, "experiment TOML file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            config = dhedge::load_experiment_config(config_file);
        } else {
            config.kind = limit->parsed()      ? "limit"
                          : discrete->parsed() ? "discrete"
                          : envelope->parsed() ? "envelope"
                          : dual->parsed()     ? "dual-sim"
                          : conv->parsed()     ? "convergence"
                                               : "acceptance-suite";
            config.payoff_file = payoff;
            config.params_file = params;
            config.policy_file = policy;
            config.out_dir = out_dir;
        }
        return dhedge::run_config(config, std::cout);
    } catch (const dhedge::ConfigParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

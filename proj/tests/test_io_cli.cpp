#include "dhedge/errors.hpp"
#include "dhedge/experiment.hpp"
#include "dhedge/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace dhedge;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "dhedge_io_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
    const fs::path file = scratch_dir() / name;
    std::ofstream out(file, std::ios::trunc);
    out << content;
    return file;
}

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("payoff and params JSON round-trip") {
    const PayoffSpec spec = butterfly_payoff();
    const fs::path file = write_file("roundtrip_payoff.json", payoff_to_json(spec));
    const PayoffSpec back = load_payoff(file);
    REQUIRE(back.breakpoints.size() == spec.breakpoints.size());
    for (std::size_t i = 0; i < spec.breakpoints.size(); ++i) {
        CHECK(back.breakpoints[i] == spec.breakpoints[i]);
        CHECK(back.values[i] == spec.values[i]);
    }
    CHECK(back.validated);

    ModelParams params;
    params.s0 = 0.25;
    params.mu = -0.3;
    params.T = 1.5;
    const fs::path pfile = write_file("roundtrip_params.json", params_to_json(params));
    const ModelParams pback = load_params(pfile);
    CHECK(pback.s0 == params.s0);
    CHECK(pback.sigma == params.sigma);
    CHECK(pback.mu == params.mu);
    CHECK(pback.T == params.T);
}

TEST_CASE("loaders reject missing and malformed inputs") {
    CHECK_THROWS_AS(load_payoff(scratch_dir() / "no_such_file.json"), ConfigParseError);
    CHECK_THROWS_AS(load_payoff(write_file("broken.json", "{\"breakpoints\": [1, 2")),
                    ConfigParseError);
    CHECK_THROWS_AS(
        load_payoff(write_file("negative.json",
                               "{\"breakpoints\": [0.0, 1.0], \"values\": [-0.5, 1.0]}")),
        ConfigParseError);
    CHECK_THROWS_AS(
        load_params(write_file("badparams.json", "{\"s0\": 0, \"sigma\": 0, \"mu\": 0, \"T\": 1}")),
        ConfigParseError);
    CHECK_THROWS_AS(
        load_policy(write_file("badpolicy.json",
                               "{\"partition\": [0.0, 1.0], \"pieces\": [{\"nu\": [1.0]}]}")),
        ConfigParseError);
}

TEST_CASE("atomic_write replaces content and format_double is stable") {
    const fs::path file = scratch_dir() / "atomic.txt";
    atomic_write(file, "first");
    atomic_write(file, "second");
    CHECK(read_file(file) == "second");
    CHECK(format_double(0.25) == format_double(0.25));
    CHECK(format_double(1.0 / 3.0).size() >= 12);
}

TEST_CASE("experiment config TOML subset") {
    const fs::path payoff = write_file("cfg_payoff.json", payoff_to_json(capped_call_payoff()));
    ModelParams params;
    const fs::path pfile = write_file("cfg_params.json", params_to_json(params));
    const fs::path cfg = write_file("experiment.toml",
                                    "# limit experiment\n"
                                    "kind = \"limit\"\n"
                                    "payoff = \"" + payoff.string() + "\"\n"
                                    "params = \"" + pfile.string() + "\"\n"
                                    "A = 2.0\n"
                                    "nodes = 32\n"
                                    "N = [4, 8]\n"
                                    "M = [1, 2]\n"
                                    "seed = 11\n"
                                    "out_dir = \"" + (scratch_dir() / "out_cfg").string() + "\"\n");
    const ExperimentConfig config = load_experiment_config(cfg);
    CHECK(config.kind == "limit");
    CHECK(config.A == 2.0);
    CHECK(config.nodes == 32);
    REQUIRE(config.N_list.size() == 2);
    CHECK(config.N_list[1] == 8);
    REQUIRE(config.M_list.size() == 2);
    CHECK(config.seed == 11);

    CHECK_THROWS_AS(load_experiment_config(write_file("unknown.toml", "kind = \"limit\"\nbogus = 1\n")),
                    ConfigParseError);
    CHECK_THROWS_AS(load_experiment_config(write_file("dup.toml", "kind = \"limit\"\nkind = \"x\"\n")),
                    ConfigParseError);
    CHECK_THROWS_AS(load_experiment_config(write_file("section.toml", "[limit]\nkind = \"limit\"\n")),
                    ConfigParseError);
    CHECK_THROWS_AS(load_experiment_config(scratch_dir() / "no_such.toml"), ConfigParseError);
    CHECK_THROWS_AS(load_experiment_config(write_file("nokind.toml", "A = 1.0\n")).validate(),
                    ConfigParseError);
}

TEST_CASE("run_config writes deterministic artifacts") {
    ModelParams params;
    params.s0 = 0.5;
    ExperimentConfig config;
    config.kind = "limit";
    config.payoff_file = write_file("run_payoff.json", payoff_to_json(capped_call_payoff()));
    config.params_file = write_file("run_params.json", params_to_json(params));
    config.A = 2.0;
    config.nodes = 32;

    std::ostringstream log_a, log_b;
    config.out_dir = scratch_dir() / "run_a";
    CHECK(run_config(config, log_a) == 0);
    config.out_dir = scratch_dir() / "run_b";
    CHECK(run_config(config, log_b) == 0);
    CHECK(!log_a.str().empty());

    for (const char* name : {"limit.json", "zeta.csv"}) {
        const std::string a = read_file(scratch_dir() / "run_a" / name);
        const std::string b = read_file(scratch_dir() / "run_b" / name);
        REQUIRE(!a.empty());
        CHECK(a == b);
    }

    ExperimentConfig env = config;
    env.kind = "envelope";
    env.out_dir = scratch_dir() / "run_env";
    std::ostringstream env_log;
    CHECK(run_config(env, env_log) == 0);
    CHECK(read_file(scratch_dir() / "run_env" / "envelope.json").find("\"price\"") !=
          std::string::npos);

    ExperimentConfig missing = config;
    missing.payoff_file = scratch_dir() / "no_such_payoff.json";
    std::ostringstream sink;
    CHECK_THROWS_AS(run_config(missing, sink), ConfigParseError);
}

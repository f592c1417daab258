#include "dhedge/io.hpp"

#include "dhedge/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dhedge {

namespace {

nlohmann::json parse_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigParseError("cannot open " + file.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigParseError(file.string() + ": " + e.what());
    }
}

std::vector<double> as_doubles(const nlohmann::json& j, const std::string& key,
                               const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_array())
        throw ConfigParseError(ctx + ": missing array field '" + key + "'");
    try {
        return j[key].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigParseError(ctx + ": field '" + key + "': " + e.what());
    }
}

} // namespace

PayoffSpec load_payoff(const std::filesystem::path& file) {
    const nlohmann::json j = parse_file(file);
    PayoffSpec spec;
    spec.breakpoints = as_doubles(j, "breakpoints", file.string());
    spec.values = as_doubles(j, "values", file.string());
    if (spec.values.empty()) throw ConfigParseError(file.string() + ": empty payoff");
    spec.left_tail_value = spec.values.front();
    spec.right_tail_value = spec.values.back();
    try {
        return validate_payoff(spec);
    } catch (const std::exception& e) {
        throw ConfigParseError(file.string() + ": " + e.what());
    }
}

ModelParams load_params(const std::filesystem::path& file) {
    const nlohmann::json j = parse_file(file);
    ModelParams params;
    for (const char* key : {"s0", "sigma", "mu", "T"})
        if (!j.contains(key) || !j[key].is_number())
            throw ConfigParseError(file.string() + ": missing numeric field '" +
                                   std::string(key) + "'");
    params.s0 = j["s0"].get<double>();
    params.sigma = j["sigma"].get<double>();
    params.mu = j["mu"].get<double>();
    params.T = j["T"].get<double>();
    try {
        params.validate();
    } catch (const std::exception& e) {
        throw ConfigParseError(file.string() + ": " + e.what());
    }
    return params;
}

VolatilityPolicy load_policy(const std::filesystem::path& file) {
    const nlohmann::json j = parse_file(file);
    VolatilityPolicy policy;
    policy.partition = as_doubles(j, "partition", file.string());
    if (!j.contains("pieces") || !j["pieces"].is_array())
        throw ConfigParseError(file.string() + ": missing array field 'pieces'");
    for (const auto& pj : j["pieces"]) {
        PolicyPiece piece;
        piece.x = as_doubles(pj, "x", file.string());
        piece.nu = as_doubles(pj, "nu", file.string());
        policy.pieces.push_back(std::move(piece));
    }
    return policy;
}

std::string payoff_to_json(const PayoffSpec& spec) {
    nlohmann::json j;
    j["breakpoints"] = spec.breakpoints;
    j["values"] = spec.values;
    return j.dump();
}

std::string params_to_json(const ModelParams& params) {
    nlohmann::json j;
    j["s0"] = params.s0;
    j["sigma"] = params.sigma;
    j["mu"] = params.mu;
    j["T"] = params.T;
    return j.dump();
}

void atomic_write(const std::filesystem::path& file, const std::string& content) {
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("atomic_write: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

} // namespace dhedge

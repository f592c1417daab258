#pragma once

#include "dhedge/measure_sim.hpp"
#include "dhedge/model.hpp"

#include <filesystem>
#include <string>

namespace dhedge {

/// Payoff JSON: {"breakpoints": [...], "values": [...]}; tails are implied
/// by the endpoint values. Params JSON: {"s0":, "sigma":, "mu":, "T":}.
/// Policy JSON: {"partition": [...], "pieces": [{"x": [...], "nu": [...]}]}.
/// All loaders throw ConfigParseError on missing files or malformed content.
PayoffSpec load_payoff(const std::filesystem::path& file);
ModelParams load_params(const std::filesystem::path& file);
VolatilityPolicy load_policy(const std::filesystem::path& file);

std::string payoff_to_json(const PayoffSpec& spec);
std::string params_to_json(const ModelParams& params);

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe a partial file.
void atomic_write(const std::filesystem::path& file, const std::string& content);

/// Fixed-precision float formatting used in all CSV/JSON artifacts; keeps
/// re-runs byte-identical.
std::string format_double(double x);

} // namespace dhedge

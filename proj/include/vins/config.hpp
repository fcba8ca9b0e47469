#pragma once

// JSON configuration: every tunable of a simulation. Keys absent from a file
// keep their defaults; unknown keys are rejected.

#include <filesystem>
#include <string>

#include "vins/montecarlo.hpp"

namespace vins {

/// Throws ConfigError on malformed JSON, unknown keys, wrong types or values
/// failing validation.
SimConfig parse_sim_config(const std::string& json_text);
SimConfig load_sim_config(const std::filesystem::path& path);

/// Pretty-printed JSON with every key; parse_sim_config inverts it exactly.
std::string sim_config_to_json(const SimConfig& cfg);

}  // namespace vins

#pragma once

// Declarative experiment configs. Files are YAML; every key is checked
// against the chosen preset, so unknown keys and type mismatches are caught
// with the path of the offending field.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "optrc/experiment.hpp"

namespace optrc {

struct ParsedConfig {
  ExperimentConfig config;
  std::string preset;
  /// Dotted paths whose value came from the preset, not from the file.
  std::vector<std::string> defaults_applied;
  nlohmann::json resolved;
};

std::vector<std::string> preset_names();
/// "slm" or "dmd-basket".
ExperimentConfig preset_config(std::string_view name);

/// `user` may name a preset under "preset"; a non-empty override wins.
ParsedConfig config_from_json(const nlohmann::json& user, std::string_view preset_override = {});
ParsedConfig parse_config_string(std::string_view yaml, std::string_view preset_override = {});
/// Missing or unreadable files raise IoError.
ParsedConfig parse_config(const std::filesystem::path& path, std::string_view preset_override = {});

std::size_t edit_distance(std::string_view a, std::string_view b);
/// "; did you mean 'x'?" for the closest candidate, or empty when nothing is close.
std::string nearest_key_hint(std::string_view key, const std::vector<std::string>& candidates);

}  // namespace optrc

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfsim/harness.hpp"

namespace cfsim {

/// Parses a JSON experiment description. Top-level keys set shared defaults;
/// each entry of "scenarios" may override any of them. An empty document or
/// one without "scenarios" yields the six default scenarios. Unknown keys are
/// rejected; every error names the offending field.
std::vector<ScenarioConfig> parse_config(std::string_view text);

std::vector<ScenarioConfig> load_config(const std::filesystem::path& path);

/// Echo of a fully resolved config set; parse_config() restores it exactly.
nlohmann::ordered_json config_to_json(const std::vector<ScenarioConfig>& configs);

struct ConfigOverrides {
  std::optional<std::uint64_t> master_seed;
  std::optional<std::size_t> n_replicates;
  std::vector<std::string> scenarios;  // ids such as "1a"; empty keeps all
  std::optional<std::vector<Method>> methods;
  std::optional<int> n_trees;
};

std::vector<ScenarioConfig> apply_overrides(std::vector<ScenarioConfig> configs,
                                            const ConfigOverrides& overrides);

/// Comma-separated method list, e.g. "LM,Lasso".
std::vector<Method> parse_method_list(std::string_view text);

}  // namespace cfsim

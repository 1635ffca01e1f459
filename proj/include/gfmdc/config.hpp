#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gfmdc/sim_engine.hpp"

namespace gfmdc {

inline constexpr int kConfigSchemaVersion = 1;

/// Invalid scenario configuration. `field()` is the dotted path of the
/// offending entry (empty for syntax errors, which carry line and column).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, int line = 0, int column = 0);
  const std::string& field() const { return field_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string field_;
  int line_;
  int column_;
};

/// Scenario JSON (schema v1). Missing fields take the values of
/// default_scenario(); unknown fields are rejected. Relative trace paths are
/// resolved against `base_dir`.
ScenarioConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Serializes a config; parse_config(to_json(c)) reproduces c.
std::string config_to_json(const ScenarioConfig& config);

/// One `key=value` assignment. Keys are dotted paths into the JSON document
/// (array entries by index, e.g. `units.0.droop.k_p_pu`); the aliases `dt`,
/// `duration`, `seed` and `bess_enabled` are accepted. Values are parsed as
/// JSON, falling back to a plain string.
struct Override {
  std::string key;
  std::string value;
};

Override parse_override(std::string_view assignment);

/// Applies overrides to a serialized config and parses the result.
ScenarioConfig apply_overrides(const ScenarioConfig& config, const std::vector<Override>& overrides,
                               const std::filesystem::path& base_dir = {});

}  // namespace gfmdc

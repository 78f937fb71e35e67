#pragma once

// Run configuration: a JSON document with a required "schema": 1 field.
// Unknown keys are rejected; see README.md for the full key list.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cwsim/bath_kernel.h"
#include "cwsim/block_engine.h"
#include "cwsim/scenarios.h"

namespace cwsim {

inline constexpr int kConfigSchema = 1;

struct RunConfig {
  ScenarioSpec scenario;
  IntegratorConfig integrator;
  OffdiagBath offdiag_bath = OffdiagBath::mixed;
  double threshold_fraction = 0.5;
  std::optional<double> readout_at;  // defaults to t_final
  std::string output_dir = "out";

  double readout_time() const { return readout_at.value_or(scenario.t_final); }
  bool operator==(const RunConfig&) const = default;
};

/// Thrown for malformed documents. `key` is the dotted path of the
/// offending entry, e.g. "scenario.schedule.g".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Reads and validates a config file. Schema problems raise ConfigError;
/// physical-domain problems (g < 0, overlapping intervals, ...) raise
/// std::invalid_argument from the scenario validators.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text);

/// Canonical JSON form; parse_config_text(to_json_text(c)) == c.
std::string to_json_text(const RunConfig& config, int indent = 2);

}  // namespace cwsim

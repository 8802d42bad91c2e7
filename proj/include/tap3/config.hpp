#pragma once

// Scenario description and its `key = value` text form.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tap3/routing.hpp"

namespace tap3 {

struct ScenarioConfig {
  double area_width = 300;
  double area_height = 300;
  std::uint32_t node_count = 30;
  double max_speed = 25;
  double pause_time = 0;
  double sim_duration = 200;
  std::uint32_t flows = 4;
  double pkt_rate = 4;
  std::uint32_t pkt_size = 256;
  double radio_range = 250;
  ProtocolKind protocol = ProtocolKind::TAP3;
  std::vector<AttackSpec> attackers;
  std::uint64_t rng_seed = 1;
};

/// Thrown for malformed or inconsistent configurations; `fields` lists the
/// offending keys.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::vector<std::string> fields, const std::string& message)
      : std::invalid_argument(message), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

/// Parses config text. Blank lines and `#` comments are ignored; unknown or
/// repeated keys (other than `attacker`) are errors. The result is validated.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Throws ValidationError listing every offending field.
void validate(const ScenarioConfig& config);

std::string to_config_text(const ScenarioConfig& config);

}  // namespace tap3

// Scenario files: YAML with explicit units on every dimensional value,
// e.g. "51 km/h", "0.03 s", "6 m", "-9 m/s^2".
#pragma once

#include "aim/sim.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingFile : ConfigError {
  explicit MissingFile(const std::filesystem::path& p) : ConfigError("no such file: " + p.string()), path(p) {}
  std::filesystem::path path;
};

enum class Unit { Length, Time, Speed, Acceleration };

/// "12 m/s" -> 12, "45 km/h" -> 12.5. Throws ConfigError on a missing or
/// wrong unit.
double parse_quantity(std::string_view text, Unit unit);

/// Parses and validates. Unknown keys are rejected.
ScenarioConfig parse_config(std::string_view yaml);
ScenarioConfig load_config(const std::filesystem::path& path);

} // namespace aim

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "airguard/simworld.hpp"

namespace airguard {

/// Flat dotted-key view over every tunable parameter (safety.*, jet.*,
/// perception.*, latency.*, sim.*, camera.*, marker.*). Unknown keys are
/// rejected with InvalidConfig.
class RunConfig {
 public:
  RunConfig() = default;

  sim::TrialSetup& setup() noexcept { return setup_; }
  const sim::TrialSetup& setup() const noexcept { return setup_; }

  static const std::vector<std::string>& keys();

  void set(std::string_view key, double value);
  double get(std::string_view key) const;

  /// Accepts nested objects ({"safety": {"had_m": 0.4}}) and dotted keys
  /// ({"safety.had_m": 0.4}). Values are numbers or "inf".
  void merge_json(const nlohmann::json& j);
  /// "key=value" as given to --set.
  void apply_override(std::string_view assignment);

  /// Nested, key-ordered, round-trips through merge_json.
  nlohmann::ordered_json to_json() const;
  /// FNV-1a 64 of to_json().dump(), hex.
  std::string hash() const;

  void validate() const { setup_.validate(); }

 private:
  sim::TrialSetup setup_;
};

/// Defaults, then the optional JSON file, then overrides in order; validated.
/// Throws InvalidConfig (or IoFailure for an unreadable file).
RunConfig load_config(const std::optional<std::filesystem::path>& file, std::span<const std::string> overrides);

}  // namespace airguard

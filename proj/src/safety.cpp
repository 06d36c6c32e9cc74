#include "airguard/safety.hpp"

#include <cmath>
#include <string>

#include "airguard/error.hpp"

namespace airguard::safety {

std::string_view to_string(SafetyState s) noexcept {
  switch (s) {
    case SafetyState::Safe: return "SAFE";
    case SafetyState::Active: return "ACTIVE";
    case SafetyState::Danger: return "DANGER";
  }
  return "SAFE";
}

SafetyState parse_state(std::string_view s) {
  if (s == "SAFE") return SafetyState::Safe;
  if (s == "ACTIVE") return SafetyState::Active;
  if (s == "DANGER") return SafetyState::Danger;
  throw Error(ErrorCode::InvalidArgument, "unknown safety state '" + std::string(s) + "'");
}

void SafetyZoneConfig::validate() const {
  if (!(danger > 0.0 && danger < had))
    throw Error(ErrorCode::InvalidConfig, "require 0 < danger < had");
  if (!(hysteresis >= 0.0 && hysteresis < 0.5 * (had - danger)))
    throw Error(ErrorCode::InvalidConfig, "require 0 <= hysteresis < (had - danger) / 2");
}

static void check_distance(double d) {
  if (std::isnan(d) || d < 0.0) throw Error(ErrorCode::NegativeDistance, std::to_string(d));
}

SafetyState classify(double distance, const SafetyZoneConfig& cfg) {
  check_distance(distance);
  if (distance <= cfg.danger) return SafetyState::Danger;
  if (distance <= cfg.had) return SafetyState::Active;
  return SafetyState::Safe;
}

SafetyDecision step(SafetyState prev, double distance, const SafetyZoneConfig& cfg, double timestamp_ms) {
  check_distance(distance);
  SafetyState next = classify(distance, cfg);
  switch (prev) {
    case SafetyState::Safe:
      break;
    case SafetyState::Active:
      if (next == SafetyState::Safe && distance <= cfg.had + cfg.hysteresis) next = SafetyState::Active;
      break;
    case SafetyState::Danger:
      if (distance <= cfg.danger + cfg.hysteresis) {
        next = SafetyState::Danger;
      } else if (distance <= cfg.had + cfg.hysteresis) {
        next = SafetyState::Active;
      }
      break;
  }
  return SafetyDecision{next, next != SafetyState::Safe, distance, timestamp_ms};
}

}  // namespace airguard::safety

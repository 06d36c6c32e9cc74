#pragma once

#include <string_view>

namespace airguard::safety {

enum class SafetyState { Safe = 0, Active = 1, Danger = 2 };

std::string_view to_string(SafetyState s) noexcept;
/// Parses "SAFE" / "ACTIVE" / "DANGER"; throws InvalidArgument otherwise.
SafetyState parse_state(std::string_view s);

/// Haptic activation distance (had) and dangerous proximity distance, meters.
struct SafetyZoneConfig {
  double had = 0.35;
  double danger = 0.25;
  double hysteresis = 0.01;

  void validate() const;
};

struct SafetyDecision {
  SafetyState state = SafetyState::Safe;
  bool actuate = false;
  double distance = 0.0;
  double timestamp_ms = 0.0;
};

/// Memoryless threshold classification. A distance exactly on a threshold
/// falls into the more severe state.
SafetyState classify(double distance, const SafetyZoneConfig& cfg);

/// One transition of the hysteresis state machine.
///   SAFE   follows classify().
///   ACTIVE drops to SAFE only above had + hysteresis.
///   DANGER rises to ACTIVE only above danger + hysteresis, and reaches SAFE
///          only by also clearing had + hysteresis.
SafetyDecision step(SafetyState prev, double distance, const SafetyZoneConfig& cfg,
                    double timestamp_ms = 0.0);

/// Per-marker state cell. Not thread-safe; one owner at a time.
class SafetyMonitor {
 public:
  explicit SafetyMonitor(SafetyZoneConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  SafetyDecision update(double distance, double timestamp_ms) {
    const SafetyDecision d = step(state_, distance, cfg_, timestamp_ms);
    if (d.state != state_) ++transitions_;
    state_ = d.state;
    return d;
  }

  SafetyState state() const noexcept { return state_; }
  long transitions() const noexcept { return transitions_; }
  const SafetyZoneConfig& config() const noexcept { return cfg_; }

 private:
  SafetyZoneConfig cfg_;
  SafetyState state_ = SafetyState::Safe;
  long transitions_ = 0;
};

}  // namespace airguard::safety

#pragma once

#include <cstdint>

#include "airguard/rng.hpp"

namespace airguard::airflow {

inline constexpr double kAirDensity = 1.225;  // kg/m^3, sea level
inline constexpr double kDutyStep = 0.5;      // percent

/// Duty command to the speed controller, quantized to 0.5 % steps.
struct ImpellerCommand {
  double duty = 0.0;
  double timestamp_ms = 0.0;
};

/// Rounds to the nearest 0.5 % step. Throws InvalidArgument outside [0, 100].
double quantize_duty(double duty);

/// Axial velocity of a round free jet: flat over the potential core of
/// length core_k * duct_d, then decaying as 1/x.
struct JetModel {
  double v0 = 25.0;       // m/s at 100 % duty
  double duct_d = 0.064;  // m
  double core_k = 3.0;

  void validate() const;
  double core_length() const noexcept { return core_k * duct_d; }
};

/// Weber-fraction pressure discrimination. The default weber value was fitted
/// so that the mean absolute distance error at 0.25 m is 0.035 m (see
/// sim::calibrate_weber).
struct PerceptionModel {
  double weber = 0.2992;
  double detect_q = 0.5;  // Pa

  void validate() const;
};

double jet_velocity(const JetModel& model, double duty, double x);

/// q = rho v^2 / 2.
double dynamic_pressure(const JetModel& model, double duty, double x);

/// Distance at which the decay branch of the jet produces pressure q.
double invert_pressure(const JetModel& model, double duty, double q);

/// Samples felt pressure q (1 + eps), eps ~ N(0, weber), and maps it back to
/// a distance through the decay branch. Draws whose felt pressure falls below
/// detect_q are redrawn (nothing felt, nothing reported).
/// Throws InsideJetCore when true_x <= core length, ImperceptibleFlow when
/// q(true_x) < detect_q, InvalidArgument when duty <= 0.
double perceived_distance(const PerceptionModel& pm, const JetModel& jm, double duty, double true_x, Rng& rng);
double perceived_distance(const PerceptionModel& pm, const JetModel& jm, double duty, double true_x,
                          std::uint64_t seed);

/// Throws the same errors as perceived_distance for an unusable reference.
void check_perceivable(const PerceptionModel& pm, const JetModel& jm, double duty, double true_x);

/// First-order impeller spin-up/down: reaches 90 % of a step in rise_ms.
class Impeller {
 public:
  explicit Impeller(double rise_ms) : rise_ms_(rise_ms) {}

  void command(double duty) { commanded_ = quantize_duty(duty); }
  void advance(double dt_ms);

  double commanded() const noexcept { return commanded_; }
  /// Effective duty currently delivered to the airflow.
  double output() const noexcept { return output_; }

 private:
  double rise_ms_;
  double commanded_ = 0.0;
  double output_ = 0.0;
};

}  // namespace airguard::airflow

#include "airguard/airflow.hpp"

#include <cmath>
#include <random>
#include <string>

#include "airguard/error.hpp"

namespace airguard::airflow {

double quantize_duty(double duty) {
  if (!(duty >= 0.0 && duty <= 100.0))
    throw Error(ErrorCode::InvalidArgument, "duty " + std::to_string(duty) + " outside [0, 100]");
  return std::round(duty / kDutyStep) * kDutyStep;
}

void JetModel::validate() const {
  if (!(v0 > 0.0 && duct_d > 0.0 && core_k > 0.0))
    throw Error(ErrorCode::InvalidConfig, "jet v0, duct_d and core_k must be positive");
}

void PerceptionModel::validate() const {
  if (!(weber > 0.0)) throw Error(ErrorCode::InvalidConfig, "perception weber must be positive");
  if (!(detect_q > 0.0)) throw Error(ErrorCode::InvalidConfig, "perception detect_q must be positive");
}

double jet_velocity(const JetModel& model, double duty, double x) {
  if (!(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "jet distance must be >= 0");
  const double exit_v = model.v0 * duty / 100.0;
  const double x0 = model.core_length();
  return x <= x0 ? exit_v : exit_v * x0 / x;
}

double dynamic_pressure(const JetModel& model, double duty, double x) {
  const double v = jet_velocity(model, duty, x);
  return 0.5 * kAirDensity * v * v;
}

double invert_pressure(const JetModel& model, double duty, double q) {
  const double exit_v = model.v0 * duty / 100.0;
  return model.core_length() * exit_v / std::sqrt(2.0 * q / kAirDensity);
}

void check_perceivable(const PerceptionModel& pm, const JetModel& jm, double duty, double true_x) {
  if (!(duty > 0.0)) throw Error(ErrorCode::InvalidArgument, "duty must be > 0 to perceive airflow");
  if (!(true_x > jm.core_length()))
    throw Error(ErrorCode::InsideJetCore, "reference " + std::to_string(true_x) +
                                              " m is inside the potential core (" +
                                              std::to_string(jm.core_length()) + " m)");
  if (dynamic_pressure(jm, duty, true_x) < pm.detect_q)
    throw Error(ErrorCode::ImperceptibleFlow, "pressure at " + std::to_string(true_x) + " m below detect_q");
}

double perceived_distance(const PerceptionModel& pm, const JetModel& jm, double duty, double true_x, Rng& rng) {
  check_perceivable(pm, jm, duty, true_x);
  const double q = dynamic_pressure(jm, duty, true_x);
  if (pm.weber == 0.0) return true_x;
  std::normal_distribution<double> eps(0.0, pm.weber);
  double felt = q * (1.0 + eps(rng));
  while (felt < pm.detect_q) felt = q * (1.0 + eps(rng));
  return invert_pressure(jm, duty, felt);
}

double perceived_distance(const PerceptionModel& pm, const JetModel& jm, double duty, double true_x,
                          std::uint64_t seed) {
  Rng rng(seed);
  return perceived_distance(pm, jm, duty, true_x, rng);
}

void Impeller::advance(double dt_ms) {
  if (rise_ms_ <= 0.0) {
    output_ = commanded_;
    return;
  }
  // 90 % of a step after rise_ms: tau = rise_ms / ln(10).
  const double alpha = 1.0 - std::pow(0.1, dt_ms / rise_ms_);
  output_ += (commanded_ - output_) * alpha;
}

}  // namespace airguard::airflow

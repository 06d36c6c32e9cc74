#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "airguard/airflow.hpp"
#include "airguard/geometry.hpp"
#include "airguard/pipeline.hpp"
#include "airguard/safety.hpp"
#include "airguard/stats.hpp"

namespace airguard::sim {

using geometry::Vec3;

/// Feedback condition: visual only, or visual plus airflow.
enum class Condition { V, VA };

std::string_view to_string(Condition c) noexcept;  // "v" / "va"
Condition parse_condition(std::string_view s);

struct Waypoint {
  Vec3 position;
  double dwell_s = 0.0;
};

/// Periodic scripted TCP path. Each leg follows a trapezoidal speed profile;
/// any slack between the motion time and cycle_period is spent at the first
/// waypoint.
struct RobotTrajectory {
  std::vector<Waypoint> waypoints;
  double cycle_period_s = 6.0;
  double speed = 0.2;  // m/s cruise
  double accel = 0.6;  // m/s^2

  void validate() const;
  /// Sum of all leg durations and dwells.
  double motion_time() const;

  /// 4-waypoint plug-in loop in camera coordinates (well within 1.3 m reach).
  static RobotTrajectory plug_in_loop();
};

geometry::TcpPoint robot_tcp_at(const RobotTrajectory& traj, double t_s);

/// Inattentive-participant hand model. The hand is a single point (the
/// wristband marker).
struct HumanModel {
  std::array<Vec3, 2> task_positions{Vec3(0.40, 0.12, 1.15), Vec3(0.34, 0.20, 1.05)};
  double excursion_rate = 0.06;       // lost-item events per second
  double reaction_latency_ms = 250.0;
  double retreat_speed = 0.55;        // m/s
  double attention_p = 0.004;         // per 10 ms tick inside the HAD zone
  double reach_speed = 0.30;          // m/s, never above retreat_speed
  double approach_gain = 4.0;         // 1/s, slowing near a target
  double pick_time_s = 1.5;
  double task_period_s = 5.0;
  double item_r_min = 0.24;           // item distance from the socket point
  double item_r_max = 0.34;
  double item_spread_rad = 0.6;

  void validate() const;
};

/// Everything one trial needs.
struct TrialSetup {
  safety::SafetyZoneConfig safety;
  airflow::JetModel jet;
  airflow::PerceptionModel perception;
  pipeline::StageLatencyModel latency;
  HumanModel human;
  RobotTrajectory robot = RobotTrajectory::plug_in_loop();
  geometry::CameraIntrinsics camera;
  geometry::MarkerSpec marker;
  double pose_noise_px = 0.3;
  double duty_pct = 100.0;  // impeller command while ACTIVE/DANGER in VA
  double tick_ms = 10.0;
  double duration_s = 120.0;

  void validate() const;
};

struct TraceSample {
  std::int64_t t_ms = 0;
  double dist_m = 0.0;
  safety::SafetyState state = safety::SafetyState::Safe;
  double duty_pct = 0.0;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

struct DistanceTrace {
  Condition cond = Condition::V;
  std::uint64_t seed = 0;
  std::vector<TraceSample> samples;
};

/// Per-trial diagnostics not stored in the trace.
struct TrialStats {
  std::size_t excursions = 0;
  std::size_t visual_alarms = 0;
  std::size_t airflow_alarms = 0;
  std::size_t frames_dropped = 0;
  std::size_t frames_failed = 0;
  double max_hand_speed = 0.0;
  /// Delays (ms) from the true distance first dropping below HAD to the first
  /// actuating command, one per exposure episode.
  std::vector<double> reaction_delays_ms;
};

/// Simulates one trial. All random draws come from per-purpose streams
/// derived from `seed` and are consumed identically in both conditions, so
/// V and VA at the same seed differ only through the airflow channel.
DistanceTrace run_trial(Condition cond, const TrialSetup& setup, std::uint64_t seed, TrialStats* stats = nullptr);

/// Mean of samples with distance <= had. Throws NoExposure.
double below_had_mean(const DistanceTrace& trace, const safety::SafetyZoneConfig& cfg);
double below_had_mean(std::span<const double> distances, const safety::SafetyZoneConfig& cfg);

// ---- analysis ---------------------------------------------------------------

struct ConditionSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::optional<stats::TestResult> normality;
};

struct TrialReport {
  std::size_t n_trials = 0;  // matched pairs used
  std::vector<std::uint64_t> seeds;
  std::vector<double> v_means;
  std::vector<double> va_means;
  ConditionSummary v;
  ConditionSummary va;
  std::optional<stats::TestResult> paired;  // paired_t(v, va)
  std::vector<std::string> warnings;
};

/// Matched-pair analysis of per-trial below-HAD means. Test failures
/// (too few samples, zero-variance differences) become warnings.
/// Throws SampleTooSmall when there are no pairs at all.
TrialReport analyze_pairs(std::span<const std::uint64_t> seeds, std::span<const double> v_means,
                          std::span<const double> va_means);

// ---- calibration ------------------------------------------------------------

struct CalibrationTargets {
  double v_mean = 0.307;
  double va_mean = 0.326;
  double exp1_ref_m = 0.25;
  double exp1_err = 0.035;
  double tolerance = 0.005;
};

struct CalibrationOptions {
  int budget = 40;              // simulation-batch evaluations
  std::uint64_t seed = 1;
  std::size_t n_seeds = 32;     // matched trials per evaluation
  std::size_t exp1_samples = 10000;
};

struct CalibrationResult {
  HumanModel human;
  airflow::PerceptionModel perception;
  double v_mean = 0.0;
  double va_mean = 0.0;
  double exp1_err = 0.0;
  int evaluations = 0;
  bool converged = false;

  double v_residual(const CalibrationTargets& t) const { return v_mean - t.v_mean; }
  double va_residual(const CalibrationTargets& t) const { return va_mean - t.va_mean; }
  double exp1_residual(const CalibrationTargets& t) const { return exp1_err - t.exp1_err; }
};

/// Mean |perceived - true| distance over n samples (Monte Carlo, seeded).
double mean_abs_perception_error(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty,
                                 double ref_x, std::size_t n, std::uint64_t seed);

/// Bisection on weber so the mean absolute error at ref_x matches target.
double calibrate_weber(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty, double ref_x,
                       double target_err, std::size_t n, std::uint64_t seed);

/// Coordinate descent over (weber, attention_p, excursion_rate,
/// retreat_speed) starting from `start`. Never throws on a miss; check
/// `converged`.
CalibrationResult calibrate_search(const TrialSetup& start, const CalibrationTargets& targets,
                                   const CalibrationOptions& opts);

/// calibrate_search that throws CalibrationFailed unless every residual is
/// within tolerance (always for budget < 1).
CalibrationResult calibrate(const TrialSetup& start, const CalibrationTargets& targets, const CalibrationOptions& opts);

}  // namespace airguard::sim

#pragma once

// Batch kernels. Each exists twice: `ref` is the plain serial loop kept as the
// reference, `par` is the OpenMP version. Randomness is drawn per item (or per
// fixed-size block) from make_rng(seed, stream, index), so both produce
// identical output for any thread count.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "airguard/airflow.hpp"
#include "airguard/geometry.hpp"
#include "airguard/pipeline.hpp"
#include "airguard/simworld.hpp"

namespace airguard::kernels {

inline constexpr std::size_t kBlockSize = 4096;

namespace stream {
inline constexpr std::uint64_t kPoses = 0x706f7365;
inline constexpr std::uint64_t kPoseNoise = 0x6e6f6973;
inline constexpr std::uint64_t kPerception = 0x70657263;
inline constexpr std::uint64_t kLatency = 0x6c617465;
}  // namespace stream

struct PoseError {
  double rotation_rad = 0.0;
  double translation_m = 0.0;
  bool failed = false;  // estimate_pose threw
};

struct PairOutcome {
  std::uint64_t seed = 0;
  std::optional<double> v;   // below-HAD mean, absent on NoExposure
  std::optional<double> va;
};

/// Poses whose front face is visible (tilt <= max_tilt_rad, any in-plane angle) with
/// depth in [z_min, z_max] whose projection lies inside the image.
std::vector<geometry::MarkerPose> random_poses(std::size_t n, std::uint64_t seed, double z_min, double z_max,
                                               double max_tilt_rad, const geometry::MarkerSpec& spec,
                                               const geometry::CameraIntrinsics& camera);

namespace ref {
std::vector<PoseError> pose_roundtrip(std::span<const geometry::MarkerPose> poses, const geometry::MarkerSpec& spec,
                                      const geometry::CameraIntrinsics& camera, double noise_px, std::uint64_t seed);
std::vector<double> perception_errors(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty,
                                      double ref_x, std::size_t n, std::uint64_t seed);
std::vector<double> latency_samples(const pipeline::StageLatencyModel& model, std::size_t n, std::uint64_t seed);
std::vector<sim::DistanceTrace> run_trials(sim::Condition cond, const sim::TrialSetup& setup,
                                           std::span<const std::uint64_t> seeds);
std::vector<PairOutcome> paired_below_had(const sim::TrialSetup& setup, std::span<const std::uint64_t> seeds);
}  // namespace ref

// Same contracts as ref.
namespace par {
std::vector<PoseError> pose_roundtrip(std::span<const geometry::MarkerPose> poses, const geometry::MarkerSpec& spec,
                                      const geometry::CameraIntrinsics& camera, double noise_px, std::uint64_t seed);
std::vector<double> perception_errors(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty,
                                      double ref_x, std::size_t n, std::uint64_t seed);
std::vector<double> latency_samples(const pipeline::StageLatencyModel& model, std::size_t n, std::uint64_t seed);
std::vector<sim::DistanceTrace> run_trials(sim::Condition cond, const sim::TrialSetup& setup,
                                           std::span<const std::uint64_t> seeds);
std::vector<PairOutcome> paired_below_had(const sim::TrialSetup& setup, std::span<const std::uint64_t> seeds);
}  // namespace par

/// Threads OpenMP will use (1 when built without OpenMP).
int max_threads();

}  // namespace airguard::kernels

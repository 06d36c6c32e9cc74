#pragma once

// Per-item bodies shared by the serial and OpenMP kernels.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "airguard/error.hpp"
#include "airguard/kernels.hpp"

namespace airguard::kernels::detail {

inline PoseError pose_roundtrip_one(const geometry::MarkerPose& truth, const geometry::MarkerSpec& spec,
                                    const geometry::CameraIntrinsics& camera, double noise_px, std::uint64_t seed,
                                    std::size_t index) {
  Rng rng = make_rng(seed, stream::kPoseNoise, index);
  PoseError err;
  try {
    const auto obs = geometry::observe(truth, spec, camera, noise_px, rng);
    const auto est = geometry::estimate_pose(obs, spec, camera);
    err.rotation_rad = geometry::rotation_angle_between(truth.rotation, est.rotation);
    err.translation_m = (truth.translation - est.translation).norm();
  } catch (const Error&) {
    err.failed = true;
  }
  return err;
}

inline std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

inline void perception_block(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty,
                             double ref_x, std::uint64_t seed, std::size_t block, std::vector<double>& out) {
  Rng rng = make_rng(seed, stream::kPerception, block);
  const std::size_t end = std::min(out.size(), (block + 1) * kBlockSize);
  for (std::size_t i = block * kBlockSize; i < end; ++i)
    out[i] = airflow::perceived_distance(pm, jm, duty, ref_x, rng) - ref_x;
}

inline void latency_block(const pipeline::StageLatencyModel& model, std::uint64_t seed, std::size_t block,
                          std::vector<double>& out) {
  Rng rng = make_rng(seed, stream::kLatency, block);
  const std::size_t end = std::min(out.size(), (block + 1) * kBlockSize);
  for (std::size_t i = block * kBlockSize; i < end; ++i) out[i] = pipeline::sample_stages(model, rng).total();
}

inline std::optional<double> below_had_or_none(const sim::DistanceTrace& trace, const safety::SafetyZoneConfig& cfg) {
  try {
    return sim::below_had_mean(trace, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoExposure) throw;
    return std::nullopt;
  }
}

inline PairOutcome pair_one(const sim::TrialSetup& setup, std::uint64_t seed) {
  PairOutcome o;
  o.seed = seed;
  o.v = below_had_or_none(sim::run_trial(sim::Condition::V, setup, seed), setup.safety);
  o.va = below_had_or_none(sim::run_trial(sim::Condition::VA, setup, seed), setup.safety);
  return o;
}

}  // namespace airguard::kernels::detail

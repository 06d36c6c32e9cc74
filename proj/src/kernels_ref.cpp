#include "kernels_common.hpp"

namespace airguard::kernels::ref {

std::vector<PoseError> pose_roundtrip(std::span<const geometry::MarkerPose> poses, const geometry::MarkerSpec& spec,
                                      const geometry::CameraIntrinsics& camera, double noise_px, std::uint64_t seed) {
  std::vector<PoseError> out(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i)
    out[i] = detail::pose_roundtrip_one(poses[i], spec, camera, noise_px, seed, i);
  return out;
}

std::vector<double> perception_errors(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty,
                                      double ref_x, std::size_t n, std::uint64_t seed) {
  airflow::check_perceivable(pm, jm, duty, ref_x);
  std::vector<double> out(n);
  for (std::size_t b = 0; b < detail::block_count(n); ++b) detail::perception_block(pm, jm, duty, ref_x, seed, b, out);
  return out;
}

std::vector<double> latency_samples(const pipeline::StageLatencyModel& model, std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n);
  for (std::size_t b = 0; b < detail::block_count(n); ++b) detail::latency_block(model, seed, b, out);
  return out;
}

std::vector<sim::DistanceTrace> run_trials(sim::Condition cond, const sim::TrialSetup& setup,
                                           std::span<const std::uint64_t> seeds) {
  std::vector<sim::DistanceTrace> out;
  out.reserve(seeds.size());
  for (auto s : seeds) out.push_back(sim::run_trial(cond, setup, s));
  return out;
}

std::vector<PairOutcome> paired_below_had(const sim::TrialSetup& setup, std::span<const std::uint64_t> seeds) {
  std::vector<PairOutcome> out;
  out.reserve(seeds.size());
  for (auto s : seeds) out.push_back(detail::pair_one(setup, s));
  return out;
}

}  // namespace airguard::kernels::ref

namespace airguard::kernels {

std::vector<geometry::MarkerPose> random_poses(std::size_t n, std::uint64_t seed, double z_min, double z_max,
                                               double max_tilt_rad, const geometry::MarkerSpec& spec,
                                               const geometry::CameraIntrinsics& camera) {
  std::vector<geometry::MarkerPose> out;
  out.reserve(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kTwoPi = 6.283185307179586;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, stream::kPoses, i);
    for (;;) {
      const double axis_angle = kTwoPi * unit(rng);
      const double tilt = max_tilt_rad * unit(rng);
      const double spin = kTwoPi * unit(rng);
      const geometry::Vec3 axis(std::cos(axis_angle), std::sin(axis_angle), 0.0);
      geometry::MarkerPose p;
      p.rotation = geometry::rotation_from_vector(tilt * axis) *
                   geometry::rotation_from_vector(geometry::Vec3(0.0, 0.0, spin));
      const double z = z_min + (z_max - z_min) * unit(rng);
      const double u = camera.image_w * (0.1 + 0.8 * unit(rng));
      const double v = camera.image_h * (0.1 + 0.8 * unit(rng));
      p.translation = geometry::Vec3((u - camera.cx) * z / camera.fx, (v - camera.cy) * z / camera.fy, z);
      // Front face must point at the camera (off-axis positions add to the tilt).
      if (p.rotation.col(2).dot(p.translation) <= 0.0) continue;
      try {
        const auto obs = geometry::project(p, spec, camera);
        if (geometry::in_image(obs, camera) && geometry::is_strictly_convex(obs)) {
          out.push_back(p);
          break;
        }
      } catch (const Error&) {
      }
    }
  }
  return out;
}

}  // namespace airguard::kernels

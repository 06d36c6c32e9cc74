#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels_common.hpp"

namespace airguard::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// Exceptions must not leave an OpenMP region; keep the first and rethrow.
class FirstError {
 public:
  template <typename Fn>
  void run(Fn&& fn) noexcept {
    try {
      fn();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!err_) err_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr err_;
};

}  // namespace

namespace par {

std::vector<PoseError> pose_roundtrip(std::span<const geometry::MarkerPose> poses, const geometry::MarkerSpec& spec,
                                      const geometry::CameraIntrinsics& camera, double noise_px, std::uint64_t seed) {
  std::vector<PoseError> out(poses.size());
  const auto n = static_cast<std::ptrdiff_t>(poses.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = detail::pose_roundtrip_one(poses[k], spec, camera, noise_px, seed, k);
  }
  return out;
}

std::vector<double> perception_errors(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty,
                                      double ref_x, std::size_t n, std::uint64_t seed) {
  airflow::check_perceivable(pm, jm, duty, ref_x);
  std::vector<double> out(n);
  const auto blocks = static_cast<std::ptrdiff_t>(detail::block_count(n));
  FirstError err;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b)
    err.run([&] { detail::perception_block(pm, jm, duty, ref_x, seed, static_cast<std::size_t>(b), out); });
  err.rethrow();
  return out;
}

std::vector<double> latency_samples(const pipeline::StageLatencyModel& model, std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n);
  const auto blocks = static_cast<std::ptrdiff_t>(detail::block_count(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) detail::latency_block(model, seed, static_cast<std::size_t>(b), out);
  return out;
}

std::vector<sim::DistanceTrace> run_trials(sim::Condition cond, const sim::TrialSetup& setup,
                                           std::span<const std::uint64_t> seeds) {
  std::vector<sim::DistanceTrace> out(seeds.size());
  const auto n = static_cast<std::ptrdiff_t>(seeds.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    err.run([&] { out[static_cast<std::size_t>(i)] = sim::run_trial(cond, setup, seeds[static_cast<std::size_t>(i)]); });
  err.rethrow();
  return out;
}

std::vector<PairOutcome> paired_below_had(const sim::TrialSetup& setup, std::span<const std::uint64_t> seeds) {
  std::vector<PairOutcome> out(seeds.size());
  const auto n = static_cast<std::ptrdiff_t>(seeds.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    err.run([&] { out[static_cast<std::size_t>(i)] = detail::pair_one(setup, seeds[static_cast<std::size_t>(i)]); });
  err.rethrow();
  return out;
}

}  // namespace par

}  // namespace airguard::kernels

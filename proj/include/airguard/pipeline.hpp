#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "airguard/geometry.hpp"
#include "airguard/mailbox.hpp"
#include "airguard/rng.hpp"
#include "airguard/safety.hpp"

namespace airguard::pipeline {

/// Stage timings in milliseconds. Only the detection figure (30 +/- 2 ms per
/// pose) is measured hardware data; the other stages are budget estimates.
struct StageLatencyModel {
  double capture_ms = 33.3;
  double detect_ms_mean = 30.0;
  double detect_ms_sd = 2.0;
  double decide_ms = 0.5;
  double transmit_ms = 2.0;
  double actuator_rise_ms = 100.0;

  void validate() const;

  /// Observations older than this are flagged stale.
  double stale_flag_ms() const noexcept { return capture_ms + detect_ms_mean + 3.0 * detect_ms_sd; }
  /// Observations older than this are rejected with StaleObservation.
  double stale_limit_ms() const noexcept { return 2.0 * stale_flag_ms(); }
  /// Worst expected (p99) delay from a threshold crossing to the command.
  double reaction_bound_ms() const noexcept { return stale_flag_ms() + decide_ms + transmit_ms; }
};

struct StageSample {
  double detect_ms = 0.0;
  double decide_ms = 0.0;
  double transmit_ms = 0.0;

  double total() const noexcept { return detect_ms + decide_ms + transmit_ms; }
};

/// Detection ~ Normal(mean, sd) truncated at 0 (redrawn when negative);
/// decide and transmit are fixed. Always consumes draws from rng, even for sd = 0.
StageSample sample_stages(const StageLatencyModel& model, Rng& rng);

struct PipelineContext {
  geometry::CameraIntrinsics camera;
  geometry::MarkerSpec marker;
  safety::SafetyZoneConfig safety;
  StageLatencyModel latency;
};

struct PipelineTick {
  double obs_timestamp = 0.0;
  double decision_timestamp = 0.0;
  double command_timestamp = 0.0;
  safety::SafetyDecision decision;
  geometry::MarkerPose pose;
  bool stale = false;
};

/// One sense -> estimate -> decide cycle on the newest completed detection.
/// Processing starts at max(now, obs timestamp). `state` is the caller-owned
/// safety cell and is updated in place.
/// Throws StaleObservation when now - obs timestamp exceeds stale_limit_ms().
PipelineTick run_cycle(double now_ms, const geometry::TagObservation& latest_obs, const geometry::TcpPoint& tcp,
                       safety::SafetyState& state, const PipelineContext& ctx, const StageSample& stages);
PipelineTick run_cycle(double now_ms, const geometry::TagObservation& latest_obs, const geometry::TcpPoint& tcp,
                       safety::SafetyState& state, const PipelineContext& ctx, Rng& rng);

struct LatencySummary {
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

/// Nearest-rank percentile summary; sorts `samples` in place.
LatencySummary summarize_latencies(std::vector<double>& samples);

/// Monte-Carlo distribution of detect + decide + transmit; deterministic in
/// seed and independent of thread count. Throws InvalidArgument for n == 0.
LatencySummary end_to_end_latency(const StageLatencyModel& model, std::size_t n, std::uint64_t seed);

/// Deterministic single-threaded pipeline in simulated time. Frames are
/// offered at capture time; the detector holds one job and a one-slot
/// mailbox in front of it, so frames that arrive while it is busy replace
/// each other and only the freshest is processed.
class SimulatedPipeline {
 public:
  using TcpAt = std::function<geometry::TcpPoint(double t_ms)>;

  SimulatedPipeline(PipelineContext ctx, Rng latency_rng);

  /// Offer a captured frame. Call advance_to(obs.timestamp_ms) first.
  void offer(const geometry::TagObservation& obs);

  /// Completes every detection finishing at or before t_ms; returns the
  /// resulting ticks in completion order. tcp_at supplies the robot TCP at an
  /// observation's capture time.
  std::vector<PipelineTick> advance_to(double t_ms, const TcpAt& tcp_at);

  safety::SafetyState state() const noexcept { return state_; }
  std::size_t dropped_frames() const noexcept { return dropped_; }
  std::size_t processed_frames() const noexcept { return processed_; }
  std::size_t failed_estimates() const noexcept { return failed_; }
  /// Frames waiting for the detector: 0 or 1.
  std::size_t queued() const noexcept { return waiting_.has_value() ? 1 : 0; }

 private:
  struct Job {
    geometry::TagObservation obs;
    double start_ms;
    StageSample stages;
  };

  void start_job(double start_ms);

  PipelineContext ctx_;
  Rng rng_;
  safety::SafetyState state_ = safety::SafetyState::Safe;
  std::optional<geometry::TagObservation> waiting_;
  std::optional<Job> running_;
  double free_at_ = 0.0;
  std::size_t dropped_ = 0;
  std::size_t processed_ = 0;
  std::size_t failed_ = 0;
};

/// Monotonic wall clock in milliseconds; timestamps for ThreadedPipeline.
double steady_clock_ms();

/// Threaded pipeline: detect and decide stages run on their own workers,
/// connected by single-slot overwrite mailboxes. The decide worker owns the
/// safety state cell.
class ThreadedPipeline {
 public:
  using TcpSource = std::function<geometry::TcpPoint()>;
  using Sink = std::function<void(const PipelineTick&)>;

  ThreadedPipeline(PipelineContext ctx, TcpSource tcp, Sink sink);
  ~ThreadedPipeline();

  ThreadedPipeline(const ThreadedPipeline&) = delete;
  ThreadedPipeline& operator=(const ThreadedPipeline&) = delete;

  /// Returns true when a frame still waiting for the detector was replaced.
  bool submit(const geometry::TagObservation& obs) { return frames_.put(obs); }
  void stop();

  std::size_t dropped_frames() const { return frames_.dropped(); }
  std::size_t dropped_poses() const { return poses_.dropped(); }
  std::size_t frame_queue_occupancy() const { return frames_.occupancy(); }
  std::size_t pose_queue_occupancy() const { return poses_.occupancy(); }

 private:
  struct PoseResult {
    geometry::TagObservation obs;
    geometry::MarkerPose pose;
  };

  void detect_loop(std::stop_token st);
  void decide_loop(std::stop_token st);

  PipelineContext ctx_;
  TcpSource tcp_;
  Sink sink_;
  Mailbox<geometry::TagObservation> frames_;
  Mailbox<PoseResult> poses_;
  safety::SafetyState state_ = safety::SafetyState::Safe;
  std::jthread detect_;
  std::jthread decide_;
};

}  // namespace airguard::pipeline

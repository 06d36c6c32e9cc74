#include "airguard/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "airguard/error.hpp"
#include "airguard/kernels.hpp"

namespace airguard::pipeline {

void StageLatencyModel::validate() const {
  for (double v : {capture_ms, detect_ms_mean, detect_ms_sd, decide_ms, transmit_ms, actuator_rise_ms}) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::InvalidConfig, "latency parameters must be finite and non-negative");
  }
}

StageSample sample_stages(const StageLatencyModel& model, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  double detect = model.detect_ms_mean + model.detect_ms_sd * unit(rng);
  while (detect < 0.0) detect = model.detect_ms_mean + model.detect_ms_sd * unit(rng);
  return StageSample{detect, model.decide_ms, model.transmit_ms};
}

PipelineTick run_cycle(double now_ms, const geometry::TagObservation& latest_obs, const geometry::TcpPoint& tcp,
                       safety::SafetyState& state, const PipelineContext& ctx, const StageSample& stages) {
  const double age = now_ms - latest_obs.timestamp_ms;
  if (age > ctx.latency.stale_limit_ms())
    throw Error(ErrorCode::StaleObservation, "observation age " + std::to_string(age) + " ms exceeds " +
                                                 std::to_string(ctx.latency.stale_limit_ms()) + " ms");
  PipelineTick tick;
  tick.obs_timestamp = latest_obs.timestamp_ms;
  tick.stale = age > ctx.latency.stale_flag_ms();
  tick.pose = geometry::estimate_pose(latest_obs, ctx.marker, ctx.camera);

  const double start = std::max(now_ms, latest_obs.timestamp_ms);
  tick.decision_timestamp = start + stages.detect_ms + stages.decide_ms;
  tick.command_timestamp = tick.decision_timestamp + stages.transmit_ms;

  const double d = geometry::marker_to_tcp_distance(tick.pose, tcp);
  tick.decision = safety::step(state, d, ctx.safety, tick.decision_timestamp);
  state = tick.decision.state;
  return tick;
}

PipelineTick run_cycle(double now_ms, const geometry::TagObservation& latest_obs, const geometry::TcpPoint& tcp,
                       safety::SafetyState& state, const PipelineContext& ctx, Rng& rng) {
  return run_cycle(now_ms, latest_obs, tcp, state, ctx, sample_stages(ctx.latency, rng));
}

LatencySummary summarize_latencies(std::vector<double>& samples) {
  LatencySummary s;
  s.n = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  auto rank = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples.size())));
    return samples[std::clamp<std::size_t>(idx, 1, samples.size()) - 1];
  };
  s.p50 = rank(0.50);
  s.p95 = rank(0.95);
  s.p99 = rank(0.99);
  s.max = samples.back();
  return s;
}

LatencySummary end_to_end_latency(const StageLatencyModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "latency sample count must be >= 1");
  std::vector<double> samples = kernels::par::latency_samples(model, n, seed);
  return summarize_latencies(samples);
}

// ---- simulated time ---------------------------------------------------------

SimulatedPipeline::SimulatedPipeline(PipelineContext ctx, Rng latency_rng)
    : ctx_(std::move(ctx)), rng_(std::move(latency_rng)) {}

void SimulatedPipeline::start_job(double start_ms) {
  running_ = Job{*waiting_, start_ms, sample_stages(ctx_.latency, rng_)};
  waiting_.reset();
}

void SimulatedPipeline::offer(const geometry::TagObservation& obs) {
  if (waiting_) ++dropped_;
  waiting_ = obs;
  if (!running_) start_job(std::max(free_at_, obs.timestamp_ms));
}

std::vector<PipelineTick> SimulatedPipeline::advance_to(double t_ms, const TcpAt& tcp_at) {
  std::vector<PipelineTick> out;
  while (running_) {
    const double done = running_->start_ms + running_->stages.detect_ms;
    if (done > t_ms) break;
    const Job job = std::move(*running_);
    running_.reset();
    free_at_ = done;
    ++processed_;
    try {
      out.push_back(run_cycle(job.start_ms, job.obs, tcp_at(job.obs.timestamp_ms), state_, ctx_, job.stages));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateObservation && e.code() != ErrorCode::StaleObservation) throw;
      ++failed_;
    }
    if (waiting_) start_job(std::max(free_at_, waiting_->timestamp_ms));
  }
  return out;
}

// ---- threads ----------------------------------------------------------------

double steady_clock_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

ThreadedPipeline::ThreadedPipeline(PipelineContext ctx, TcpSource tcp, Sink sink)
    : ctx_(std::move(ctx)), tcp_(std::move(tcp)), sink_(std::move(sink)) {
  detect_ = std::jthread([this](std::stop_token st) { detect_loop(st); });
  decide_ = std::jthread([this](std::stop_token st) { decide_loop(st); });
}

ThreadedPipeline::~ThreadedPipeline() { stop(); }

void ThreadedPipeline::stop() {
  detect_.request_stop();
  decide_.request_stop();
  if (detect_.joinable()) detect_.join();
  if (decide_.joinable()) decide_.join();
}

void ThreadedPipeline::detect_loop(std::stop_token st) {
  while (auto obs = frames_.take(st)) {
    try {
      poses_.put(PoseResult{*obs, geometry::estimate_pose(*obs, ctx_.marker, ctx_.camera)});
    } catch (const Error&) {
      // Degenerate frame: nothing to forward.
    }
  }
}

void ThreadedPipeline::decide_loop(std::stop_token st) {
  while (auto res = poses_.take(st)) {
    PipelineTick tick;
    tick.obs_timestamp = res->obs.timestamp_ms;
    tick.pose = res->pose;
    tick.decision_timestamp = std::max(steady_clock_ms(), tick.obs_timestamp);
    tick.command_timestamp = tick.decision_timestamp;
    const double d = geometry::marker_to_tcp_distance(res->pose, tcp_());
    tick.decision = safety::step(state_, d, ctx_.safety, tick.decision_timestamp);
    state_ = tick.decision.state;
    sink_(tick);
  }
}

}  // namespace airguard::pipeline

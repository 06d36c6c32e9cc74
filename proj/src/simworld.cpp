#include "airguard/simworld.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <random>
#include <string>

#include "airguard/error.hpp"

namespace airguard::sim {

namespace {

// Independent random streams of a trial.
enum Stream : std::uint64_t {
  kSchedule = 1,
  kAttention = 2,
  kFeel = 3,
  kLatency = 4,
  kPoseNoise = 5,
};

struct Leg {
  double duration;
  double t_acc;
  double v_peak;
};

Leg plan_leg(double length, double speed, double accel) {
  if (length <= 0.0) return {0.0, 0.0, 0.0};
  const double d_acc = speed * speed / (2.0 * accel);
  if (length >= 2.0 * d_acc) {
    const double t_acc = speed / accel;
    return {2.0 * t_acc + (length - 2.0 * d_acc) / speed, t_acc, speed};
  }
  const double t_acc = std::sqrt(length / accel);
  return {2.0 * t_acc, t_acc, accel * t_acc};
}

double leg_distance(const Leg& leg, double length, double accel, double tau) {
  if (leg.duration <= 0.0) return length;
  tau = std::clamp(tau, 0.0, leg.duration);
  if (tau < leg.t_acc) return 0.5 * accel * tau * tau;
  if (tau > leg.duration - leg.t_acc) {
    const double rem = leg.duration - tau;
    return length - 0.5 * accel * rem * rem;
  }
  return 0.5 * accel * leg.t_acc * leg.t_acc + leg.v_peak * (tau - leg.t_acc);
}

Vec3 rotate_about_y(const Vec3& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return Vec3(c * v.x() + s * v.z(), v.y(), -s * v.x() + c * v.z());
}

// Wristband orientation: turned slightly away from the optical axis.
geometry::Mat3 wristband_rotation() {
  return geometry::rotation_from_vector(Vec3(0.2, -0.3, 0.0));
}

enum class Mode { Working, Shuttling, Reaching, Picking, Returning, Retreating };

bool exposed(Mode m) { return m == Mode::Reaching || m == Mode::Picking || m == Mode::Returning; }

struct Excursion {
  double t_s;
  Vec3 item;
};

}  // namespace

std::string_view to_string(Condition c) noexcept { return c == Condition::V ? "v" : "va"; }

Condition parse_condition(std::string_view s) {
  std::string lower(s);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "v") return Condition::V;
  if (lower == "va") return Condition::VA;
  throw Error(ErrorCode::InvalidArgument, "unknown condition '" + std::string(s) + "'");
}

// ---- robot ------------------------------------------------------------------

void RobotTrajectory::validate() const {
  if (waypoints.size() < 2) throw Error(ErrorCode::InvalidConfig, "robot trajectory needs >= 2 waypoints");
  if (!(speed > 0.0) || !(accel > 0.0)) throw Error(ErrorCode::InvalidConfig, "robot speed and accel must be > 0");
  if (!(cycle_period_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "cycle period must be > 0");
  for (const auto& w : waypoints) {
    if (!w.position.allFinite() || !(w.dwell_s >= 0.0))
      throw Error(ErrorCode::InvalidConfig, "waypoints need finite positions and dwell >= 0");
  }
  if (motion_time() > cycle_period_s + 1e-9)
    throw Error(ErrorCode::InvalidConfig, "cycle period shorter than the trajectory motion time");
}

double RobotTrajectory::motion_time() const {
  double total = 0.0;
  const std::size_t n = waypoints.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double len = (waypoints[(i + 1) % n].position - waypoints[i].position).norm();
    total += waypoints[i].dwell_s + plan_leg(len, speed, accel).duration;
  }
  return total;
}

RobotTrajectory RobotTrajectory::plug_in_loop() {
  RobotTrajectory t;
  t.waypoints = {
      {Vec3(-0.20, -0.08, 1.40), 0.5},  // parked above the charging port
      {Vec3(-0.12, 0.00, 1.30), 0.0},   // pre-insert
      {Vec3(-0.05, 0.02, 1.26), 1.5},   // plug inserted
      {Vec3(-0.15, 0.06, 1.34), 0.0},   // withdraw
  };
  t.cycle_period_s = 6.0;
  t.speed = 0.2;
  t.accel = 0.6;
  return t;
}

geometry::TcpPoint robot_tcp_at(const RobotTrajectory& traj, double t_s) {
  if (!(t_s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "trajectory time must be >= 0");
  const std::size_t n = traj.waypoints.size();
  double phase = std::fmod(t_s, traj.cycle_period_s);
  geometry::TcpPoint out;
  out.timestamp_ms = t_s * 1000.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Waypoint& from = traj.waypoints[i];
    const Waypoint& to = traj.waypoints[(i + 1) % n];
    if (phase < from.dwell_s) {
      out.position = from.position;
      return out;
    }
    phase -= from.dwell_s;
    const Vec3 delta = to.position - from.position;
    const double len = delta.norm();
    const Leg leg = plan_leg(len, traj.speed, traj.accel);
    if (phase < leg.duration) {
      out.position = from.position + delta * (leg_distance(leg, len, traj.accel, phase) / len);
      return out;
    }
    phase -= leg.duration;
  }
  out.position = traj.waypoints.front().position;
  return out;
}

// ---- configuration checks ---------------------------------------------------

void HumanModel::validate() const {
  if (!(attention_p >= 0.0 && attention_p <= 1.0)) throw Error(ErrorCode::InvalidConfig, "attention_p must be in [0, 1]");
  if (!(excursion_rate >= 0.0)) throw Error(ErrorCode::InvalidConfig, "excursion_rate must be >= 0");
  if (!(retreat_speed > 0.0 && reach_speed > 0.0 && approach_gain > 0.0))
    throw Error(ErrorCode::InvalidConfig, "hand speeds and approach gain must be > 0");
  if (!(reaction_latency_ms >= 0.0)) throw Error(ErrorCode::InvalidConfig, "reaction latency must be >= 0");
  if (!(pick_time_s >= 0.0 && task_period_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "bad task timing");
  if (!(item_r_min > 0.0 && item_r_max >= item_r_min)) throw Error(ErrorCode::InvalidConfig, "bad item radius range");
  if (!(item_spread_rad >= 0.0)) throw Error(ErrorCode::InvalidConfig, "item spread must be >= 0");
}

void TrialSetup::validate() const {
  safety.validate();
  jet.validate();
  if (!(perception.detect_q > 0.0) || !(perception.weber >= 0.0))
    throw Error(ErrorCode::InvalidConfig, "perception parameters out of range");
  latency.validate();
  human.validate();
  robot.validate();
  camera.validate();
  marker.validate();
  if (!(pose_noise_px >= 0.0)) throw Error(ErrorCode::InvalidConfig, "pose noise must be >= 0");
  if (!(duty_pct > 0.0 && duty_pct <= 100.0)) throw Error(ErrorCode::InvalidConfig, "duty must be in (0, 100]");
  if (!(tick_ms > 0.0)) throw Error(ErrorCode::InvalidConfig, "tick must be > 0");
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "duration must be > 0");
}

// ---- trial ------------------------------------------------------------------

DistanceTrace run_trial(Condition cond, const TrialSetup& setup, std::uint64_t seed, TrialStats* stats) {
  setup.validate();
  const HumanModel& hm = setup.human;
  const double dt = setup.tick_ms / 1000.0;
  const auto n_ticks = static_cast<std::int64_t>(std::floor(setup.duration_s * 1000.0 / setup.tick_ms + 1e-9));

  // Lost-item schedule, drawn up front so both conditions see the same events.
  Rng sched = make_rng(seed, kSchedule);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double robot_phase = setup.robot.cycle_period_s * unit(sched);
  std::deque<Excursion> schedule;
  {
    const Vec3 socket = setup.robot.waypoints[std::min<std::size_t>(2, setup.robot.waypoints.size() - 1)].position;
    const Vec3 toward = (hm.task_positions[0] - socket).normalized();
    double t = 0.0;
    if (hm.excursion_rate > 0.0) {
      std::exponential_distribution<double> gap(hm.excursion_rate);
      for (;;) {
        t += gap(sched);
        const double r = hm.item_r_min + (hm.item_r_max - hm.item_r_min) * unit(sched);
        const double ang = hm.item_spread_rad * (2.0 * unit(sched) - 1.0);
        const double dy = 0.04 * (2.0 * unit(sched) - 1.0);
        if (t >= setup.duration_s) break;
        schedule.push_back({t, socket + r * rotate_about_y(toward, ang) + Vec3(0.0, dy, 0.0)});
      }
    }
  }

  Rng attention_rng = make_rng(seed, kAttention);
  Rng feel_rng = make_rng(seed, kFeel);
  Rng pose_rng = make_rng(seed, kPoseNoise);
  std::normal_distribution<double> feel_noise(0.0, 1.0);

  pipeline::PipelineContext ctx{setup.camera, setup.marker, setup.safety, setup.latency};
  pipeline::SimulatedPipeline pipe(ctx, make_rng(seed, kLatency));
  airflow::Impeller impeller(setup.latency.actuator_rise_ms);
  const geometry::Mat3 marker_rot = wristband_rotation();

  auto tcp_at = [&](double t_ms) { return robot_tcp_at(setup.robot, robot_phase + t_ms / 1000.0); };

  Vec3 hand = hm.task_positions[0];
  int task_index = 0;
  Mode mode = Mode::Working;
  Vec3 target = hand;
  double mode_until = hm.task_period_s;  // next shuttle or end of pick
  double retreat_at = -1.0;               // pending alarm, seconds
  const double reach_speed = std::min(hm.reach_speed, hm.retreat_speed);

  std::deque<pipeline::PipelineTick> pending;
  safety::SafetyState logged_state = safety::SafetyState::Safe;
  double next_capture_ms = 0.0;
  bool was_below = false;
  double crossing_ms = -1.0;

  TrialStats local;
  DistanceTrace trace;
  trace.cond = cond;
  trace.seed = seed;
  trace.samples.reserve(static_cast<std::size_t>(n_ticks));

  for (std::int64_t k = 0; k < n_ticks; ++k) {
    const double t_ms = static_cast<double>(k) * setup.tick_ms;
    const double t_s = t_ms / 1000.0;
    const geometry::TcpPoint tcp = tcp_at(t_ms);

    // Camera frames captured up to now, then detections completed up to now.
    while (next_capture_ms <= t_ms) {
      for (auto& tick : pipe.advance_to(next_capture_ms, tcp_at)) pending.push_back(tick);
      geometry::MarkerPose marker{marker_rot, hand};
      geometry::TagObservation obs = geometry::observe(marker, setup.marker, setup.camera, setup.pose_noise_px, pose_rng);
      obs.timestamp_ms = next_capture_ms;
      if (geometry::in_image(obs, setup.camera)) pipe.offer(obs);
      next_capture_ms += setup.latency.capture_ms;
      if (setup.latency.capture_ms <= 0.0) break;
    }
    for (auto& tick : pipe.advance_to(t_ms, tcp_at)) pending.push_back(tick);
    while (!pending.empty() && pending.front().command_timestamp <= t_ms) {
      const auto& tick = pending.front();
      logged_state = tick.decision.state;
      if (cond == Condition::VA) impeller.command(tick.decision.actuate ? setup.duty_pct : 0.0);
      if (tick.decision.actuate && crossing_ms >= 0.0) {
        local.reaction_delays_ms.push_back(tick.command_timestamp - crossing_ms);
        crossing_ms = -1.0;
      }
      pending.pop_front();
    }

    const double dist = (hand - tcp.position).norm();
    impeller.advance(setup.tick_ms);
    trace.samples.push_back({static_cast<std::int64_t>(std::llround(t_ms)), dist, logged_state, impeller.commanded()});

    const bool below = dist <= setup.safety.had;
    if (below && !was_below && logged_state == safety::SafetyState::Safe) crossing_ms = t_ms;
    if (!below) crossing_ms = -1.0;
    was_below = below;

    // One draw per stream per tick, whatever the state, keeps streams aligned.
    const double look = unit(attention_rng);
    const double eps = feel_noise(feel_rng);

    if (exposed(mode) && retreat_at < 0.0) {
      bool noticed = false;
      if (below && look < hm.attention_p) {
        noticed = true;
        ++local.visual_alarms;
      }
      const double felt =
          airflow::dynamic_pressure(setup.jet, impeller.output(), dist) * (1.0 + setup.perception.weber * eps);
      if (!noticed && felt >= setup.perception.detect_q) {
        noticed = true;
        ++local.airflow_alarms;
      }
      if (noticed) retreat_at = t_s + hm.reaction_latency_ms / 1000.0;
    }

    // Lost-item events only start an excursion while the hand is on task.
    while (!schedule.empty() && schedule.front().t_s <= t_s) {
      if (mode == Mode::Working || mode == Mode::Shuttling) {
        mode = Mode::Reaching;
        target = schedule.front().item;
        ++local.excursions;
      }
      schedule.pop_front();
    }
    if (retreat_at >= 0.0 && t_s >= retreat_at) {
      mode = Mode::Retreating;
      target = hm.task_positions[task_index];
      retreat_at = -1.0;
    }

    double speed_cap = reach_speed;
    switch (mode) {
      case Mode::Working:
        if (t_s >= mode_until) {
          task_index = 1 - task_index;
          target = hm.task_positions[task_index];
          mode = Mode::Shuttling;
        }
        break;
      case Mode::Picking:
        if (t_s >= mode_until) {
          mode = Mode::Returning;
          target = hm.task_positions[task_index];
        }
        break;
      case Mode::Retreating:
        speed_cap = hm.retreat_speed;
        break;
      default:
        break;
    }

    const Vec3 to_target = target - hand;
    const double remaining = to_target.norm();
    if (remaining > 0.0) {
      const double speed = std::min(speed_cap, hm.approach_gain * remaining + 0.02);
      const double step = std::min(speed * dt, remaining);
      hand += to_target * (step / remaining);
      local.max_hand_speed = std::max(local.max_hand_speed, step / dt);
    }
    if ((hand - target).norm() < 1e-4) {
      switch (mode) {
        case Mode::Reaching:
          mode = Mode::Picking;
          mode_until = t_s + hm.pick_time_s;
          break;
        case Mode::Shuttling:
        case Mode::Returning:
        case Mode::Retreating:
          mode = Mode::Working;
          retreat_at = -1.0;
          mode_until = t_s + hm.task_period_s;
          break;
        default:
          break;
      }
    }
  }

  local.frames_dropped = pipe.dropped_frames();
  local.frames_failed = pipe.failed_estimates();
  if (stats) *stats = std::move(local);
  return trace;
}

double below_had_mean(std::span<const double> distances, const safety::SafetyZoneConfig& cfg) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double d : distances) {
    if (d <= cfg.had) {
      sum += d;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::NoExposure, "no samples at or below HAD");
  return sum / static_cast<double>(n);
}

double below_had_mean(const DistanceTrace& trace, const safety::SafetyZoneConfig& cfg) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : trace.samples) {
    if (s.dist_m <= cfg.had) {
      sum += s.dist_m;
      ++n;
    }
  }
  if (n == 0)
    throw Error(ErrorCode::NoExposure, "trial " + std::string(to_string(trace.cond)) + "/" +
                                           std::to_string(trace.seed) + " never entered the HAD zone");
  return sum / static_cast<double>(n);
}

// ---- analysis ---------------------------------------------------------------

namespace {

ConditionSummary summarize_condition(std::span<const double> means, const char* name,
                                     std::vector<std::string>& warnings) {
  ConditionSummary out;
  const auto s = stats::summarize(means);
  out.n = s.n;
  out.mean = s.mean;
  out.sd = s.sd.value_or(0.0);
  try {
    out.normality = stats::shapiro_wilk(means);
  } catch (const Error& e) {
    warnings.push_back(std::string("Shapiro-Wilk (") + name + "): " + e.what());
  }
  return out;
}

}  // namespace

TrialReport analyze_pairs(std::span<const std::uint64_t> seeds, std::span<const double> v_means,
                          std::span<const double> va_means) {
  if (seeds.size() != v_means.size() || seeds.size() != va_means.size())
    throw Error(ErrorCode::LengthMismatch, "seeds and per-condition means must align");
  if (seeds.empty()) throw Error(ErrorCode::SampleTooSmall, "no matched trial pairs");
  TrialReport r;
  r.n_trials = seeds.size();
  r.seeds.assign(seeds.begin(), seeds.end());
  r.v_means.assign(v_means.begin(), v_means.end());
  r.va_means.assign(va_means.begin(), va_means.end());
  r.v = summarize_condition(v_means, "v", r.warnings);
  r.va = summarize_condition(va_means, "va", r.warnings);
  try {
    r.paired = stats::paired_t(v_means, va_means);
  } catch (const Error& e) {
    r.warnings.push_back(std::string("paired t-test: ") + e.what());
  }
  return r;
}

}  // namespace airguard::sim

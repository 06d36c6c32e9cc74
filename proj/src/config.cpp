#include "airguard/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

#include "airguard/error.hpp"

namespace airguard {

namespace {

struct Field {
  std::function<double&(sim::TrialSetup&)> ref;
};

// Integer-valued fields are stored as doubles in the table and converted here.
struct IntField {
  std::function<int&(sim::TrialSetup&)> ref;
};

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    auto add = [&](const char* key, auto getter) { t.emplace(key, Field{getter}); };
    add("safety.had_m", [](sim::TrialSetup& s) -> double& { return s.safety.had; });
    add("safety.danger_m", [](sim::TrialSetup& s) -> double& { return s.safety.danger; });
    add("safety.hysteresis_m", [](sim::TrialSetup& s) -> double& { return s.safety.hysteresis; });
    add("jet.v0_mps", [](sim::TrialSetup& s) -> double& { return s.jet.v0; });
    add("jet.duct_d_m", [](sim::TrialSetup& s) -> double& { return s.jet.duct_d; });
    add("jet.core_k", [](sim::TrialSetup& s) -> double& { return s.jet.core_k; });
    add("perception.weber", [](sim::TrialSetup& s) -> double& { return s.perception.weber; });
    add("perception.detect_q_pa", [](sim::TrialSetup& s) -> double& { return s.perception.detect_q; });
    add("latency.capture_ms", [](sim::TrialSetup& s) -> double& { return s.latency.capture_ms; });
    add("latency.detect_ms_mean", [](sim::TrialSetup& s) -> double& { return s.latency.detect_ms_mean; });
    add("latency.detect_ms_sd", [](sim::TrialSetup& s) -> double& { return s.latency.detect_ms_sd; });
    add("latency.decide_ms", [](sim::TrialSetup& s) -> double& { return s.latency.decide_ms; });
    add("latency.transmit_ms", [](sim::TrialSetup& s) -> double& { return s.latency.transmit_ms; });
    add("latency.actuator_rise_ms", [](sim::TrialSetup& s) -> double& { return s.latency.actuator_rise_ms; });
    add("sim.duration_s", [](sim::TrialSetup& s) -> double& { return s.duration_s; });
    add("sim.tick_ms", [](sim::TrialSetup& s) -> double& { return s.tick_ms; });
    add("sim.duty_pct", [](sim::TrialSetup& s) -> double& { return s.duty_pct; });
    add("sim.pose_noise_px", [](sim::TrialSetup& s) -> double& { return s.pose_noise_px; });
    add("sim.attention_p", [](sim::TrialSetup& s) -> double& { return s.human.attention_p; });
    add("sim.excursion_rate", [](sim::TrialSetup& s) -> double& { return s.human.excursion_rate; });
    add("sim.retreat_speed_mps", [](sim::TrialSetup& s) -> double& { return s.human.retreat_speed; });
    add("sim.reaction_latency_ms", [](sim::TrialSetup& s) -> double& { return s.human.reaction_latency_ms; });
    add("sim.reach_speed_mps", [](sim::TrialSetup& s) -> double& { return s.human.reach_speed; });
    add("sim.approach_gain", [](sim::TrialSetup& s) -> double& { return s.human.approach_gain; });
    add("sim.pick_time_s", [](sim::TrialSetup& s) -> double& { return s.human.pick_time_s; });
    add("sim.task_period_s", [](sim::TrialSetup& s) -> double& { return s.human.task_period_s; });
    add("sim.item_r_min_m", [](sim::TrialSetup& s) -> double& { return s.human.item_r_min; });
    add("sim.item_r_max_m", [](sim::TrialSetup& s) -> double& { return s.human.item_r_max; });
    add("sim.item_spread_rad", [](sim::TrialSetup& s) -> double& { return s.human.item_spread_rad; });
    add("sim.robot_speed_mps", [](sim::TrialSetup& s) -> double& { return s.robot.speed; });
    add("sim.robot_accel_mps2", [](sim::TrialSetup& s) -> double& { return s.robot.accel; });
    add("sim.robot_cycle_s", [](sim::TrialSetup& s) -> double& { return s.robot.cycle_period_s; });
    add("camera.fx", [](sim::TrialSetup& s) -> double& { return s.camera.fx; });
    add("camera.fy", [](sim::TrialSetup& s) -> double& { return s.camera.fy; });
    add("camera.cx", [](sim::TrialSetup& s) -> double& { return s.camera.cx; });
    add("camera.cy", [](sim::TrialSetup& s) -> double& { return s.camera.cy; });
    add("marker.side_m", [](sim::TrialSetup& s) -> double& { return s.marker.side_len; });
    return t;
  }();
  return table;
}

const std::map<std::string, IntField, std::less<>>& int_fields() {
  static const std::map<std::string, IntField, std::less<>> table = {
      {"camera.width", {[](sim::TrialSetup& s) -> int& { return s.camera.image_w; }}},
      {"camera.height", {[](sim::TrialSetup& s) -> int& { return s.camera.image_h; }}},
      {"marker.id", {[](sim::TrialSetup& s) -> int& { return s.marker.id; }}},
  };
  return table;
}

double parse_value(std::string_view key, const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::InvalidConfig, "value for '" + std::string(key) + "' must be a number");
}

void flatten(const nlohmann::json& j, const std::string& prefix, RunConfig& cfg) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "configuration must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, cfg);
    } else {
      cfg.set(key, parse_value(key, *it));
    }
  }
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : fields()) k.push_back(name);
    for (const auto& [name, _] : int_fields()) k.push_back(name);
    std::sort(k.begin(), k.end());
    return k;
  }();
  return all;
}

void RunConfig::set(std::string_view key, double value) {
  if (std::isnan(value)) throw Error(ErrorCode::InvalidConfig, "value for '" + std::string(key) + "' is NaN");
  if (auto it = fields().find(key); it != fields().end()) {
    it->second.ref(setup_) = value;
    return;
  }
  if (auto it = int_fields().find(key); it != int_fields().end()) {
    if (value != std::floor(value) || std::abs(value) > 1e9)
      throw Error(ErrorCode::InvalidConfig, "value for '" + std::string(key) + "' must be an integer");
    it->second.ref(setup_) = static_cast<int>(value);
    return;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown configuration key '" + std::string(key) + "'");
}

double RunConfig::get(std::string_view key) const {
  auto& s = const_cast<sim::TrialSetup&>(setup_);
  if (auto it = fields().find(key); it != fields().end()) return it->second.ref(s);
  if (auto it = int_fields().find(key); it != int_fields().end()) return it->second.ref(s);
  throw Error(ErrorCode::InvalidConfig, "unknown configuration key '" + std::string(key) + "'");
}

void RunConfig::merge_json(const nlohmann::json& j) { flatten(j, "", *this); }

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw Error(ErrorCode::InvalidConfig, "override must be key=value, got '" + std::string(assignment) + "'");
  const std::string_view key = assignment.substr(0, eq);
  const std::string value(assignment.substr(eq + 1));
  if (value == "inf" || value == "infinity") {
    set(key, std::numeric_limits<double>::infinity());
    return;
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error(ErrorCode::InvalidConfig, "cannot parse '" + value + "' as a number for '" + std::string(key) + "'");
  set(key, v);
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& key : keys()) {
    const auto dot = key.find('.');
    const double v = get(key);
    auto& slot = out[key.substr(0, dot)][key.substr(dot + 1)];
    if (std::isinf(v)) {
      slot = "inf";
    } else if (int_fields().count(key)) {
      slot = static_cast<int>(v);
    } else {
      slot = v;
    }
  }
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig load_config(const std::optional<std::filesystem::path>& file, std::span<const std::string> overrides) {
  RunConfig cfg;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read config " + file->string());
    const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config " + file->string() + " is not valid JSON");
    cfg.merge_json(j);
  }
  for (const auto& o : overrides) cfg.apply_override(o);
  cfg.validate();
  return cfg;
}

}  // namespace airguard

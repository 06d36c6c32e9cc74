// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airguard/kernels.hpp"
#include "airguard/pipeline.hpp"
#include "airguard/rng.hpp"
#include "airguard/safety.hpp"
#include "airguard/simworld.hpp"
#include "airguard/stats.hpp"
#include "airguard/wire.hpp"
#include "cli.hpp"

using namespace airguard;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAIL]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Pose round trip.
Outcome c1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  geometry::MarkerSpec spec;
  geometry::CameraIntrinsics cam;
  const double tilt = 45.0 * M_PI / 180.0;

  const auto poses = kernels::random_poses(1000, 1, 0.3, 2.0, tilt, spec, cam);
  const auto clean = kernels::par::pose_roundtrip(poses, spec, cam, 0.0, 1);
  double max_r = 0, max_t = 0;
  std::size_t failed = 0;
  for (const auto& e : clean) {
    failed += e.failed;
    max_r = std::max(max_r, e.rotation_rad);
    max_t = std::max(max_t, e.translation_m);
  }
  o.require(poses.size() == 1000 && failed == 0 && max_r <= 1e-6 && max_t <= 1e-6,
            "noiseless max err " + fmt("%.1e rad", max_r) + " / " + fmt("%.1e m", max_t));

  const auto at_1m = kernels::random_poses(1000, 2, 1.0, 1.0, tilt, spec, cam);
  const auto noisy = kernels::par::pose_roundtrip(at_1m, spec, cam, 0.5, 2);
  std::vector<double> t_err;
  for (const auto& e : noisy)
    if (!e.failed) t_err.push_back(e.translation_m);
  const double med = median(t_err);
  o.require(med <= 0.005, "0.5 px median translation at 1 m " + fmt("%.2f mm", med * 1e3) + " (need <= 5 mm)");

  const double secs = seconds_since(t0);
  o.require(secs <= 10.0, fmt("%.2f s", secs));
  return o;
}

// Safety state machine.
Outcome c2() {
  Outcome o;
  const safety::SafetyZoneConfig cfg;
  bool table_ok = true;
  for (int mm = 0; mm <= 1000; ++mm) {
    const double d = mm / 1000.0;
    const auto expect = d <= cfg.danger ? safety::SafetyState::Danger
                        : d <= cfg.had  ? safety::SafetyState::Active
                                        : safety::SafetyState::Safe;
    if (safety::classify(d, cfg) != expect) table_ok = false;
    const auto s = safety::step(safety::SafetyState::Safe, d, cfg);
    if (s.state != expect || s.actuate != (expect != safety::SafetyState::Safe)) table_ok = false;
  }
  o.require(table_ok, "1001-point classify sweep");

  long worst = 0;
  std::mt19937_64 rng(5);
  for (double centre : {cfg.had, cfg.danger}) {
    std::uniform_real_distribution<double> band(centre - cfg.hysteresis / 2 + 1e-9, centre + cfg.hysteresis / 2 - 1e-9);
    for (int run = 0; run < 100; ++run) {
      safety::SafetyMonitor m(cfg);
      m.update(centre + 0.05, 0);  // start on the far side so the first crossing counts
      const long before = m.transitions();
      for (int i = 1; i <= 1000; ++i) m.update(band(rng), i);
      worst = std::max(worst, m.transitions() - before);
    }
  }
  o.require(worst <= 2, "band oscillation: at most " + std::to_string(worst) + " transitions incl. the first");
  return o;
}

double t_tail_by_quadrature(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto f = [&](double s) { return c * std::pow(1 + s * s / df, -(df + 1) / 2); };
  const int n = 200000;
  const double h = std::abs(t) / n;
  double sum = f(0) + f(std::abs(t));
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4 : 2) * f(i * h);
  return 1 - 2 * sum * h / 3;
}

// Statistics kernel.
Outcome c3() {
  Outcome o;
  const auto pt = stats::paired_t(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 2, 5, 3});
  o.require(std::abs(pt.statistic + 0.774597) <= 1e-6 && pt.df && *pt.df == 3.0,
            "paired T " + fmt("%.6f", pt.statistic));

  const double w1 = stats::shapiro_wilk(std::vector<double>{1, 2, 3}).statistic;
  const double w2 = stats::shapiro_wilk(std::vector<double>{1, 2, 10}).statistic;
  // n = 3: W = 3/2 * (x3 - x1)^2 / (2 * SS)
  const double ss = [] {
    const double m = 13.0 / 3;
    return (1 - m) * (1 - m) + (2 - m) * (2 - m) + (10 - m) * (10 - m);
  }();
  const double w2_oracle = 0.5 * 81.0 / ss;
  o.require(std::abs(w1 - 1.0) <= 1e-6 && std::abs(w2 - w2_oracle) <= 1e-6 && std::abs(w2 - 0.8322) <= 1e-3,
            "SW n=3 " + fmt("%.6f", w1) + ", " + fmt("%.6f", w2));

  double worst = 0;
  for (double df : {3.0, 9.0, 30.0})
    for (double t = 0.0; t <= 10.0; t += 0.25)
      worst = std::max(worst, std::abs(stats::student_t_two_sided_p(t, df) - t_tail_by_quadrature(t, df)));
  o.require(worst <= 1e-6, "t p-value vs quadrature " + fmt("%.1e", worst));

  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng = make_rng(seed, 0x5357);
    std::normal_distribution<double> n01;
    std::vector<double> x(10);
    for (auto& v : x) v = n01(rng);
    rejected += stats::shapiro_wilk(x).p_value < 0.05;
  }
  o.require(rejected >= 30 && rejected <= 70, "SW false rejection " + fmt("%.1f%%", rejected / 10.0));
  return o;
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream so, se;
  const int code = cli::run(args, so, se);
  if (out) *out = so.str();
  return code;
}

// Perceived-distance error.
Outcome c4() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto err_at = [&](const char* d) -> double {
    std::string text;
    if (run_cli({"perceive", "--distance", d, "--samples", "10000", "--seed", "1", "--json"}, &text) != 0) return NAN;
    return nlohmann::json::parse(text)["mean_abs_error_m"].get<double>();
  };
  const double e25 = err_at("0.25");
  const double e35 = err_at("0.35");
  o.require(std::abs(e25 - 0.035) <= 0.005, "0.25 m " + fmt("%.4f m", e25));
  o.require(std::abs(e35 - 0.051) <= 0.010, "0.35 m " + fmt("%.4f m", e35));
  const double secs = seconds_since(t0);
  o.require(secs <= 5.0, fmt("%.2f s", secs));
  return o;
}

// Paired V/VA below-HAD means.
Outcome c5() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const sim::TrialSetup setup;
  std::vector<std::uint64_t> seeds(100);
  std::iota(seeds.begin(), seeds.end(), 1);
  const auto pairs = kernels::par::paired_below_had(setup, seeds);
  std::vector<std::uint64_t> used;
  std::vector<double> v, va;
  for (const auto& p : pairs) {
    if (!p.v || !p.va) continue;
    used.push_back(p.seed);
    v.push_back(*p.v);
    va.push_back(*p.va);
  }
  const auto rep = sim::analyze_pairs(used, v, va);
  o.require(rep.n_trials >= 100, std::to_string(rep.n_trials) + " pairs");
  o.require(std::abs(rep.v.mean - 0.307) <= 0.015, "V " + fmt("%.4f m", rep.v.mean));
  o.require(std::abs(rep.va.mean - 0.326) <= 0.015, "VA " + fmt("%.4f m", rep.va.mean));
  const bool directional = rep.paired && rep.va.mean > rep.v.mean && rep.paired->p_value < 0.01;
  o.require(directional, rep.paired ? "T " + fmt("%.2f", rep.paired->statistic) + " p " +
                                          fmt("%.1e", rep.paired->p_value)
                                    : "no paired test");
  const double secs = seconds_since(t0);
  o.require(secs <= 60.0, fmt("%.2f s", secs));
  return o;
}

// Latency budget and decide throughput.
Outcome c6() {
  Outcome o;
  const auto s = pipeline::end_to_end_latency(pipeline::StageLatencyModel{}, 100000, 1);
  o.require(s.p95 <= 38.5, "p95 " + fmt("%.2f ms", s.p95));

  const safety::SafetyZoneConfig cfg;
  std::vector<double> ds(4096);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.6);
  for (auto& d : ds) d = u(rng);
  const std::size_t n = 2'000'000;
  auto state = safety::SafetyState::Safe;
  std::size_t actuations = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < n; ++i) {
    const auto dec = safety::step(state, ds[i & 4095], cfg, static_cast<double>(i));
    state = dec.state;
    actuations += dec.actuate;
  }
  const double rate = n / seconds_since(t0);
  o.require(rate >= 10000.0 && actuations > 0, "decide " + fmt("%.2e updates/s", rate));
  return o;
}

// Wire codec and journal.
Outcome c7() {
  Outcome o;
  std::size_t frames = 0, bad = 0;
  wire::for_each_valid_frame([&](const wire::CommandFrame& f) {
    ++frames;
    const auto b = wire::encode(f);
    if (wire::frame_error(b) || wire::decode(b) != f) ++bad;
  });
  o.require(bad == 0 && frames == wire::valid_frame_count(), std::to_string(frames) + " frames round trip");

  std::mt19937_64 rng(7);
  std::vector<wire::CommandFrame> all;
  wire::for_each_valid_frame([&](const wire::CommandFrame& f) { all.push_back(f); });
  std::size_t flips = 0, accepted = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto bytes = wire::encode(all[rng() % all.size()]);
    for (int byte = 1; byte <= 3; ++byte)
      for (int bit = 0; bit < 8; ++bit) {
        auto c = bytes;
        c[byte] ^= static_cast<std::uint8_t>(1u << bit);
        ++flips;
        accepted += !wire::frame_error(c);
      }
  }
  o.require(accepted == 0, std::to_string(flips) + " bit flips, " + std::to_string(accepted) + " accepted");

  const fs::path path = fs::temp_directory_path() / ("airguard_accept_" + std::to_string(rng()) + ".jsonl");
  std::vector<wire::TelemetryRecord> recs(10000);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].t_ms = i * 10.0 + u(rng);
    recs[i].dist_m = u(rng);
    recs[i].state = static_cast<safety::SafetyState>(rng() % 3);
    recs[i].duty_pct = (rng() % 201) * 0.5;
    recs[i].seq = i;
  }
  fs::remove(path);
  wire::journal_append(path, recs);
  const auto back = wire::journal_read(path);
  bool journal_ok = back.records == recs && !back.truncated_tail;
  std::ofstream(path, std::ios::app | std::ios::binary) << R"({"t_ms":1e9,"dist_m":0.2,"sta)";
  const auto torn = wire::journal_read(path);
  journal_ok = journal_ok && torn.truncated_tail && torn.records == recs;
  fs::remove(path);
  o.require(journal_ok, "10000-record journal incl. torn tail");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Determinism of simulate output.
Outcome c8() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("airguard_accept_" + std::to_string(std::random_device{}()));
  const fs::path a = root / "a", b = root / "b";
  const int ca = run_cli({"simulate", "--condition", "both", "--trials", "10", "--seed", "42", "--out", a.string()});
  const int cb = run_cli({"simulate", "--condition", "both", "--trials", "10", "--seed", "42", "--out", b.string()});
  std::size_t files = 0, differ = 0;
  if (ca == 0 && cb == 0) {
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      if (slurp(e.path()) != slurp(b / e.path().filename())) ++differ;
    }
  }
  fs::remove_all(root);
  o.require(ca == 0 && cb == 0 && files == 21 && differ == 0,
            std::to_string(files) + " files, " + std::to_string(differ) + " differ");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 pose round trip", c1},     {"2 safety state machine", c2}, {"3 statistics kernel", c3},
      {"4 perceived distance error", c4},  {"5 V/VA below-HAD means", c5},    {"6 latency budget", c6},
      {"7 wire codec + journal", c7}, {"8 determinism", c8},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    failed += !r.pass;
    std::printf("%s  criterion %s: %s\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "airguard/config.hpp"
#include "airguard/error.hpp"
#include "airguard/kernels.hpp"
#include "airguard/stats.hpp"
#include "airguard/trace_io.hpp"
#include "airguard/wire.hpp"

namespace airguard::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Raised for bad flag values that CLI11 cannot check by itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InsideJetCore:
    case ErrorCode::ImperceptibleFlow:
      return kUsage;
    case ErrorCode::IoFailure:
    case ErrorCode::MalformedRecord:
      return kIo;
    default:
      return kFailure;
  }
}

std::string with_commas(std::size_t n) {
  std::string s = std::to_string(n);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

void write_json(const ordered_json& j, const std::optional<std::string>& path, std::ostream& out) {
  if (!path) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(*path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + *path + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw Error(ErrorCode::IoFailure, "write failed: " + *path);
}

ordered_json result_json(const std::optional<stats::TestResult>& r, const char* stat_name) {
  if (!r) return nullptr;
  ordered_json j;
  j[stat_name] = r->statistic;
  if (r->df) j["df"] = *r->df;
  j["p"] = r->p_value;
  return j;
}

ordered_json summary_json(const sim::ConditionSummary& s) {
  ordered_json j;
  j["n"] = s.n;
  j["mean_m"] = s.mean;
  j["sd_m"] = s.sd;
  j["shapiro_wilk"] = result_json(s.normality, "W");
  return j;
}

// ---- options shared by the subcommands --------------------------------------

struct Global {
  std::optional<std::string> config_file;
  std::vector<std::string> overrides;

  RunConfig load() const {
    std::optional<fs::path> file;
    if (config_file) file = *config_file;
    return load_config(file, overrides);
  }
};

struct SimulateOpts {
  std::string condition = "both";
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  std::optional<double> duration;
  std::string out_dir;
};

struct AnalyzeOpts {
  std::string in_dir;
  std::optional<std::string> report;
};

struct PerceiveOpts {
  double distance = 0.25;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  std::optional<double> duty;
  bool json = false;
};

struct CalibrateOpts {
  std::optional<std::string> targets;
  int budget = 40;
  std::size_t seeds = 32;
  std::uint64_t seed = 1;
  std::optional<std::string> out;
};

struct PosecheckOpts {
  std::size_t poses = 1000;
  double noise_px = 0.0;
  std::uint64_t seed = 1;
  double z_min = 0.3;
  double z_max = 2.0;
  double max_tilt_deg = 45.0;
  bool json = false;
};

struct LatencyOpts {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  bool json = false;
};

// ---- subcommands -------------------------------------------------------------

int cmd_simulate(const Global& g, const SimulateOpts& o, std::ostream& out) {
  RunConfig cfg = g.load();
  if (o.duration) {
    cfg.set("sim.duration_s", *o.duration);
    cfg.validate();
  }
  if (o.trials == 0) throw UsageError("--trials must be at least 1");

  std::vector<sim::Condition> conds;
  if (o.condition == "both")
    conds = {sim::Condition::V, sim::Condition::VA};
  else
    conds = {sim::parse_condition(o.condition)};

  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + o.out_dir + ": " + ec.message());

  wire::Manifest manifest;
  manifest.config_hash = cfg.hash();
  manifest.config = cfg.to_json();

  // Chunked so memory stays bounded for long runs.
  constexpr std::size_t kChunk = 32;
  std::size_t written = 0;
  for (auto cond : conds) {
    for (std::size_t first = 0; first < o.trials; first += kChunk) {
      std::vector<std::uint64_t> seeds;
      for (std::size_t i = first; i < std::min(o.trials, first + kChunk); ++i) seeds.push_back(o.seed + i);
      const auto traces = kernels::par::run_trials(cond, cfg.setup(), seeds);
      for (const auto& tr : traces) {
        const std::string name = wire::trace_file_name(cond, tr.seed);
        wire::write_trace(fs::path(o.out_dir) / name, tr);
        manifest.trials.push_back({name, cond, tr.seed});
        ++written;
      }
    }
  }
  wire::write_manifest(o.out_dir, manifest);
  out << "wrote " << written << " traces and " << wire::kManifestName << " to " << o.out_dir << '\n';
  return kOk;
}

int cmd_analyze(const AnalyzeOpts& o, std::ostream& out, std::ostream& err) {
  const wire::Manifest manifest = wire::read_manifest(o.in_dir);
  RunConfig cfg;
  cfg.merge_json(manifest.config);
  cfg.validate();
  const auto& zone = cfg.setup().safety;

  std::map<std::uint64_t, std::pair<std::optional<std::string>, std::optional<std::string>>> by_seed;
  for (const auto& e : manifest.trials) {
    auto& slot = by_seed[e.seed];
    (e.cond == sim::Condition::V ? slot.first : slot.second) = e.file;
  }

  std::vector<std::string> warnings;
  std::vector<std::uint64_t> seeds;
  std::vector<double> v_means, va_means;
  std::size_t matched = 0;
  for (const auto& [seed, files] : by_seed) {
    if (!files.first || !files.second) continue;
    ++matched;
    std::optional<double> means[2];
    const std::string* paths[2] = {&*files.first, &*files.second};
    const sim::Condition expect[2] = {sim::Condition::V, sim::Condition::VA};
    for (int c = 0; c < 2; ++c) {
      const auto tf = wire::read_trace(fs::path(o.in_dir) / *paths[c]);
      if (tf.trace.cond != expect[c] || tf.trace.seed != seed)
        throw Error(ErrorCode::MalformedRecord, *paths[c] + ": condition/seed disagree with the manifest");
      if (tf.truncated_tail) warnings.push_back(*paths[c] + ": truncated final line ignored");
      try {
        means[c] = sim::below_had_mean(tf.trace, zone);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoExposure) throw;
        warnings.push_back("seed " + std::to_string(seed) + ": " + std::string(sim::to_string(expect[c])) +
                           " trace never entered the HAD zone; pair skipped");
      }
    }
    if (means[0] && means[1]) {
      seeds.push_back(seed);
      v_means.push_back(*means[0]);
      va_means.push_back(*means[1]);
    }
  }
  if (matched == 0) throw UsageError("no matched V/VA trial pairs in " + o.in_dir);

  sim::TrialReport rep = sim::analyze_pairs(seeds, v_means, va_means);
  warnings.insert(warnings.end(), rep.warnings.begin(), rep.warnings.end());

  ordered_json j;
  j["n_pairs"] = rep.n_trials;
  j["had_m"] = zone.had;
  j["config_hash"] = manifest.config_hash;
  j["v"] = summary_json(rep.v);
  j["va"] = summary_json(rep.va);
  j["difference_mean_m"] = rep.va.mean - rep.v.mean;
  j["paired_t"] = result_json(rep.paired, "T");
  ordered_json pairs = ordered_json::array();
  for (std::size_t i = 0; i < rep.seeds.size(); ++i)
    pairs.push_back({{"seed", rep.seeds[i]}, {"v_m", rep.v_means[i]}, {"va_m", rep.va_means[i]}});
  j["pairs"] = std::move(pairs);
  j["warnings"] = warnings;
  write_json(j, o.report, out);

  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (o.report) {
    out << "V " << fixed(rep.v.mean, 4) << " ± " << fixed(rep.v.sd, 4) << " m, VA " << fixed(rep.va.mean, 4) << " ± "
        << fixed(rep.va.sd, 4) << " m over " << rep.n_trials << " pairs";
    if (rep.paired) out << ", T = " << fixed(rep.paired->statistic, 3) << ", p = " << rep.paired->p_value;
    out << '\n';
  }
  return kOk;
}

int cmd_perceive(const Global& g, const PerceiveOpts& o, std::ostream& out) {
  const RunConfig cfg = g.load();
  if (o.samples == 0) throw UsageError("--samples must be at least 1");
  const auto& s = cfg.setup();
  const double duty = o.duty.value_or(s.duty_pct);
  const auto errs = kernels::ref::perception_errors(s.perception, s.jet, duty, o.distance, o.samples, o.seed);

  std::vector<double> abs_errs(errs.size());
  std::transform(errs.begin(), errs.end(), abs_errs.begin(), [](double e) { return std::abs(e); });
  const auto a = stats::summarize(abs_errs);
  const auto b = stats::summarize(errs);

  if (o.json) {
    ordered_json j;
    j["distance_m"] = o.distance;
    j["duty_pct"] = duty;
    j["samples"] = o.samples;
    j["seed"] = o.seed;
    j["weber"] = s.perception.weber;
    j["mean_abs_error_m"] = a.mean;
    j["sd_abs_error_m"] = a.sd.value_or(0.0);
    j["mean_signed_error_m"] = b.mean;
    out << j.dump(2) << '\n';
  } else {
    out << "distance " << fixed(o.distance, 3) << " m, " << o.samples << " samples: mean |error| "
        << fixed(a.mean, 4) << " ± " << fixed(a.sd.value_or(0.0), 4) << " m (bias " << (b.mean >= 0 ? "+" : "")
        << fixed(b.mean, 4) << " m)\n";
  }
  return kOk;
}

int cmd_calibrate(const Global& g, const CalibrateOpts& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = g.load();
  sim::CalibrationTargets targets;
  if (o.targets) {
    std::ifstream f(*o.targets);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot read " + *o.targets);
    nlohmann::json tj;
    try {
      tj = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, *o.targets + ": " + e.what());
    }
    if (!tj.is_object()) throw Error(ErrorCode::InvalidConfig, *o.targets + ": expected an object");
    const std::map<std::string, double*> fields = {{"v_mean", &targets.v_mean},
                                                    {"va_mean", &targets.va_mean},
                                                    {"exp1_ref_m", &targets.exp1_ref_m},
                                                    {"exp1_err", &targets.exp1_err},
                                                    {"tolerance", &targets.tolerance}};
    for (const auto& [k, v] : tj.items()) {
      const auto it = fields.find(k);
      if (it == fields.end() || !v.is_number()) throw Error(ErrorCode::InvalidConfig, "bad target entry: " + k);
      *it->second = v.get<double>();
    }
  }

  sim::CalibrationOptions opts;
  opts.budget = o.budget;
  opts.n_seeds = o.seeds;
  opts.seed = o.seed;
  if (opts.budget < 1) sim::calibrate(cfg.setup(), targets, opts);  // throws CalibrationFailed
  const auto res = sim::calibrate_search(cfg.setup(), targets, opts);

  ordered_json j;
  j["converged"] = res.converged;
  j["evaluations"] = res.evaluations;
  j["parameters"] = {{"perception.weber", res.perception.weber},
                     {"sim.attention_p", res.human.attention_p},
                     {"sim.excursion_rate", res.human.excursion_rate},
                     {"sim.retreat_speed_mps", res.human.retreat_speed}};
  j["achieved"] = {{"v_mean", res.v_mean}, {"va_mean", res.va_mean}, {"exp1_err", res.exp1_err}};
  j["residuals"] = {{"v_mean", res.v_residual(targets)},
                    {"va_mean", res.va_residual(targets)},
                    {"exp1_err", res.exp1_residual(targets)}};
  j["targets"] = {{"v_mean", targets.v_mean},
                  {"va_mean", targets.va_mean},
                  {"exp1_ref_m", targets.exp1_ref_m},
                  {"exp1_err", targets.exp1_err},
                  {"tolerance", targets.tolerance}};
  write_json(j, o.out, out);
  if (!res.converged) {
    err << "CalibrationFailed: residuals exceed tolerance " << targets.tolerance << " after " << res.evaluations
        << " evaluations\n";
    return kFailure;
  }
  return kOk;
}

int cmd_posecheck(const Global& g, const PosecheckOpts& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = g.load();
  if (o.poses == 0) throw UsageError("--poses must be at least 1");
  if (!(o.noise_px >= 0.0)) throw UsageError("--noise-px must be >= 0");
  const auto& s = cfg.setup();
  const auto poses = kernels::random_poses(o.poses, o.seed, o.z_min, o.z_max, o.max_tilt_deg * M_PI / 180.0,
                                           s.marker, s.camera);
  const auto errs = kernels::ref::pose_roundtrip(poses, s.marker, s.camera, o.noise_px, o.seed);

  std::vector<double> rot, trans;
  std::size_t failed = 0;
  for (const auto& e : errs) {
    if (e.failed) {
      ++failed;
      continue;
    }
    rot.push_back(e.rotation_rad);
    trans.push_back(e.translation_m);
  }
  const double rot_max = rot.empty() ? 0.0 : *std::max_element(rot.begin(), rot.end());
  const double trans_max = trans.empty() ? 0.0 : *std::max_element(trans.begin(), trans.end());

  if (o.json) {
    ordered_json j;
    j["poses"] = o.poses;
    j["noise_px"] = o.noise_px;
    j["failed"] = failed;
    j["rotation_rad"] = {{"median", median_of(rot)}, {"max", rot_max}};
    j["translation_m"] = {{"median", median_of(trans)}, {"max", trans_max}};
    out << j.dump(2) << '\n';
  } else {
    out << o.poses << " poses, noise " << o.noise_px << " px: rotation median " << median_of(rot) << " max "
        << rot_max << " rad; translation median " << median_of(trans) << " max " << trans_max << " m; " << failed
        << " failed\n";
  }
  if (o.noise_px == 0.0 && (failed > 0 || rot_max > 1e-6 || trans_max > 1e-6)) {
    err << "noiseless round trip exceeded 1e-6\n";
    return kFailure;
  }
  return kOk;
}

int cmd_codec_check(std::ostream& out, std::ostream& err) {
  std::size_t frames = 0, flips = 0, bad = 0;
  wire::for_each_valid_frame([&](const wire::CommandFrame& f) {
    ++frames;
    const auto bytes = wire::encode(f);
    if (!(wire::decode(bytes) == f)) ++bad;
    for (std::size_t byte = 1; byte <= 3; ++byte) {
      for (int bit = 0; bit < 8; ++bit) {
        auto corrupt = bytes;
        corrupt[byte] ^= static_cast<std::uint8_t>(1u << bit);
        ++flips;
        if (!wire::frame_error(corrupt)) ++bad;
      }
    }
  });
  if (bad || frames != wire::valid_frame_count()) {
    err << bad << " codec failures\n";
    return kFailure;
  }
  out << with_commas(frames) << " frames OK; " << with_commas(flips) << " single-bit corruptions rejected\n";
  return kOk;
}

int cmd_latency(const Global& g, const LatencyOpts& o, std::ostream& out) {
  const RunConfig cfg = g.load();
  if (o.samples == 0) throw UsageError("--samples must be at least 1");
  const auto& m = cfg.setup().latency;
  const auto s = pipeline::end_to_end_latency(m, o.samples, o.seed);
  if (o.json) {
    ordered_json j;
    j["samples"] = s.n;
    j["p50_ms"] = s.p50;
    j["p95_ms"] = s.p95;
    j["p99_ms"] = s.p99;
    j["max_ms"] = s.max;
    j["reaction_bound_ms"] = m.reaction_bound_ms();
    out << j.dump(2) << '\n';
  } else {
    out << "detect+decide+transmit over " << s.n << " samples: p50 " << fixed(s.p50, 2) << " p95 "
        << fixed(s.p95, 2) << " p99 " << fixed(s.p99, 2) << " max " << fixed(s.max, 2) << " ms\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"airguard: airflow safety-field simulator and analysis tools", "airguard"};
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--config", g.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config key, e.g. --set safety.had_m=0.40")->take_all();

  SimulateOpts sim_o;
  auto* simulate = app.add_subcommand("simulate", "Run seeded V/VA trials and write traces + manifest");
  simulate->add_option("--condition", sim_o.condition, "v, va or both")
      ->check(CLI::IsMember({"v", "va", "both"}))
      ->capture_default_str();
  simulate->add_option("--trials", sim_o.trials, "Trials per condition")->capture_default_str();
  simulate->add_option("--seed", sim_o.seed, "First seed")->capture_default_str();
  simulate->add_option("--duration", sim_o.duration, "Trial duration in seconds (sim.duration_s)");
  simulate->add_option("--out", sim_o.out_dir, "Output directory")->required();

  AnalyzeOpts an_o;
  auto* analyze = app.add_subcommand("analyze", "Paired below-HAD analysis of a simulate output directory");
  analyze->add_option("--in", an_o.in_dir, "Directory with manifest.json")->required();
  analyze->add_option("--report", an_o.report, "Report path (stdout when omitted)");

  PerceiveOpts pe_o;
  auto* perceive = app.add_subcommand("perceive", "Monte-Carlo perceived-distance error at one reference distance");
  perceive->add_option("--distance", pe_o.distance, "Reference distance in meters")->capture_default_str();
  perceive->add_option("--samples", pe_o.samples)->capture_default_str();
  perceive->add_option("--seed", pe_o.seed)->capture_default_str();
  perceive->add_option("--duty", pe_o.duty, "Impeller duty in percent (sim.duty_pct)");
  perceive->add_flag("--json", pe_o.json, "Print JSON");

  CalibrateOpts ca_o;
  auto* calibrate = app.add_subcommand("calibrate", "Fit weber, attention_p, excursion_rate and retreat speed");
  calibrate->add_option("--targets", ca_o.targets, "JSON with v_mean, va_mean, exp1_ref_m, exp1_err, tolerance");
  calibrate->add_option("--budget", ca_o.budget, "Simulation-batch evaluations")->capture_default_str();
  calibrate->add_option("--seeds", ca_o.seeds, "Matched trials per evaluation")->capture_default_str();
  calibrate->add_option("--seed", ca_o.seed)->capture_default_str();
  calibrate->add_option("--out", ca_o.out, "Result path (stdout when omitted)");

  PosecheckOpts po_o;
  auto* posecheck = app.add_subcommand("posecheck", "Project random poses, re-estimate them, report errors");
  posecheck->add_option("--poses", po_o.poses)->capture_default_str();
  posecheck->add_option("--noise-px", po_o.noise_px, "Corner noise sd in pixels")->capture_default_str();
  posecheck->add_option("--seed", po_o.seed)->capture_default_str();
  posecheck->add_option("--z-min", po_o.z_min)->capture_default_str();
  posecheck->add_option("--z-max", po_o.z_max)->capture_default_str();
  posecheck->add_option("--max-tilt-deg", po_o.max_tilt_deg)->capture_default_str();
  posecheck->add_flag("--json", po_o.json, "Print JSON");

  app.add_subcommand("codec-check", "Exhaustive command-frame round trip and bit-flip sweep");

  LatencyOpts la_o;
  auto* latency = app.add_subcommand("latency", "Detect+decide+transmit latency percentiles");
  latency->add_option("--samples", la_o.samples)->capture_default_str();
  latency->add_option("--seed", la_o.seed)->capture_default_str();
  latency->add_flag("--json", la_o.json, "Print JSON");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(g, sim_o, out);
    if (analyze->parsed()) return cmd_analyze(an_o, out, err);
    if (perceive->parsed()) return cmd_perceive(g, pe_o, out);
    if (calibrate->parsed()) return cmd_calibrate(g, ca_o, out, err);
    if (posecheck->parsed()) return cmd_posecheck(g, po_o, out, err);
    if (latency->parsed()) return cmd_latency(g, la_o, out);
    return cmd_codec_check(out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace airguard::cli

#include "airguard/trace_io.hpp"

#include <fstream>

#include "airguard/error.hpp"
#include "airguard/wire.hpp"

namespace airguard::wire {

std::string trace_file_name(sim::Condition cond, std::uint64_t seed) {
  return "trial_" + std::string(sim::to_string(cond)) + "_" + std::to_string(seed) + ".jsonl";
}

void write_trace(const std::filesystem::path& path, const sim::DistanceTrace& trace) {
  JournalWriter w(path, /*truncate=*/true);
  const std::string cond(sim::to_string(trace.cond));
  for (const auto& s : trace.samples) {
    nlohmann::ordered_json j;
    j["t_ms"] = s.t_ms;
    j["dist_m"] = s.dist_m;
    j["state"] = std::string(safety::to_string(s.state));
    j["duty_pct"] = s.duty_pct;
    j["cond"] = cond;
    j["seed"] = trace.seed;
    w.append(j);
  }
  w.flush();
}

TraceFile read_trace(const std::filesystem::path& path) {
  const JournalContents raw = read_journal(path);
  TraceFile out;
  out.truncated_tail = raw.truncated_tail;
  out.trace.samples.reserve(raw.records.size());
  for (std::size_t i = 0; i < raw.records.size(); ++i) {
    const auto& j = raw.records[i];
    const std::string where = path.string() + " line " + std::to_string(raw.line_numbers[i]);
    try {
      sim::TraceSample s;
      s.t_ms = j.at("t_ms").get<std::int64_t>();
      s.dist_m = j.at("dist_m").get<double>();
      s.state = safety::parse_state(j.at("state").get<std::string>());
      s.duty_pct = j.at("duty_pct").get<double>();
      const auto cond = sim::parse_condition(j.at("cond").get<std::string>());
      const auto seed = j.at("seed").get<std::uint64_t>();
      if (i == 0) {
        out.trace.cond = cond;
        out.trace.seed = seed;
      } else if (cond != out.trace.cond || seed != out.trace.seed) {
        throw Error(ErrorCode::MalformedRecord, "cond/seed changed mid-trace");
      }
      if (!(s.dist_m >= 0.0)) throw Error(ErrorCode::MalformedRecord, "negative distance");
      if (!out.trace.samples.empty() && s.t_ms <= out.trace.samples.back().t_ms)
        throw Error(ErrorCode::MalformedRecord, "timestamps not strictly increasing");
      out.trace.samples.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, where + ": " + e.what(), raw.line_numbers[i]);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, where + ": " + e.what(), raw.line_numbers[i]);
    }
  }
  return out;
}

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
  nlohmann::ordered_json j;
  j["config_hash"] = m.config_hash;
  j["config"] = m.config;
  auto& trials = j["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : m.trials)
    trials.push_back({{"file", t.file}, {"cond", std::string(sim::to_string(t.cond))}, {"seed", t.seed}});
  std::ofstream out(dir / kManifestName, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "manifest write failed in " + dir.string());
}

Manifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "no manifest in " + dir.string());
  try {
    const auto j = nlohmann::ordered_json::parse(in);
    Manifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = j.at("config");
    for (const auto& t : j.at("trials"))
      m.trials.push_back({t.at("file").get<std::string>(), sim::parse_condition(t.at("cond").get<std::string>()),
                          t.at("seed").get<std::uint64_t>()});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, "manifest: " + std::string(e.what()));
  }
}

}  // namespace airguard::wire

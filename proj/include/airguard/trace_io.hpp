#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airguard/simworld.hpp"

namespace airguard::wire {

/// trial_<cond>_<seed>.jsonl
std::string trace_file_name(sim::Condition cond, std::uint64_t seed);

/// One JSON line per sample: {t_ms, dist_m, state, duty_pct, cond, seed}.
/// Overwrites an existing file. Throws IoFailure.
void write_trace(const std::filesystem::path& path, const sim::DistanceTrace& trace);

struct TraceFile {
  sim::DistanceTrace trace;
  bool truncated_tail = false;
};

/// Throws IoFailure, MalformedRecord (bad fields, or cond/seed changing
/// within the file).
TraceFile read_trace(const std::filesystem::path& path);

struct ManifestEntry {
  std::string file;
  sim::Condition cond = sim::Condition::V;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::string config_hash;
  nlohmann::ordered_json config;
  std::vector<ManifestEntry> trials;
};

inline constexpr const char* kManifestName = "manifest.json";

void write_manifest(const std::filesystem::path& dir, const Manifest& m);
/// Throws IoFailure when missing, MalformedRecord when unparseable.
Manifest read_manifest(const std::filesystem::path& dir);

}  // namespace airguard::wire

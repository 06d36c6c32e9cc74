#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "airguard/trace_io.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using airguard::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("airguard_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("usage and help") {
  CHECK(call({"--help"}).code == 0);
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"perceive", "--no-such-flag"}).code == 2);
  CHECK(call({"simulate", "--condition", "x", "--out", "/tmp/x"}).code == 2);
  CHECK(call({"--set", "nope.key=1", "perceive"}).code == 2);
  CHECK(call({"--config", "/no/such/file.json", "perceive"}).code == 2);
}

TEST_CASE("simulate writes one trace per seed and condition, deterministically") {
  TempDir a, b;
  auto r = call({"simulate", "--condition", "both", "--trials", "10", "--duration", "10", "--out", a / "run"});
  REQUIRE(r.code == 0);
  REQUIRE(call({"simulate", "--condition", "both", "--trials", "10", "--duration", "10", "--out", b / "run"}).code ==
          0);

  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(a.path / "run")) {
    if (e.path().filename() == airguard::wire::kManifestName) continue;
    ++traces;
    CHECK(slurp(e.path()) == slurp(b.path / "run" / e.path().filename()));
  }
  CHECK(traces == 20);
  CHECK(fs::exists(a.path / "run" / airguard::wire::kManifestName));
  CHECK(slurp(a.path / "run" / airguard::wire::kManifestName) ==
        slurp(b.path / "run" / airguard::wire::kManifestName));

  CHECK(call({"simulate", "--trials", "0", "--out", a / "zero"}).code == 2);
}

TEST_CASE("analyze") {
  TempDir d;
  REQUIRE(call({"simulate", "--trials", "4", "--duration", "30", "--out", d / "run"}).code == 0);
  auto r = call({"analyze", "--in", d / "run", "--report", d / "report.json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(d.path / "report.json"));
  CHECK(j["n_pairs"] == 4);
  CHECK(j["pairs"].size() == 4);
  CHECK(j["had_m"] == 0.35);
  CHECK(j["paired_t"]["df"] == 3);

  SUBCASE("one condition only") {
    REQUIRE(call({"simulate", "--condition", "v", "--trials", "2", "--duration", "10", "--out", d / "v"}).code == 0);
    CHECK(call({"analyze", "--in", d / "v"}).code == 2);
  }
  SUBCASE("missing manifest") { CHECK(call({"analyze", "--in", d / "nothing"}).code == 3); }
  SUBCASE("no airflow channel gives identical pairs and a warning") {
    REQUIRE(call({"--set", "perception.detect_q_pa=inf", "simulate", "--trials", "3", "--duration", "20", "--out",
                  d / "iso"})
                .code == 0);
    auto iso = call({"analyze", "--in", d / "iso"});
    CHECK(iso.code == 0);
    CHECK(iso.err.find("ZeroVarianceDifferences") != std::string::npos);
    CHECK(nlohmann::json::parse(iso.out)["paired_t"].is_null());
  }
  SUBCASE("malformed trace line") {
    fs::path victim;
    for (const auto& e : fs::directory_iterator(d.path / "run"))
      if (e.path().filename() != airguard::wire::kManifestName) victim = e.path();
    std::ofstream(victim, std::ios::app) << "{broken\n";
    auto bad = call({"analyze", "--in", d / "run"});
    CHECK(bad.code == 3);
  }
}

TEST_CASE("perceive") {
  auto r = call({"perceive", "--distance", "0.25", "--samples", "2000", "--json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["samples"] == 2000);
  CHECK(j["mean_abs_error_m"].get<double>() > 0.0);
  CHECK(call({"perceive", "--distance", "0.10"}).code == 2);
  CHECK(call({"perceive", "--distance", "10.0"}).code == 2);
  CHECK(call({"perceive", "--duty", "0"}).code == 2);
}

TEST_CASE("posecheck, codec-check, latency") {
  auto p = call({"posecheck", "--poses", "200", "--json"});
  CHECK(p.code == 0);
  CHECK(nlohmann::json::parse(p.out)["failed"] == 0);

  auto c = call({"codec-check"});
  CHECK(c.code == 0);
  CHECK(c.out.find("51,968 frames OK") != std::string::npos);

  auto l = call({"latency", "--samples", "20000", "--json"});
  CHECK(l.code == 0);
  CHECK(nlohmann::json::parse(l.out)["p95_ms"].get<double>() <= 38.5);
}

TEST_CASE("calibrate") {
  CHECK(call({"calibrate", "--budget", "0"}).code == 4);
  TempDir d;
  std::ofstream(d.path / "t.json") << "{\"bogus\": 1}";
  CHECK(call({"calibrate", "--targets", d / "t.json", "--budget", "1"}).code == 2);
}

// Serial reference vs OpenMP kernels on the same inputs.
//   ./build/bench/airguard_bench --benchmark_filter=Trials

#include <benchmark/benchmark.h>

#include <numeric>

#include "airguard/kernels.hpp"

using namespace airguard;

namespace {


const std::vector<geometry::MarkerPose>& poses() {
  static const auto p =
      kernels::random_poses(2000, 1, 0.3, 2.0, 0.8, geometry::MarkerSpec{}, geometry::CameraIntrinsics{});
  return p;
}

template <bool Parallel>
void BM_PoseRoundtrip(benchmark::State& st) {
  const geometry::MarkerSpec spec;
  const geometry::CameraIntrinsics cam;
  for (auto _ : st) {
    auto r = Parallel ? kernels::par::pose_roundtrip(poses(), spec, cam, 0.5, 1)
                      : kernels::ref::pose_roundtrip(poses(), spec, cam, 0.5, 1);
    benchmark::DoNotOptimize(r.data());
  }
  st.SetItemsProcessed(st.iterations() * poses().size());
}

template <bool Parallel>
void BM_Perception(benchmark::State& st) {
  const airflow::JetModel jm;
  const airflow::PerceptionModel pm;
  const auto n = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) {
    auto r = Parallel ? kernels::par::perception_errors(pm, jm, 100, 0.25, n, 1)
                      : kernels::ref::perception_errors(pm, jm, 100, 0.25, n, 1);
    benchmark::DoNotOptimize(r.data());
  }
  st.SetItemsProcessed(st.iterations() * n);
}

template <bool Parallel>
void BM_Latency(benchmark::State& st) {
  const pipeline::StageLatencyModel m;
  const auto n = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) {
    auto r = Parallel ? kernels::par::latency_samples(m, n, 1) : kernels::ref::latency_samples(m, n, 1);
    benchmark::DoNotOptimize(r.data());
  }
  st.SetItemsProcessed(st.iterations() * n);
}

template <bool Parallel>
void BM_Trials(benchmark::State& st) {
  sim::TrialSetup setup;
  setup.duration_s = 30;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(st.range(0)));
  std::iota(seeds.begin(), seeds.end(), 1);
  for (auto _ : st) {
    auto r = Parallel ? kernels::par::paired_below_had(setup, seeds) : kernels::ref::paired_below_had(setup, seeds);
    benchmark::DoNotOptimize(r.data());
  }
  st.SetItemsProcessed(st.iterations() * seeds.size());
}

}  // namespace

BENCHMARK(BM_PoseRoundtrip<false>)->Name("PoseRoundtrip/ref")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PoseRoundtrip<true>)->Name("PoseRoundtrip/par")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Perception<false>)->Name("Perception/ref")->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Perception<true>)->Name("Perception/par")->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Latency<false>)->Name("Latency/ref")->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Latency<true>)->Name("Latency/par")->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Trials<false>)->Name("Trials/ref")->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Trials<true>)->Name("Trials/par")->Arg(8)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::AddCustomContext("omp_threads", std::to_string(kernels::max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}

#include <benchmark/benchmark.h>

#include "recon/inversion.hpp"
#include "recon/scenario.hpp"

namespace {

recon::Scenario make_scenario(int resolution) {
  recon::ScenarioSpec spec = recon::preset("disk-smooth");
  spec.resolution = resolution;
  spec.data_refinements = 2;
  return recon::build_scenario(spec);
}

void BM_AssembleStiffness(benchmark::State& state) {
  const auto sc = make_scenario(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(recon::assemble_stiffness(sc.mesh, sc.alpha0));
  state.counters["triangles"] = static_cast<double>(sc.mesh.num_triangles());
}
BENCHMARK(BM_AssembleStiffness)->Arg(8)->Arg(16)->Arg(32);

void BM_CcbmState(benchmark::State& state) {
  const auto sc = make_scenario(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(recon::solve_ccbm_state(sc.mesh, sc.alpha0, sc.data, sc.synthesis.cauchy));
  }
  state.counters["triangles"] = static_cast<double>(sc.mesh.num_triangles());
}
BENCHMARK(BM_CcbmState)->Arg(8)->Arg(16)->Arg(32);

void BM_Gradient(benchmark::State& state) {
  const auto sc = make_scenario(16);
  const auto method = static_cast<recon::Method>(state.range(0));
  const recon::Weights w;
  for (auto _ : state) {
    benchmark::DoNotOptimize(recon::gradient(method, sc.mesh, sc.alpha0, sc.data, sc.synthesis.cauchy, w));
  }
  state.SetLabel(std::string(recon::to_string(method)));
}
BENCHMARK(BM_Gradient)->DenseRange(0, 3);

void BM_SobolevSmooth(benchmark::State& state) {
  const auto sc = make_scenario(16);
  const recon::SobolevSmoother smoother(sc.mesh, 1.0);
  const Eigen::VectorXd density = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sc.mesh.num_triangles()));
  for (auto _ : state) benchmark::DoNotOptimize(smoother(density));
}
BENCHMARK(BM_SobolevSmooth);

}  // namespace

BENCHMARK_MAIN();

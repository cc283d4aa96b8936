#include <benchmark/benchmark.h>

#include "sqmle/levy_samplers.hpp"
#include "sqmle/sde_sim.hpp"
#include "sqmle/sqlik.hpp"
#include "sqmle/stable_core.hpp"

using namespace sqmle;

namespace {

const StableKernel& kernel15() {
  static const StableKernel k(1.5);
  return k;
}

ModelSpec trig2d() {
  auto m = make_builtin_model("trig-2d");
  m.bounds = Box{{-10, -10, -10, -10}, {10, 10, 10, 10}};
  m.theta_true = Theta{{-1.0, 1.0}, {1.5, 0.5}};
  return m;
}

}  // namespace

static void BM_KernelBuild(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(StableKernel(1.5));
}
BENCHMARK(BM_KernelBuild)->Unit(benchmark::kMillisecond);

static void BM_KernelLogDensity(benchmark::State& state) {
  const auto& k = kernel15();
  double y = -20.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(k.log_density(y));
    y = y > 20.0 ? -20.0 : y + 0.0137;
  }
}
BENCHMARK(BM_KernelLogDensity);

static void BM_QuasiLoglik(benchmark::State& state) {
  const auto m = trig2d();
  RngStream rng(1, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto obs = thin(simulate_fine(m, NoiseSpec::stable(1.5), 1.0, n * 10, 0.0, rng), 10);
  for (auto _ : state) benchmark::DoNotOptimize(quasi_loglik(obs, m, *m.theta_true, kernel15()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QuasiLoglik)->Arg(500)->Arg(3000);

static void BM_QuasiScore(benchmark::State& state) {
  const auto m = trig2d();
  RngStream rng(1, 0);
  const auto obs = thin(simulate_fine(m, NoiseSpec::stable(1.5), 1.0, 30000, 0.0, rng), 10);
  for (auto _ : state) benchmark::DoNotOptimize(quasi_score(obs, m, *m.theta_true, kernel15()));
}
BENCHMARK(BM_QuasiScore);

static void BM_SampleStable(benchmark::State& state) {
  RngStream rng(2, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_stable(1.5, 0.01, 1000, rng));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_SampleStable);

static void BM_SampleNig(benchmark::State& state) {
  RngStream rng(3, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_nig(5.0, 0.01, 1000, rng));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_SampleNig);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <map>

#include "nearq/cancer.hpp"
#include "nearq/itr.hpp"
#include "nearq/near_equiv.hpp"
#include "nearq/qlearn.hpp"

using namespace nearq;

namespace {

const OfflineDataset& cancer_cohort(std::size_t n) {
  static std::map<std::size_t, OfflineDataset> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    const envs::CancerParams params;
    it = cache.emplace(n, envs::simulate_cancer_cohort(params, envs::UniformRandomPolicy{}, n, 2024, "train/").dataset)
             .first;
  }
  return it->second;
}

void BM_ClassicalCancer(benchmark::State& state) {
  const auto& ds = cancer_cohort(static_cast<std::size_t>(state.range(0)));
  const auto spec = regression::DesignSpec::per_action_kernel();
  for (auto _ : state) benchmark::DoNotOptimize(qlearn::backward_fit(ds, spec));
}
BENCHMARK(BM_ClassicalCancer)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_NearEquivCancer(benchmark::State& state) {
  const auto& ds = cancer_cohort(500);
  const auto spec = regression::DesignSpec::per_action_kernel();
  const nearequiv::EpsilonConfig cfg(static_cast<double>(state.range(0)) / 10.0);
  std::size_t m = 0;
  for (auto _ : state) {
    const auto stack = nearequiv::backward_fit_near_equiv(ds, spec, cfg);
    m = stack.m();
    benchmark::DoNotOptimize(m);
  }
  state.counters["m"] = static_cast<double>(m);
}
BENCHMARK(BM_NearEquivCancer)->Arg(1)->Arg(3)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_InteractionLinearItr(benchmark::State& state) {
  const auto ds = envs::simulate_itr({static_cast<std::size_t>(state.range(0)), 1, 1.0});
  const auto spec = regression::DesignSpec::interaction_linear();
  for (auto _ : state) benchmark::DoNotOptimize(qlearn::fit_final_stage(ds, spec));
}
BENCHMARK(BM_InteractionLinearItr)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

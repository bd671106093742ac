#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "flowood/adam.hpp"
#include "flowood/feature_set.hpp"
#include "flowood/flow_model.hpp"
#include "flowood/geometry.hpp"
#include "flowood/metrics.hpp"

namespace {

using namespace flowood;

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Matrix m(rows, cols);
  for (float& v : m.values()) v = normal(rng);
  return m;
}

void BM_LogProb(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix x = l2_normalize(gaussian(256, d, 1)).normalized;
  FlowModel model(FlowSpec{d, 10, d, FlowArch::kGlow, 0});
  model.initialize_actnorm(x);
  for (auto _ : state) benchmark::DoNotOptimize(model.log_prob(x));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_LogProb)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix x = l2_normalize(gaussian(256, d, 2)).normalized;
  FlowModel model(FlowSpec{d, 10, d, FlowArch::kGlow, 0});
  model.initialize_actnorm(x);
  Adam<float> optimizer(model.params(), 1e-4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.nll_and_grad(x));
    optimizer.step();
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_TrainStep)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Auroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> id(n), ood(n);
  for (auto& v : id) v = normal(rng) + 1.0;
  for (auto& v : ood) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(auroc(id, ood));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n));
}
BENCHMARK(BM_Auroc)->Arg(10000)->Arg(100000);

void BM_Uniformity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix z = l2_normalize(gaussian(n, 128, 4)).normalized;
  for (auto _ : state) benchmark::DoNotOptimize(uniformity(z, 2.0));
}
BENCHMARK(BM_Uniformity)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

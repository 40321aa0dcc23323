// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "relish/data.hpp"
#include "relish/harness.hpp"
#include "relish/kernels.hpp"
#include "relish/random.hpp"

namespace relish {
namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.normal());
  return v;
}

template <bool Parallel>
void BM_GemmNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t k = m, n = m;
  const auto a = random_vec(m * k, 1);
  const auto b = random_vec(k * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::gemm_nn<float>(a, b, c, m, k, n, false);
    } else {
      kernels::serial::gemm_nn<float>(a, b, c, m, k, n, false);
    }
    benchmark::DoNotOptimize(c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * k * n));
  state.counters["threads"] = Parallel ? kernels::max_threads() : 1;
}
BENCHMARK(BM_GemmNN<false>)->Name("gemm_nn/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_GemmNN<true>)->Name("gemm_nn/parallel")->Arg(64)->Arg(256)->Arg(512);

struct PredictFixture {
  Model model;
  std::vector<TokenStates> examples;

  PredictFixture() {
    PlantedSpec spec;
    spec.examples = 256;
    spec.target_hi = 10.0;
    Dataset data = planted_task(spec, 7);
    examples = data.train;
    TrainConfig c;
    c.relish.head_dim = 32;
    c.relish.heads = 4;
    c.relish.layers = 3;
    c.relish.ffn_hidden = 128;
    model.config = resolve_config(c, data.dim);
    model.input_dim = data.dim;
    model.normalizer = TargetNormalizer::fit(targets_of(examples));
    model.params = init_params(model.config, 7);
  }

  static std::vector<double> targets_of(const std::vector<TokenStates>& xs) {
    std::vector<double> y;
    for (const auto& x : xs) y.push_back(*x.target);
    return y;
  }
};

template <Execution E>
void BM_Predict(benchmark::State& state) {
  static const PredictFixture fx;
  for (auto _ : state) {
    auto preds = predict(fx.model, fx.examples, E);
    benchmark::DoNotOptimize(preds.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * fx.examples.size()));
  state.counters["threads"] = E == Execution::kParallel ? kernels::max_threads() : 1;
}
BENCHMARK(BM_Predict<Execution::kSerial>)->Name("predict/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Predict<Execution::kParallel>)->Name("predict/parallel")->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace relish

BENCHMARK_MAIN();

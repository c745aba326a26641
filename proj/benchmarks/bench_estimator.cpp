#include <benchmark/benchmark.h>

#include "dnas/arch.hpp"
#include "dnas/dist.hpp"
#include "dnas/oracle.hpp"
#include "dnas/rng.hpp"
#include "dnas/search.hpp"

using namespace dnas;

namespace {

ArchitectureSpec arch_of(Mode mode, int layers, int filters, int ops) {
  ArchitectureSpec a;
  a.num_classes = 10;
  a.input = {3, 8, 8};
  int in = 3;
  for (int l = 0; l < layers; ++l) {
    LayerSpec s;
    s.filters = filters;
    s.in_channels = in;
    s.kernel = 3;
    s.out_height = 8;
    s.out_width = 8;
    s.ops.mode = mode;
    if (mode == Mode::Quantization) {
      for (int t = 0; t < ops; ++t) s.ops.quant_ops.push_back({2 + 2 * t, 2 + 2 * t});
    }
    a.layers.push_back(s);
    in = filters;
  }
  a.validate();
  return a;
}

void BM_Sample(benchmark::State& state) {
  const auto arch = arch_of(Mode::Quantization, static_cast<int>(state.range(0)), 64, 4);
  const AlphaParams alpha = AlphaParams::zeros(arch);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_network(arch, alpha, rng));
}
BENCHMARK(BM_Sample)->Arg(4)->Arg(20);

void BM_EstimateGradient(benchmark::State& state) {
  const auto mode = state.range(1) ? Mode::Pruning : Mode::Quantization;
  const auto arch = arch_of(mode, 20, 64, 4);
  const AlphaParams alpha = AlphaParams::zeros(arch);
  Rng rng(2);
  SampleSet s;
  for (int i = 0; i < state.range(0); ++i) {
    s.configs.push_back(sample_network(arch, alpha, rng));
    s.losses.push_back(rng.uniform());
  }
  for (auto _ : state) benchmark::DoNotOptimize(estimate_gradient(arch, s, alpha));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateGradient)->ArgsProduct({{1, 16, 64}, {0, 1}});

void BM_ExactGrad(benchmark::State& state) {
  const auto arch = arch_of(Mode::Quantization, 2, 6, 4);
  const AlphaParams alpha = AlphaParams::zeros(arch);
  const ConfigLoss loss = [](const NetworkConfig& c) { return c[0].count(0) * 0.1; };
  for (auto _ : state) benchmark::DoNotOptimize(exact_grad(arch, alpha, loss));
}
BENCHMARK(BM_ExactGrad)->Unit(benchmark::kMillisecond);

}  // namespace

#include <benchmark/benchmark.h>

#include "dnas/arch.hpp"
#include "dnas/data.hpp"
#include "dnas/net.hpp"

using namespace dnas;

namespace {

ArchitectureSpec net_arch(Mode mode, int filters) {
  ArchitectureSpec a;
  a.num_classes = 4;
  a.input = {1, 8, 8};
  int in = 1;
  for (int l = 0; l < 3; ++l) {
    LayerSpec s;
    s.filters = filters;
    s.in_channels = in;
    s.kernel = 3;
    s.out_height = 8;
    s.out_width = 8;
    s.ops.mode = mode;
    if (mode == Mode::Quantization) s.ops.quant_ops = {{2, 2}, {4, 4}, {8, 8}};
    a.layers.push_back(s);
    in = filters;
  }
  a.validate();
  return a;
}

Dataset bench_data() {
  SyntheticSpec s;
  s.train_per_class = 16;
  return make_cluster_images(s);
}

void BM_ForwardFloat(benchmark::State& state) {
  const auto arch = net_arch(Mode::Pruning, static_cast<int>(state.range(0)));
  const Weights w = init_weights(arch, 1);
  const Dataset d = bench_data();
  const Batch b = d.alpha.slice(0, 32);
  for (auto _ : state) benchmark::DoNotOptimize(forward_float(arch, w, b));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForwardFloat)->Arg(8)->Arg(16);

void BM_ForwardQuantized(benchmark::State& state) {
  const auto arch = net_arch(Mode::Quantization, static_cast<int>(state.range(0)));
  const Weights w = init_weights(arch, 1);
  const Dataset d = bench_data();
  const Batch b = d.alpha.slice(0, 32);
  const auto cfg = make_homogeneous(arch, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(arch, w, cfg, b));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForwardQuantized)->Arg(8)->Arg(16);

void BM_TrainStep(benchmark::State& state) {
  const auto arch = net_arch(Mode::Pruning, 16);
  Weights w = init_weights(arch, 1);
  SgdMomentum opt(w);
  const Dataset d = bench_data();
  const Batch b = d.alpha.slice(0, 32);
  const auto cfg = make_homogeneous_width(arch, state.range(0) / 100.0);
  TrainSettings t;
  t.learning_rate = 1e-4;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(arch, w, opt, cfg, b, t));
}
BENCHMARK(BM_TrainStep)->Arg(25)->Arg(100);

void BM_Quantize(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i));
  for (auto _ : state) benchmark::DoNotOptimize(quantize(v, 4));
  state.SetBytesProcessed(state.iterations() * state.range(0) * 8);
}
BENCHMARK(BM_Quantize)->Arg(576)->Arg(1 << 16);

}  // namespace

#include <benchmark/benchmark.h>

#include "dnas/arch.hpp"
#include "dnas/complexity.hpp"
#include "dnas/dist.hpp"
#include "dnas/rng.hpp"

using namespace dnas;

namespace {

ArchitectureSpec resnet_like() {
  ArchitectureSpec a;
  a.num_classes = 10;
  a.input = {3, 16, 16};
  int in = 3;
  for (int l = 0; l < 20; ++l) {
    LayerSpec s;
    s.filters = l < 7 ? 16 : l < 14 ? 32 : 64;
    s.in_channels = in;
    s.kernel = 3;
    s.out_height = 16;
    s.out_width = 16;
    s.ops.mode = Mode::Quantization;
    s.ops.quant_ops = {{2, 2}, {2, 4}, {4, 4}, {8, 8}};
    a.layers.push_back(s);
    in = s.filters;
  }
  a.validate();
  return a;
}

void BM_NetworkBops(benchmark::State& state) {
  const auto arch = resnet_like();
  Rng rng(3);
  const auto cfg = sample_network(arch, AlphaParams::zeros(arch), rng);
  for (auto _ : state) benchmark::DoNotOptimize(network_complexity(arch, cfg));
}
BENCHMARK(BM_NetworkBops);

void BM_HomogeneousBops(benchmark::State& state) {
  double b = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(homogeneous_layer_bops(64, 64, 3, b, 8.0));
    b = b < 8 ? b + 1 : 2.0;
  }
}
BENCHMARK(BM_HomogeneousBops);

}  // namespace

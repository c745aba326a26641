#include "dnas/complexity.hpp"

#include <cmath>
#include <numeric>

#include "dnas/error.hpp"

namespace dnas {

double homogeneous_layer_bops(double m, double n, double k, double act_bits, double weight_bits) {
  const double nk2 = n * k * k;
  return m * nk2 * (act_bits * weight_bits + act_bits + weight_bits + std::log2(nk2));
}

double accumulator_width(std::span<const InputGroup> inputs, int weight_bits, int kernel) {
  double reach = 0.0;
  for (const auto& g : inputs) reach += g.count * std::exp2(g.activation_bits);
  if (!(reach > 0.0)) throw DomainError("accumulator width needs a nonzero input group");
  return weight_bits + std::log2(static_cast<double>(kernel) * kernel) + std::log2(reach);
}

std::vector<InputGroup> input_groups(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                                     std::size_t index) {
  if (index >= arch.num_layers()) throw DomainError("layer index out of range");
  if (index == 0) return {{static_cast<double>(arch.input.channels), arch.input_bits}};
  const auto& prev = arch.layers[index - 1];
  const auto counts = cfg[index - 1].op_counts();
  std::vector<InputGroup> groups;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] > 0) {
      groups.push_back({static_cast<double>(counts[t]), prev.ops.quant_ops[t].activation});
    }
  }
  return groups;
}

double layer_bops(const LayerSpec& layer, std::span<const InputGroup> inputs,
                  const LayerConfig& out_cfg) {
  if (layer.ops.mode != Mode::Quantization) throw DomainError("layer_bops needs a quantized layer");
  validate_layer_config(layer, out_cfg);
  double in_channels = 0.0;
  for (const auto& g : inputs) in_channels += g.count;
  if (std::abs(in_channels - layer.in_channels) > 1e-9) {
    throw DomainError("input groups cover " + std::to_string(in_channels) +
                      " channels, layer expects " + std::to_string(layer.in_channels));
  }
  const double k2 = static_cast<double>(layer.kernel) * layer.kernel;
  const auto counts = out_cfg.op_counts();
  double per_pixel = 0.0;
  for (std::size_t t2 = 0; t2 < counts.size(); ++t2) {
    if (counts[t2] == 0) continue;
    const int bw = layer.ops.quant_ops[t2].weight;
    double mult = 0.0;
    for (const auto& g : inputs) mult += g.count * g.activation_bits * bw;
    const double filter_cost =
        k2 * (in_channels * accumulator_width(inputs, bw, layer.kernel) + mult);
    per_pixel += counts[t2] * filter_cost;
  }
  return static_cast<double>(layer.out_height) * layer.out_width * per_pixel;
}

double layer_bops(const ArchitectureSpec& arch, const NetworkConfig& cfg, std::size_t index) {
  const auto groups = input_groups(arch, cfg, index);
  return layer_bops(arch.layers.at(index), groups, cfg[index]);
}

double layer_macs(const LayerSpec& layer, int in_filters, int out_filters) {
  if (in_filters < 1 || out_filters < 1) throw DomainError("MAC count needs >= 1 filters");
  return static_cast<double>(in_filters) * out_filters * layer.kernel * layer.kernel *
         layer.out_height * layer.out_width;
}

double memory_fetch_cost(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                         const ComplexityOptions& opts) {
  validate_config(arch, cfg);
  double bits = 0.0;
  if (arch.mode() == Mode::Quantization) {
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
      const auto& layer = arch.layers[l];
      const auto counts = cfg[l].op_counts();
      for (std::size_t t = 0; t < counts.size(); ++t) {
        bits += static_cast<double>(layer.params_per_filter()) * counts[t] *
                layer.ops.quant_ops[t].weight;
      }
    }
    return bits;
  }
  int in = arch.input.channels;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const auto& layer = arch.layers[l];
    const int out = cfg[l].active_filters();
    bits += static_cast<double>(in) * layer.kernel * layer.kernel * out * opts.pruning_weight_bits;
    in = out;
  }
  return bits;
}

std::vector<double> layer_complexities(const ArchitectureSpec& arch, const NetworkConfig& cfg) {
  validate_config(arch, cfg);
  std::vector<double> per_layer;
  per_layer.reserve(arch.num_layers());
  if (arch.mode() == Mode::Quantization) {
    for (std::size_t l = 0; l < arch.num_layers(); ++l) per_layer.push_back(layer_bops(arch, cfg, l));
  } else {
    int in = arch.input.channels;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
      const int out = cfg[l].active_filters();
      per_layer.push_back(layer_macs(arch.layers[l], in, out));
      in = out;
    }
  }
  return per_layer;
}

double network_complexity(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                          const ComplexityOptions& opts) {
  const auto per_layer = layer_complexities(arch, cfg);
  double z = std::accumulate(per_layer.begin(), per_layer.end(), 0.0);
  if (opts.includes_memory(arch.mode())) z += memory_fetch_cost(arch, cfg, opts);
  return z;
}

ComplexityReport complexity_report(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                                   const NetworkConfig& target, const ComplexityOptions& opts) {
  ComplexityReport r;
  r.per_layer = layer_complexities(arch, cfg);
  r.memory_cost = memory_fetch_cost(arch, cfg, opts);
  r.memory_included = opts.includes_memory(arch.mode());
  r.total = std::accumulate(r.per_layer.begin(), r.per_layer.end(), 0.0);
  if (r.memory_included) r.total += r.memory_cost;
  r.target_total = network_complexity(arch, target, opts);
  r.ratio = r.total / r.target_total;
  return r;
}

double complexity_loss(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                       const NetworkConfig& target, const Sigma& sigma,
                       const ComplexityOptions& opts) {
  return sigma(network_complexity(arch, cfg, opts) / network_complexity(arch, target, opts));
}

}  // namespace dnas

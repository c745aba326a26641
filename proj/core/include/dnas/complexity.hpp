#pragma once

#include <span>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/sigma.hpp"

namespace dnas {

/// Whether the parameter-fetch cost is added to z_a. Auto adds it for
/// quantization (BOPs) and leaves pruning complexity as a pure MAC count.
enum class MemoryPolicy { Auto, Always, Never };

struct ComplexityOptions {
  MemoryPolicy memory = MemoryPolicy::Auto;
  /// Weight bits charged per parameter when pruning.
  int pruning_weight_bits = 32;

  bool includes_memory(Mode mode) const {
    return memory == MemoryPolicy::Always ||
           (memory == MemoryPolicy::Auto && mode == Mode::Quantization);
  }
};

/// Filters feeding a layer that share an activation bitwidth.
struct InputGroup {
  double count = 0.0;
  int activation_bits = 8;
};

struct ComplexityReport {
  std::vector<double> per_layer;  ///< B_l(a): BOPs or MACs
  double memory_cost = 0.0;       ///< parameter fetch bits
  bool memory_included = false;
  double total = 0.0;             ///< z_a
  double target_total = 0.0;      ///< z of the target configuration
  double ratio = 0.0;             ///< total / target_total
};

/// m n k^2 (b_a b_w + b_a + b_w + log2(n k^2)), the per-output-position cost
/// of a layer with uniform bitwidths. m output channels, n input channels.
double homogeneous_layer_bops(double m, double n, double k, double act_bits, double weight_bits);

/// b_w + log2(k^2 * sum_t a_t 2^{b^a_t}): log of the largest value a single
/// filter can accumulate. Real-valued.
double accumulator_width(std::span<const InputGroup> inputs, int weight_bits, int kernel);

/// Input groups of layer `index`: the network input as one group at
/// arch.input_bits for the first layer, otherwise the previous layer's
/// operation groups at their activation bits.
std::vector<InputGroup> input_groups(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                                     std::size_t index);

/// Filter-wise BOPs of one quantized layer:
///   H W sum_{t2} a_{n,t2} k^2 [c_{n-1} b^AW_{t2} + sum_{t1} a_{n-1,t1} b^a_{t1} b^w_{t2}]
double layer_bops(const LayerSpec& layer, std::span<const InputGroup> inputs,
                  const LayerConfig& out_cfg);
double layer_bops(const ArchitectureSpec& arch, const NetworkConfig& cfg, std::size_t index);

double layer_macs(const LayerSpec& layer, int in_filters, int out_filters);

/// Bits fetched to load every active parameter once.
double memory_fetch_cost(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                         const ComplexityOptions& opts = {});

/// Per-layer B_l(a): BOPs for quantization, MACs (classifier excluded) for pruning.
std::vector<double> layer_complexities(const ArchitectureSpec& arch, const NetworkConfig& cfg);

/// z_a.
double network_complexity(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                          const ComplexityOptions& opts = {});

ComplexityReport complexity_report(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                                   const NetworkConfig& target,
                                   const ComplexityOptions& opts = {});

/// sigma(z_a / z_target).
double complexity_loss(const ArchitectureSpec& arch, const NetworkConfig& cfg,
                       const NetworkConfig& target, const Sigma& sigma,
                       const ComplexityOptions& opts = {});

}  // namespace dnas

#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace dnas {

/// Exact, unbounded integer used for configuration-space sizes.
using BigCount = boost::multiprecision::cpp_int;

/// What the search assigns to filters: bitwidth tuples or active-filter counts.
enum class Mode { Quantization, Pruning };

/// Distribution family over layer configurations. Quantization layers draw a
/// multinomial over operations; pruning layers draw a binomial width.
enum class Family { Multinomial, Binomial };

constexpr Family family_for(Mode mode) {
  return mode == Mode::Quantization ? Family::Multinomial : Family::Binomial;
}

std::string to_string(Mode mode);
std::string to_string(Family family);

/// One quantization operation: weight bits and activation bits.
struct BitWidths {
  int weight = 32;
  int activation = 32;

  auto operator<=>(const BitWidths&) const = default;
};

struct OperationSet {
  Mode mode = Mode::Quantization;
  /// Ordered operation list; empty in pruning mode, where the set is the
  /// implicit range of filter counts.
  std::vector<BitWidths> quant_ops;

  void validate() const;
};

struct LayerSpec {
  int filters = 1;
  int in_channels = 1;
  int kernel = 1;
  int out_height = 1;
  int out_width = 1;
  OperationSet ops;

  /// |T_l| for quantization, C_l for pruning.
  std::size_t op_count() const;
  /// Weights of a single filter, excluding its bias.
  std::size_t params_per_filter() const {
    return static_cast<std::size_t>(in_channels) * kernel * kernel;
  }
  void validate() const;
};

struct InputShape {
  int channels = 1;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
};

/// A feed-forward stack of same-padded, stride-1 convolutions followed by
/// global average pooling and a linear classifier.
struct ArchitectureSpec {
  std::vector<LayerSpec> layers;
  int num_classes = 2;
  InputShape input;
  /// Bitwidth assumed for the (unquantized) network input in BOPs accounting.
  int input_bits = 8;

  Mode mode() const;
  Family family() const { return family_for(mode()); }
  std::size_t num_layers() const { return layers.size(); }
  /// Throws DomainError on any broken invariant (channel chaining, spatial
  /// dims, mixed modes).
  void validate() const;
};

/// Assignment for one layer. Multinomial: per-operation filter counts summing
/// to C_l. Binomial: a single sampled value a in [0, C_l - 1]; the layer then
/// runs a + 1 filters.
class LayerConfig {
 public:
  LayerConfig() = default;

  static LayerConfig counts(std::vector<int> per_op);
  static LayerConfig width(int sampled);

  Family family() const { return family_; }
  bool is_binomial() const { return family_ == Family::Binomial; }

  std::span<const int> op_counts() const { return values_; }
  int count(std::size_t op) const { return values_.at(op); }
  /// Binomial sampled value a_l.
  int sampled() const;
  /// Binomial active filter count a_l + 1.
  int active_filters() const { return sampled() + 1; }

  std::span<const int> values() const { return values_; }

  auto operator<=>(const LayerConfig&) const = default;

 private:
  LayerConfig(Family family, std::vector<int> values)
      : family_(family), values_(std::move(values)) {}

  Family family_ = Family::Multinomial;
  std::vector<int> values_;
};

struct NetworkConfig {
  std::vector<LayerConfig> layers;

  std::size_t size() const { return layers.size(); }
  const LayerConfig& operator[](std::size_t i) const { return layers[i]; }

  auto operator<=>(const NetworkConfig&) const = default;
};

void validate_layer_config(const LayerSpec& layer, const LayerConfig& cfg);
void validate_config(const ArchitectureSpec& arch, const NetworkConfig& cfg);

/// Active filter count of a layer under cfg (all filters for quantization).
int active_filters(const LayerSpec& layer, const LayerConfig& cfg);

/// Every filter of every layer assigned operation `op_index`.
NetworkConfig make_homogeneous(const ArchitectureSpec& arch, std::size_t op_index);
/// Every layer at round(ratio * C_l) filters (at least one).
NetworkConfig make_homogeneous_width(const ArchitectureSpec& arch, double ratio);

/// Widths used by slimmable training: {0.25, 0.5, 0.75, 1.0}.
std::vector<double> default_width_ratios();

/// Number of distinct LayerConfigs: C(C_l + |T_l| - 1, |T_l| - 1) for
/// multinomial layers, C_l for binomial ones. Exact.
BigCount layer_config_count(const LayerSpec& layer);
BigCount network_config_count(const ArchitectureSpec& arch);

/// Per-filter operation indices: the first a_{l,1} filters get op 0, the next
/// a_{l,2} get op 1, and so on.
std::vector<int> filter_assignment(const LayerSpec& layer, const LayerConfig& cfg);

/// Compact textual id. Multinomial layers print counts joined by '-', binomial
/// layers print the active filter count prefixed by 'w'; layers are joined
/// by '_'. Example: "3-1_0-4" or "w2_w4".
std::string config_id(const NetworkConfig& cfg);
NetworkConfig parse_config_id(const std::string& id);

/// Round half away from zero.
long round_half_away(double x);

}  // namespace dnas

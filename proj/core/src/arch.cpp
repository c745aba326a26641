#include "dnas/arch.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dnas/error.hpp"

namespace dnas {

std::string to_string(Mode mode) {
  return mode == Mode::Quantization ? "quantization" : "pruning";
}

std::string to_string(Family family) {
  return family == Family::Multinomial ? "multinomial" : "binomial";
}

long round_half_away(double x) {
  return static_cast<long>(std::round(x));  // std::round rounds halves away from zero
}

void OperationSet::validate() const {
  if (mode == Mode::Pruning) {
    if (!quant_ops.empty()) {
      throw DomainError("pruning operation set must not list bitwidth tuples");
    }
    return;
  }
  if (quant_ops.empty()) throw DomainError("quantization operation set is empty");
  std::set<BitWidths> seen;
  for (const auto& op : quant_ops) {
    if (op.weight < 1 || op.weight > 32 || op.activation < 1 || op.activation > 32) {
      throw DomainError("bitwidth outside 1..32: (" + std::to_string(op.weight) +
                        "," + std::to_string(op.activation) + ")");
    }
    if (!seen.insert(op).second) {
      throw DomainError("duplicate bitwidth tuple (" + std::to_string(op.weight) +
                        "," + std::to_string(op.activation) + ")");
    }
  }
}

std::size_t LayerSpec::op_count() const {
  return ops.mode == Mode::Quantization ? ops.quant_ops.size()
                                        : static_cast<std::size_t>(filters);
}

void LayerSpec::validate() const {
  if (filters < 1) throw DomainError("layer needs at least one filter");
  if (in_channels < 1) throw DomainError("layer needs at least one input channel");
  if (kernel < 1) throw DomainError("kernel size must be >= 1");
  if (out_height < 1 || out_width < 1) throw DomainError("spatial dims must be >= 1");
  ops.validate();
}

Mode ArchitectureSpec::mode() const {
  if (layers.empty()) throw DomainError("architecture has no layers");
  return layers.front().ops.mode;
}

void ArchitectureSpec::validate() const {
  if (layers.empty()) throw DomainError("architecture has no layers");
  if (num_classes < 2) throw DomainError("need at least two classes");
  if (input.channels < 1 || input.height < 1 || input.width < 1) {
    throw DomainError("input shape dims must be >= 1");
  }
  if (input_bits < 1 || input_bits > 32) throw DomainError("input_bits outside 1..32");
  const Mode m = layers.front().ops.mode;
  int prev = input.channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    l.validate();
    if (l.ops.mode != m) throw DomainError("layers mix quantization and pruning");
    if (l.in_channels != prev) {
      throw DomainError("layer " + std::to_string(i) + " expects " +
                        std::to_string(l.in_channels) + " input channels, previous provides " +
                        std::to_string(prev));
    }
    if (l.out_height != input.height || l.out_width != input.width) {
      throw DomainError("layer " + std::to_string(i) +
                        " spatial dims must match the input (same padding, stride 1)");
    }
    prev = l.filters;
  }
}

LayerConfig LayerConfig::counts(std::vector<int> per_op) {
  return LayerConfig(Family::Multinomial, std::move(per_op));
}

LayerConfig LayerConfig::width(int sampled) {
  return LayerConfig(Family::Binomial, {sampled});
}

int LayerConfig::sampled() const {
  if (family_ != Family::Binomial) throw DomainError("sampled() on a multinomial layer config");
  return values_.front();
}

void validate_layer_config(const LayerSpec& layer, const LayerConfig& cfg) {
  if (layer.ops.mode == Mode::Quantization) {
    if (cfg.family() != Family::Multinomial) {
      throw DomainError("quantization layer needs per-operation counts");
    }
    if (cfg.op_counts().size() != layer.ops.quant_ops.size()) {
      throw DomainError("config has " + std::to_string(cfg.op_counts().size()) +
                        " counts, layer has " + std::to_string(layer.ops.quant_ops.size()) +
                        " operations");
    }
    long sum = 0;
    for (int c : cfg.op_counts()) {
      if (c < 0) throw DomainError("negative operation count");
      sum += c;
    }
    if (sum != layer.filters) {
      throw DomainError("operation counts sum to " + std::to_string(sum) + ", layer has " +
                        std::to_string(layer.filters) + " filters");
    }
  } else {
    if (cfg.family() != Family::Binomial) {
      throw DomainError("pruning layer needs a sampled width");
    }
    const int a = cfg.sampled();
    if (a < 0 || a > layer.filters - 1) {
      throw DomainError("sampled width " + std::to_string(a) + " outside [0, " +
                        std::to_string(layer.filters - 1) + "]");
    }
  }
}

void validate_config(const ArchitectureSpec& arch, const NetworkConfig& cfg) {
  if (cfg.size() != arch.num_layers()) {
    throw DomainError("config has " + std::to_string(cfg.size()) + " layers, architecture has " +
                      std::to_string(arch.num_layers()));
  }
  for (std::size_t i = 0; i < cfg.size(); ++i) validate_layer_config(arch.layers[i], cfg[i]);
}

int active_filters(const LayerSpec& layer, const LayerConfig& cfg) {
  return cfg.is_binomial() ? cfg.active_filters() : layer.filters;
}

NetworkConfig make_homogeneous(const ArchitectureSpec& arch, std::size_t op_index) {
  if (arch.mode() != Mode::Quantization) {
    throw DomainError("make_homogeneous by operation index needs a quantization architecture");
  }
  NetworkConfig cfg;
  for (const auto& l : arch.layers) {
    if (op_index >= l.ops.quant_ops.size()) {
      throw DomainError("operation index " + std::to_string(op_index) + " out of range");
    }
    std::vector<int> counts(l.ops.quant_ops.size(), 0);
    counts[op_index] = l.filters;
    cfg.layers.push_back(LayerConfig::counts(std::move(counts)));
  }
  return cfg;
}

NetworkConfig make_homogeneous_width(const ArchitectureSpec& arch, double ratio) {
  if (arch.mode() != Mode::Pruning) {
    throw DomainError("make_homogeneous by width ratio needs a pruning architecture");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw DomainError("width ratio must lie in (0, 1]");
  }
  NetworkConfig cfg;
  for (const auto& l : arch.layers) {
    const long filters = std::max(1L, round_half_away(ratio * l.filters));
    cfg.layers.push_back(LayerConfig::width(static_cast<int>(filters) - 1));
  }
  return cfg;
}

std::vector<double> default_width_ratios() { return {0.25, 0.5, 0.75, 1.0}; }

BigCount layer_config_count(const LayerSpec& layer) {
  if (layer.ops.mode == Mode::Pruning) return BigCount(layer.filters);
  // C(n + k - 1, k - 1), computed incrementally; each partial product is
  // itself a binomial coefficient so the division is exact.
  const long n = layer.filters;
  const long k = static_cast<long>(layer.ops.quant_ops.size());
  BigCount result = 1;
  for (long i = 1; i <= k - 1; ++i) {
    result *= (n + i);
    result /= i;
  }
  return result;
}

BigCount network_config_count(const ArchitectureSpec& arch) {
  BigCount total = 1;
  for (const auto& l : arch.layers) total *= layer_config_count(l);
  return total;
}

std::vector<int> filter_assignment(const LayerSpec& layer, const LayerConfig& cfg) {
  if (layer.ops.mode != Mode::Quantization) {
    throw DomainError("filter_assignment applies to quantization layers");
  }
  validate_layer_config(layer, cfg);
  std::vector<int> ops;
  ops.reserve(static_cast<std::size_t>(layer.filters));
  const auto counts = cfg.op_counts();
  for (std::size_t op = 0; op < counts.size(); ++op) {
    ops.insert(ops.end(), static_cast<std::size_t>(counts[op]), static_cast<int>(op));
  }
  return ops;
}

std::string config_id(const NetworkConfig& cfg) {
  std::ostringstream out;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (i) out << '_';
    const auto& l = cfg[i];
    if (l.is_binomial()) {
      out << 'w' << l.active_filters();
    } else {
      const auto counts = l.op_counts();
      for (std::size_t j = 0; j < counts.size(); ++j) {
        if (j) out << '-';
        out << counts[j];
      }
    }
  }
  return out.str();
}

NetworkConfig parse_config_id(const std::string& id) {
  NetworkConfig cfg;
  std::istringstream layers(id);
  std::string token;
  while (std::getline(layers, token, '_')) {
    if (token.empty()) throw ConfigError("empty layer in config id '" + id + "'");
    try {
      if (token.front() == 'w') {
        std::size_t pos = 0;
        const int filters = std::stoi(token.substr(1), &pos);
        if (pos + 1 != token.size()) throw ConfigError("trailing characters");
        cfg.layers.push_back(LayerConfig::width(filters - 1));
      } else {
        std::vector<int> counts;
        std::istringstream parts(token);
        std::string part;
        while (std::getline(parts, part, '-')) {
          std::size_t pos = 0;
          counts.push_back(std::stoi(part, &pos));
          if (pos != part.size()) throw ConfigError("trailing characters");
        }
        cfg.layers.push_back(LayerConfig::counts(std::move(counts)));
      }
    } catch (const std::logic_error&) {
      throw ConfigError("malformed config id '" + id + "'");
    } catch (const ConfigError&) {
      throw ConfigError("malformed config id '" + id + "'");
    }
  }
  if (cfg.layers.empty()) throw ConfigError("empty config id");
  return cfg;
}

}  // namespace dnas

#include "dnas/oracle.hpp"

#include <functional>

#include "dnas/error.hpp"

namespace dnas {

namespace {

void compositions(int remaining, std::size_t slots, std::vector<int>& prefix,
                  std::vector<LayerConfig>& out) {
  if (prefix.size() + 1 == slots) {
    prefix.push_back(remaining);
    out.push_back(LayerConfig::counts(prefix));
    prefix.pop_back();
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    prefix.push_back(c);
    compositions(remaining - c, slots, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<LayerConfig> enumerate_layer(const LayerSpec& layer) {
  std::vector<LayerConfig> out;
  if (layer.ops.mode == Mode::Pruning) {
    for (int a = 0; a < layer.filters; ++a) out.push_back(LayerConfig::width(a));
    return out;
  }
  std::vector<int> prefix;
  compositions(layer.filters, layer.ops.quant_ops.size(), prefix, out);
  return out;
}

std::vector<NetworkConfig> enumerate_configs(const ArchitectureSpec& arch, std::uint64_t guard) {
  arch.validate();
  const BigCount count = network_config_count(arch);
  if (count > guard) {
    throw SpaceTooLarge("configuration space has " + count.str() +
                        " configurations, above the enumeration guard of " +
                        std::to_string(guard));
  }
  std::vector<std::vector<LayerConfig>> per_layer;
  for (const auto& l : arch.layers) per_layer.push_back(enumerate_layer(l));

  std::vector<NetworkConfig> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> idx(per_layer.size(), 0);
  while (true) {
    NetworkConfig cfg;
    for (std::size_t l = 0; l < per_layer.size(); ++l) cfg.layers.push_back(per_layer[l][idx[l]]);
    out.push_back(std::move(cfg));
    // Odometer increment, last layer fastest.
    std::size_t l = per_layer.size();
    while (l > 0) {
      --l;
      if (++idx[l] < per_layer[l].size()) break;
      idx[l] = 0;
      if (l == 0) return out;
    }
  }
}

EnumeratedSpace enumerate_space(const ArchitectureSpec& arch, const AlphaParams& alpha,
                                std::uint64_t guard) {
  alpha.validate(arch);
  EnumeratedSpace s;
  s.configs = enumerate_configs(arch, guard);
  s.probs.reserve(s.configs.size());
  for (const auto& c : s.configs) s.probs.push_back(network_config_prob(arch, alpha, c));
  return s;
}

AlphaGradient exact_grad(const ArchitectureSpec& arch, const AlphaParams& alpha,
                         const ConfigLoss& loss, std::uint64_t guard) {
  const auto space = enumerate_space(arch, alpha, guard);
  AlphaGradient g = AlphaParams::zeros(arch);
  std::vector<std::vector<NeumaierSum>> acc;
  for (const auto& v : g.per_layer) acc.emplace_back(v.size());
  for (std::size_t i = 0; i < space.configs.size(); ++i) {
    const double weight = loss(space.configs[i]) * space.probs[i];
    const auto sc = score_all(arch, alpha, space.configs[i]);
    for (std::size_t l = 0; l < sc.per_layer.size(); ++l) {
      for (std::size_t t = 0; t < sc.per_layer[l].size(); ++t) {
        acc[l][t].add(weight * sc.per_layer[l][t]);
      }
    }
  }
  for (std::size_t l = 0; l < acc.size(); ++l) {
    for (std::size_t t = 0; t < acc[l].size(); ++t) g.per_layer[l][t] = acc[l][t].value();
  }
  return g;
}

AlphaGradient finite_diff_grad(const ArchitectureSpec& arch, const AlphaParams& alpha,
                               const ConfigLoss& loss, double h, std::uint64_t guard) {
  alpha.validate(arch);
  const auto configs = enumerate_configs(arch, guard);
  std::vector<double> losses;
  losses.reserve(configs.size());
  for (const auto& c : configs) losses.push_back(loss(c));
  auto J = [&](const AlphaParams& a) {
    NeumaierSum s;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      s.add(network_config_prob(arch, a, configs[i]) * losses[i]);
    }
    return s.value();
  };
  AlphaGradient g = AlphaParams::zeros(arch);
  for (std::size_t l = 0; l < alpha.per_layer.size(); ++l) {
    for (std::size_t t = 0; t < alpha.per_layer[l].size(); ++t) {
      AlphaParams plus = alpha;
      AlphaParams minus = alpha;
      plus.per_layer[l][t] += h;
      minus.per_layer[l][t] -= h;
      g.per_layer[l][t] = (J(plus) - J(minus)) / (2.0 * h);
    }
  }
  return g;
}

NetworkConfig grid_optimum(const ArchitectureSpec& arch, const ConfigLoss& loss, double cap,
                           const ComplexityOptions& opts, std::uint64_t guard) {
  const auto configs = enumerate_configs(arch, guard);
  const NetworkConfig* best = nullptr;
  double best_loss = 0.0;
  for (const auto& c : configs) {
    if (network_complexity(arch, c, opts) > cap) continue;
    const double l = loss(c);
    if (!best || l < best_loss) {
      best = &c;
      best_loss = l;
    }
  }
  if (!best) {
    throw DomainError("no configuration satisfies the complexity cap " + std::to_string(cap));
  }
  return *best;
}

}  // namespace dnas

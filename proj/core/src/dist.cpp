#include "dnas/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dnas/error.hpp"

namespace dnas {

namespace {

constexpr double kLogClamp = 1e-12;

double safe_log(double p) { return std::log(std::clamp(p, kLogClamp, 1.0 - kLogClamp)); }

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

void check_layer_index(const AlphaParams& alpha, std::size_t layer) {
  if (layer >= alpha.per_layer.size()) {
    throw DomainError("layer index " + std::to_string(layer) + " out of range");
  }
}

}  // namespace

AlphaParams AlphaParams::zeros(const ArchitectureSpec& arch) {
  AlphaParams a;
  a.family = arch.family();
  for (const auto& l : arch.layers) {
    a.per_layer.emplace_back(a.family == Family::Multinomial ? l.op_count() : 1, 0.0);
  }
  return a;
}

AlphaParams AlphaParams::from_probability(const ArchitectureSpec& arch, double p) {
  if (arch.family() != Family::Binomial) {
    throw DomainError("from_probability needs a binomial (pruning) architecture");
  }
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
  AlphaParams a = zeros(arch);
  for (auto& v : a.per_layer) v[0] = logit(p);
  return a;
}

std::size_t AlphaParams::num_params() const {
  std::size_t n = 0;
  for (const auto& v : per_layer) n += v.size();
  return n;
}

void AlphaParams::validate(const ArchitectureSpec& arch) const {
  if (family != arch.family()) {
    throw DomainError("alpha family " + to_string(family) + " does not match architecture (" +
                      to_string(arch.family()) + ")");
  }
  if (per_layer.size() != arch.num_layers()) {
    throw DomainError("alpha has " + std::to_string(per_layer.size()) +
                      " layers, architecture has " + std::to_string(arch.num_layers()));
  }
  for (std::size_t i = 0; i < per_layer.size(); ++i) {
    const std::size_t want = family == Family::Multinomial ? arch.layers[i].op_count() : 1;
    if (per_layer[i].size() != want) {
      throw DomainError("alpha layer " + std::to_string(i) + " has " +
                        std::to_string(per_layer[i].size()) + " entries, expected " +
                        std::to_string(want));
    }
    for (double v : per_layer[i]) {
      if (!std::isfinite(v)) throw DomainError("alpha contains a non-finite entry");
    }
  }
}

std::vector<double> softmax_probs(std::span<const double> alpha) {
  if (alpha.empty()) throw DomainError("softmax of an empty vector");
  const double shift = *std::max_element(alpha.begin(), alpha.end());
  std::vector<double> p(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    p[i] = std::exp(alpha[i] - shift);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double sigmoid_prob(double alpha) {
  // Both branches avoid exp overflow.
  if (alpha >= 0.0) return 1.0 / (1.0 + std::exp(-alpha));
  const double e = std::exp(alpha);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

std::vector<double> layer_probs(const AlphaParams& alpha, std::size_t layer) {
  check_layer_index(alpha, layer);
  const auto& a = alpha.per_layer[layer];
  if (alpha.family == Family::Multinomial) return softmax_probs(a);
  return {sigmoid_prob(a.at(0))};
}

double multinomial_log_pmf(const LayerSpec& layer, std::span<const double> probs,
                           const LayerConfig& cfg) {
  validate_layer_config(layer, cfg);
  if (probs.size() != cfg.op_counts().size()) {
    throw DomainError("probability vector length does not match operation count");
  }
  double lp = log_factorial(layer.filters);
  const auto counts = cfg.op_counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    lp -= log_factorial(counts[k]);
    if (counts[k] > 0) lp += counts[k] * safe_log(probs[k]);
  }
  return lp;
}

double multinomial_pmf(const LayerSpec& layer, std::span<const double> probs,
                       const LayerConfig& cfg) {
  return std::exp(multinomial_log_pmf(layer, probs, cfg));
}

double binomial_log_pmf(const LayerSpec& layer, double p, const LayerConfig& cfg) {
  validate_layer_config(layer, cfg);
  const int trials = layer.filters - 1;
  const int a = cfg.sampled();
  double lp = log_factorial(trials) - log_factorial(a) - log_factorial(trials - a);
  if (a > 0) lp += a * safe_log(p);
  if (trials - a > 0) lp += (trials - a) * safe_log(1.0 - p);
  return lp;
}

double binomial_pmf(const LayerSpec& layer, double p, const LayerConfig& cfg) {
  return std::exp(binomial_log_pmf(layer, p, cfg));
}

double layer_pmf(const LayerSpec& layer, std::span<const double> probs, const LayerConfig& cfg) {
  if (layer.ops.mode == Mode::Quantization) return multinomial_pmf(layer, probs, cfg);
  return binomial_pmf(layer, probs.front(), cfg);
}

LayerConfig sample_layer(const LayerSpec& layer, std::span<const double> probs, Rng& rng) {
  if (layer.ops.mode == Mode::Pruning) {
    const double p = probs.front();
    int a = 0;
    for (int i = 0; i < layer.filters - 1; ++i) {
      if (rng.uniform() < p) ++a;
    }
    return LayerConfig::width(a);
  }
  std::vector<double> cumulative(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cumulative.begin());
  std::vector<int> counts(probs.size(), 0);
  for (int f = 0; f < layer.filters; ++f) {
    const double u = rng.uniform() * cumulative.back();
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
    ++counts[k];
  }
  return LayerConfig::counts(std::move(counts));
}

NetworkConfig sample_network(const ArchitectureSpec& arch, const AlphaParams& alpha, Rng& rng) {
  alpha.validate(arch);
  NetworkConfig cfg;
  cfg.layers.reserve(arch.num_layers());
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const auto probs = layer_probs(alpha, l);
    cfg.layers.push_back(sample_layer(arch.layers[l], probs, rng));
  }
  return cfg;
}

double network_config_log_prob(const ArchitectureSpec& arch, const AlphaParams& alpha,
                               const NetworkConfig& cfg) {
  alpha.validate(arch);
  validate_config(arch, cfg);
  double lp = 0.0;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const auto probs = layer_probs(alpha, l);
    lp += arch.family() == Family::Multinomial
              ? multinomial_log_pmf(arch.layers[l], probs, cfg[l])
              : binomial_log_pmf(arch.layers[l], probs[0], cfg[l]);
  }
  return lp;
}

double network_config_prob(const ArchitectureSpec& arch, const AlphaParams& alpha,
                           const NetworkConfig& cfg) {
  return std::exp(network_config_log_prob(arch, alpha, cfg));
}

double multinomial_layer_pmf_grad(const LayerSpec& layer, std::span<const double> probs,
                                  const LayerConfig& cfg, std::size_t op) {
  const double pmf = multinomial_pmf(layer, probs, cfg);
  if (op >= probs.size()) throw DomainError("operation index out of range");
  return (cfg.count(op) - layer.filters * probs[op]) * pmf;
}

double binomial_layer_pmf_grad(const LayerSpec& layer, double p, const LayerConfig& cfg) {
  const double pmf = binomial_pmf(layer, p, cfg);
  return (cfg.sampled() - (layer.filters - 1) * p) * pmf;
}

double score(const ArchitectureSpec& arch, const AlphaParams& alpha, const NetworkConfig& cfg,
             std::size_t layer, std::size_t op) {
  check_layer_index(alpha, layer);
  if (cfg.size() != arch.num_layers()) throw DomainError("config/architecture layer mismatch");
  const auto& spec = arch.layers[layer];
  const auto probs = layer_probs(alpha, layer);
  validate_layer_config(spec, cfg[layer]);
  if (alpha.family == Family::Multinomial) {
    if (op >= probs.size()) throw DomainError("operation index out of range");
    return cfg[layer].count(op) - spec.filters * probs[op];
  }
  if (op != 0) throw DomainError("binomial layers have a single parameter");
  return cfg[layer].sampled() - (spec.filters - 1) * probs[0];
}

AlphaGradient score_all(const ArchitectureSpec& arch, const AlphaParams& alpha,
                        const NetworkConfig& cfg) {
  alpha.validate(arch);
  validate_config(arch, cfg);
  AlphaGradient g = AlphaParams::zeros(arch);
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const auto& spec = arch.layers[l];
    const auto probs = layer_probs(alpha, l);
    if (alpha.family == Family::Multinomial) {
      for (std::size_t t = 0; t < probs.size(); ++t) {
        g.per_layer[l][t] = cfg[l].count(t) - spec.filters * probs[t];
      }
    } else {
      g.per_layer[l][0] = cfg[l].sampled() - (spec.filters - 1) * probs[0];
    }
  }
  return g;
}

double network_config_prob_grad(const ArchitectureSpec& arch, const AlphaParams& alpha,
                                const NetworkConfig& cfg, std::size_t layer, std::size_t op) {
  return score(arch, alpha, cfg, layer, op) * network_config_prob(arch, alpha, cfg);
}

}  // namespace dnas

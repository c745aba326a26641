#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/rng.hpp"

namespace dnas {

/// Trainable distribution parameters. Multinomial layers hold |T_l| logits,
/// binomial layers a single logit.
struct AlphaParams {
  Family family = Family::Multinomial;
  std::vector<std::vector<double>> per_layer;

  /// All-zero parameters shaped for `arch` (uniform softmax, p = 0.5).
  static AlphaParams zeros(const ArchitectureSpec& arch);
  /// Binomial parameters whose sigmoid equals `p` in every layer.
  static AlphaParams from_probability(const ArchitectureSpec& arch, double p);

  std::size_t num_layers() const { return per_layer.size(); }
  std::size_t num_params() const;
  /// Shape and finiteness check against the architecture.
  void validate(const ArchitectureSpec& arch) const;

  bool operator==(const AlphaParams&) const = default;
};

/// Gradients share the parameter layout.
using AlphaGradient = AlphaParams;

/// Max-shifted softmax.
std::vector<double> softmax_probs(std::span<const double> alpha);
double sigmoid_prob(double alpha);
/// Inverse of sigmoid_prob.
double logit(double p);

/// Normalized probabilities of one layer: the softmax vector for multinomial
/// layers, {sigmoid(alpha)} for binomial ones.
std::vector<double> layer_probs(const AlphaParams& alpha, std::size_t layer);

double multinomial_log_pmf(const LayerSpec& layer, std::span<const double> probs,
                           const LayerConfig& cfg);
double multinomial_pmf(const LayerSpec& layer, std::span<const double> probs,
                       const LayerConfig& cfg);
double binomial_log_pmf(const LayerSpec& layer, double p, const LayerConfig& cfg);
double binomial_pmf(const LayerSpec& layer, double p, const LayerConfig& cfg);

/// Family-dispatching layer pmf given the layer's normalized probabilities.
double layer_pmf(const LayerSpec& layer, std::span<const double> probs, const LayerConfig& cfg);

/// C_l categorical draws (multinomial) or C_l - 1 Bernoulli draws (binomial).
LayerConfig sample_layer(const LayerSpec& layer, std::span<const double> probs, Rng& rng);
NetworkConfig sample_network(const ArchitectureSpec& arch, const AlphaParams& alpha, Rng& rng);

double network_config_log_prob(const ArchitectureSpec& arch, const AlphaParams& alpha,
                               const NetworkConfig& cfg);
double network_config_prob(const ArchitectureSpec& arch, const AlphaParams& alpha,
                           const NetworkConfig& cfg);

/// d Pr(a_l) / d alpha_{l,t} = (a_{l,t} - C_l p_t) Pr(a_l).
double multinomial_layer_pmf_grad(const LayerSpec& layer, std::span<const double> probs,
                                  const LayerConfig& cfg, std::size_t op);
/// d Pr(a_l) / d alpha_l = (a_l - (C_l - 1) p) Pr(a_l).
double binomial_layer_pmf_grad(const LayerSpec& layer, double p, const LayerConfig& cfg);

/// Score factor d log p(a|alpha) / d alpha_{l,t}. Multinomial layers use C_l
/// trials, binomial layers C_l - 1.
double score(const ArchitectureSpec& arch, const AlphaParams& alpha, const NetworkConfig& cfg,
             std::size_t layer, std::size_t op);
/// Score for every parameter, laid out like alpha.
AlphaGradient score_all(const ArchitectureSpec& arch, const AlphaParams& alpha,
                        const NetworkConfig& cfg);

/// d p(a|alpha) / d alpha_{l,t} = score * p(a|alpha).
double network_config_prob_grad(const ArchitectureSpec& arch, const AlphaParams& alpha,
                                const NetworkConfig& cfg, std::size_t layer, std::size_t op);

}  // namespace dnas

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "dnas/dist.hpp"
#include "dnas/error.hpp"
#include "../support/toys.hpp"

using namespace dnas;

namespace {

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Direct multinomial formula, no logs.
double multinomial_direct(const std::vector<int>& a, const std::vector<double>& p) {
  int c = 0;
  double v = 1.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    c += a[t];
    v *= std::pow(p[t], a[t]) / factorial(a[t]);
  }
  return v * factorial(c);
}

double binomial_direct(int a, int trials, double p) {
  return factorial(trials) / (factorial(a) * factorial(trials - a)) * std::pow(p, a) *
         std::pow(1 - p, trials - a);
}

LayerSpec quant_layer(int filters, int ops) {
  LayerSpec l;
  l.filters = filters;
  for (int i = 1; i <= ops; ++i) l.ops.quant_ops.push_back({i, i});
  return l;
}

LayerSpec prune_layer(int filters) {
  LayerSpec l;
  l.filters = filters;
  l.ops.mode = Mode::Pruning;
  return l;
}

}  // namespace

TEST(Dist, Softmax) {
  auto p = softmax_probs(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  p = softmax_probs(std::vector<double>{std::log(3.0), 0.0});
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
  p = softmax_probs(std::vector<double>{1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  // Shift invariance: (1000, 0) equals (1, 0) shifted, i.e. e^1000 / (e^1000 + 1).
  EXPECT_NEAR(p[1], std::exp(-1000.0), 1e-300);
}

TEST(Dist, Sigmoid) {
  EXPECT_DOUBLE_EQ(sigmoid_prob(0.0), 0.5);
  EXPECT_NEAR(sigmoid_prob(std::log(3.0)), 0.75, 1e-15);
  for (double a : {0.3, 2.0, 17.0, 700.0}) {
    EXPECT_NEAR(sigmoid_prob(-a), 1.0 - sigmoid_prob(a), 1e-15);
  }
  EXPECT_NEAR(logit(sigmoid_prob(1.7)), 1.7, 1e-12);
}

TEST(Dist, MultinomialPmfHandValues) {
  const auto l = quant_layer(2, 2);
  const std::vector<double> half = {0.5, 0.5};
  EXPECT_NEAR(multinomial_pmf(l, half, LayerConfig::counts({1, 1})), 0.5, 1e-15);
  EXPECT_NEAR(multinomial_pmf(l, half, LayerConfig::counts({2, 0})), 0.25, 1e-15);
}

TEST(Dist, MultinomialPmfMatchesDirectFormula) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + static_cast<int>(rng.below(6));
    const auto l = quant_layer(c, 3);
    std::vector<double> alpha = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const auto p = softmax_probs(alpha);
    double total = 0.0;
    for (int a0 = 0; a0 <= c; ++a0) {
      for (int a1 = 0; a0 + a1 <= c; ++a1) {
        const std::vector<int> a = {a0, a1, c - a0 - a1};
        const double v = multinomial_pmf(l, p, LayerConfig::counts(a));
        EXPECT_NEAR(v, multinomial_direct(a, p), 1e-13);
        total += v;
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Dist, BinomialPmf) {
  const auto l = prune_layer(4);
  EXPECT_NEAR(binomial_pmf(l, 0.5, LayerConfig::width(1)), 0.375, 1e-15);
  EXPECT_NEAR(binomial_pmf(l, 0.5, LayerConfig::width(0)), 0.125, 1e-15);
  for (double p : {0.1, 0.5, 0.83}) {
    double total = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double v = binomial_pmf(l, p, LayerConfig::width(a));
      EXPECT_NEAR(v, binomial_direct(a, 3, p), 1e-15);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(Dist, SampleNearDegenerate) {
  const auto l = quant_layer(5, 2);
  Rng rng(1);
  const std::vector<double> p = {1.0 - 1e-300, 1e-300};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_layer(l, p, rng), LayerConfig::counts({5, 0}));
}

TEST(Dist, SamplingFrequenciesMatchPmf) {
  const auto arch = toys::conv_arch(Mode::Quantization, {3}, 1, {{2, 2}, {4, 4}, {8, 8}});
  AlphaParams alpha = AlphaParams::zeros(arch);
  alpha.per_layer[0] = {0.4, -0.3, 0.1};
  Rng rng(77);
  const int n = 100000;
  std::map<NetworkConfig, int> counts;
  for (int i = 0; i < n; ++i) ++counts[sample_network(arch, alpha, rng)];
  EXPECT_EQ(counts.size(), 10u);
  for (const auto& [cfg, k] : counts) {
    const double p = network_config_prob(arch, alpha, cfg);
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(k) / n, p, 4 * se) << config_id(cfg);
  }

  const auto prune = toys::conv_arch(Mode::Pruning, {5}, 1);
  AlphaParams b = AlphaParams::from_probability(prune, 0.3);
  std::map<NetworkConfig, int> bc;
  for (int i = 0; i < n; ++i) ++bc[sample_network(prune, b, rng)];
  for (const auto& [cfg, k] : bc) {
    const double p = binomial_direct(cfg[0].sampled(), 4, 0.3);
    EXPECT_NEAR(static_cast<double>(k) / n, p, 4 * std::sqrt(p * (1 - p) / n));
  }
}

TEST(Dist, SamplingIsDeterministic) {
  const auto arch = toys::quant_toy();
  const auto alpha = AlphaParams::zeros(arch);
  Rng a(3), b(3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_network(arch, alpha, a), sample_network(arch, alpha, b));
}

TEST(Dist, NetworkProbability) {
  const auto one = toys::three_config_toy();
  const auto alpha = AlphaParams::zeros(one);
  const NetworkConfig c{{LayerConfig::counts({1, 1})}};
  EXPECT_DOUBLE_EQ(network_config_prob(one, alpha, c),
                   multinomial_pmf(one.layers[0], softmax_probs(alpha.per_layer[0]), c[0]));

  const auto two = toys::conv_arch(Mode::Quantization, {2, 2}, 1, {{2, 2}, {8, 8}}, {1, 1, 1}, 2);
  const auto a2 = AlphaParams::zeros(two);
  EXPECT_NEAR(network_config_prob(two, a2, parse_config_id("1-1_1-1")), 0.25, 1e-15);
  double total = 0.0;
  for (const char* id : {"2-0", "1-1", "0-2"}) {
    for (const char* id2 : {"2-0", "1-1", "0-2"}) {
      total += network_config_prob(two, a2, parse_config_id(std::string(id) + "_" + id2));
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(Dist, PmfGradientHandValues) {
  const auto l = quant_layer(2, 2);
  const auto p = softmax_probs(std::vector<double>{0.0, 0.0});
  EXPECT_NEAR(multinomial_layer_pmf_grad(l, p, LayerConfig::counts({1, 1}), 0), 0.0, 1e-15);
  EXPECT_NEAR(multinomial_layer_pmf_grad(l, p, LayerConfig::counts({2, 0}), 0), 0.25, 1e-15);

  // Finite differences on the first logit, independent of the analytic form.
  const double h = 1e-5;
  auto pmf_at = [&](double a0) {
    return multinomial_pmf(l, softmax_probs(std::vector<double>{a0, 0.0}), LayerConfig::counts({2, 0}));
  };
  EXPECT_NEAR((pmf_at(h) - pmf_at(-h)) / (2 * h), 0.25, 1e-9);

  const auto b = prune_layer(4);
  EXPECT_NEAR(binomial_layer_pmf_grad(b, 0.5, LayerConfig::width(1)), -0.1875, 1e-15);
  const auto bp = prune_layer(5);
  EXPECT_NEAR(binomial_layer_pmf_grad(bp, 0.5, LayerConfig::width(2)), 0.0, 1e-15);
  double sum = 0.0;
  for (int a = 0; a < 4; ++a) sum += binomial_layer_pmf_grad(b, 0.37, LayerConfig::width(a));
  EXPECT_NEAR(sum, 0.0, 1e-15);
}

TEST(Dist, ScoreFunction) {
  const auto arch = toys::conv_arch(Mode::Pruning, {4}, 1);
  const auto alpha = AlphaParams::zeros(arch);
  EXPECT_NEAR(score(arch, alpha, NetworkConfig{{LayerConfig::width(3)}}, 0, 0), 1.5, 1e-15);

  // Score equals the finite-difference derivative of log p on a 2-layer toy.
  const auto q = toys::conv_arch(Mode::Quantization, {3, 2}, 1, {{2, 2}, {4, 4}, {8, 8}});
  AlphaParams a = AlphaParams::zeros(q);
  a.per_layer = {{0.2, -0.5, 0.9}, {1.1, 0.0, -0.4}};
  const auto cfg = parse_config_id("2-0-1_0-1-1");
  const double h = 1e-6;
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t t = 0; t < 3; ++t) {
      auto up = a, down = a;
      up.per_layer[l][t] += h;
      down.per_layer[l][t] -= h;
      const double fd = (network_config_log_prob(q, up, cfg) - network_config_log_prob(q, down, cfg)) / (2 * h);
      EXPECT_NEAR(score(q, a, cfg, l, t), fd, 1e-8);
      EXPECT_NEAR(network_config_prob_grad(q, a, cfg, l, t),
                  fd * network_config_prob(q, a, cfg), 1e-9);
    }
  }
}

TEST(Dist, ScoreHasZeroMean) {
  const auto arch = toys::quant_toy();
  AlphaParams a = AlphaParams::zeros(arch);
  a.per_layer = {{0.3, -0.2}, {-1.0, 0.5}};
  Rng rng(11);
  const int n = 100000;
  std::vector<double> sum(4, 0.0), sq(4, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto g = score_all(arch, a, sample_network(arch, a, rng));
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t t = 0; t < 2; ++t) {
        sum[2 * l + t] += g.per_layer[l][t];
        sq[2 * l + t] += g.per_layer[l][t] * g.per_layer[l][t];
      }
    }
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double mean = sum[k] / n;
    const double se = std::sqrt((sq[k] / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean), 4 * se);
  }
}

TEST(Dist, AlphaValidation) {
  const auto arch = toys::quant_toy();
  AlphaParams a = AlphaParams::zeros(arch);
  EXPECT_NO_THROW(a.validate(arch));
  EXPECT_EQ(a.num_params(), 4u);
  a.per_layer[1].push_back(0.0);
  EXPECT_THROW(a.validate(arch), DomainError);
  a = AlphaParams::zeros(arch);
  a.per_layer[0][0] = std::nan("");
  EXPECT_THROW(a.validate(arch), DomainError);
  const auto p = AlphaParams::from_probability(toys::prune_toy(), 0.75);
  EXPECT_NEAR(sigmoid_prob(p.per_layer[0][0]), 0.75, 1e-15);
  EXPECT_NEAR(AlphaParams::from_probability(toys::prune_toy(), 0.5).per_layer[0][0], 0.0, 1e-15);
}

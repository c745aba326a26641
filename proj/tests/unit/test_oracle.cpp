#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "dnas/complexity.hpp"
#include "dnas/dist.hpp"
#include "dnas/error.hpp"
#include "dnas/oracle.hpp"
#include "dnas/rng.hpp"
#include "../support/toys.hpp"

using namespace dnas;

namespace {

ConfigLoss random_table(const ArchitectureSpec& arch, std::uint64_t seed) {
  auto table = std::make_shared<std::map<NetworkConfig, double>>();
  Rng rng(seed);
  for (const auto& c : enumerate_configs(arch)) (*table)[c] = rng.uniform() * 2;
  return [table](const NetworkConfig& c) { return table->at(c); };
}

AlphaParams random_alpha(const ArchitectureSpec& arch, Rng& rng) {
  AlphaParams a = AlphaParams::zeros(arch);
  for (auto& l : a.per_layer) {
    for (double& x : l) x = rng.normal();
  }
  return a;
}

}  // namespace

TEST(Enumeration, CountsAndOrder) {
  const auto q = toys::conv_arch(Mode::Quantization, {3, 2}, 1, {{2, 2}, {4, 4}, {8, 8}});
  const auto layer = enumerate_layer(q.layers[0]);
  EXPECT_EQ(layer.size(), 10u);
  for (std::size_t i = 1; i < layer.size(); ++i) {
    EXPECT_TRUE(std::lexicographical_compare(layer[i - 1].values().begin(), layer[i - 1].values().end(),
                                             layer[i].values().begin(), layer[i].values().end()));
  }
  EXPECT_EQ(enumerate_configs(q).size(), 10u * 6u);
  EXPECT_EQ(enumerate_configs(q).front(), parse_config_id("0-0-3_0-0-2"));

  const auto p = toys::prune_toy();
  const auto all = enumerate_configs(p);
  ASSERT_EQ(all.size(), 16u);
  EXPECT_EQ(config_id(all.front()), "w1_w1");
  EXPECT_EQ(config_id(all[1]), "w1_w2");
  EXPECT_EQ(config_id(all.back()), "w4_w4");
  EXPECT_THROW(enumerate_configs(p, 15), SpaceTooLarge);
}

TEST(Enumeration, SpaceIsNormalized) {
  Rng rng(3);
  for (const auto& arch : {toys::quant_toy(), toys::prune_toy()}) {
    const auto alpha = random_alpha(arch, rng);
    const auto space = enumerate_space(arch, alpha);
    NeumaierSum s;
    for (std::size_t i = 0; i < space.probs.size(); ++i) {
      s.add(space.probs[i]);
      EXPECT_NEAR(space.probs[i], network_config_prob(arch, alpha, space.configs[i]), 1e-15);
    }
    EXPECT_NEAR(s.value(), 1.0, 1e-12);
  }
}

TEST(ExactGrad, MatchesFiniteDifferences) {
  Rng rng(9);
  for (const auto& arch : {toys::quant_toy(), toys::prune_toy(), toys::three_config_toy()}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto loss = random_table(arch, rng.next());
      const auto alpha = random_alpha(arch, rng);
      const auto exact = exact_grad(arch, alpha, loss);
      const auto fd = finite_diff_grad(arch, alpha, loss);
      // Richardson: the error of central differences falls 4x when h halves.
      const auto coarse = finite_diff_grad(arch, alpha, loss, 1e-2);
      const auto fine = finite_diff_grad(arch, alpha, loss, 5e-3);
      for (std::size_t l = 0; l < alpha.per_layer.size(); ++l) {
        for (std::size_t t = 0; t < alpha.per_layer[l].size(); ++t) {
          const double e = exact.per_layer[l][t];
          EXPECT_NEAR(e, fd.per_layer[l][t], 1e-8 + 1e-6 * std::abs(e));
          const double rich = (4 * fine.per_layer[l][t] - coarse.per_layer[l][t]) / 3;
          EXPECT_NEAR(e, rich, 1e-8);
        }
      }
    }
  }
}

TEST(ExactGrad, ThreeConfigToy) {
  // Loss 1 on (2,0) only. At p = (1/2, 1/2) that config has probability 1/4
  // and score (2 - 1, 0 - 1).
  const auto arch = toys::three_config_toy();
  const ConfigLoss loss = [](const NetworkConfig& c) { return c[0].count(0) == 2 ? 1.0 : 0.0; };
  const auto g = exact_grad(arch, AlphaParams::zeros(arch), loss);
  EXPECT_NEAR(g.per_layer[0][0], 0.25, 1e-15);
  EXPECT_NEAR(g.per_layer[0][1], -0.25, 1e-15);
}

TEST(GridOptimum, ArgminCapAndTies) {
  const auto arch = toys::prune_toy();
  const ConfigLoss wider_is_better = [](const NetworkConfig& c) {
    return 10.0 - c[0].active_filters() - c[1].active_filters();
  };
  EXPECT_EQ(config_id(grid_optimum(arch, wider_is_better)), "w4_w4");
  const double cap = network_complexity(arch, parse_config_id("w2_w2"));
  const auto capped = grid_optimum(arch, wider_is_better, cap);
  EXPECT_LE(network_complexity(arch, capped), cap);
  double best = 1e9;
  for (const auto& c : enumerate_configs(arch)) {
    if (network_complexity(arch, c) <= cap) best = std::min(best, wider_is_better(c));
  }
  EXPECT_EQ(wider_is_better(capped), best);
  EXPECT_EQ(config_id(capped), "w1_w4");
  const ConfigLoss flat = [](const NetworkConfig&) { return 1.0; };
  EXPECT_EQ(config_id(grid_optimum(arch, flat)), "w1_w1");
  EXPECT_THROW(grid_optimum(arch, flat, 0.0), DomainError);
}

TEST(Neumaier, RecoversLostLowBits) {
  NeumaierSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1.0);
}

TEST(LemmaSuite, SmallRunPasses) {
  LemmaSuiteOptions o;
  o.instances = 10;
  o.seed = 3;
  const auto r = run_lemma_suite(o);
  EXPECT_TRUE(r.passed()) << r.table();
  for (const auto& c : r.checks) EXPECT_GT(c.cases, 0u) << c.name;
  EXPECT_THROW(r.at("no such check"), DomainError);
}

TEST(LemmaSuite, RandomToysStayInBounds) {
  Rng rng(1);
  for (Family f : {Family::Multinomial, Family::Binomial}) {
    for (int i = 0; i < 50; ++i) {
      const auto arch = random_toy_arch(rng, f);
      EXPECT_GE(arch.num_layers(), 1u);
      EXPECT_LE(arch.num_layers(), 3u);
      for (const auto& l : arch.layers) {
        EXPECT_GE(l.filters, 2);
        EXPECT_LE(l.filters, 6);
        if (f == Family::Multinomial) {
          EXPECT_GE(l.ops.quant_ops.size(), 2u);
          EXPECT_LE(l.ops.quant_ops.size(), 4u);
        }
      }
    }
  }
}

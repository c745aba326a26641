#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dnas/data.hpp"
#include "dnas/dist.hpp"
#include "dnas/error.hpp"
#include "dnas/objective.hpp"
#include "dnas/rng.hpp"
#include "dnas/search.hpp"
#include "../support/toys.hpp"

using namespace dnas;

namespace {

// d log p / d alpha by central differences, one coordinate at a time.
AlphaGradient fd_score(const ArchitectureSpec& arch, const AlphaParams& alpha,
                       const NetworkConfig& cfg) {
  AlphaGradient g = alpha;
  const double h = 1e-6;
  for (std::size_t l = 0; l < alpha.per_layer.size(); ++l) {
    for (std::size_t t = 0; t < alpha.per_layer[l].size(); ++t) {
      AlphaParams up = alpha, down = alpha;
      up.per_layer[l][t] += h;
      down.per_layer[l][t] -= h;
      g.per_layer[l][t] = (network_config_log_prob(arch, up, cfg) -
                           network_config_log_prob(arch, down, cfg)) / (2 * h);
    }
  }
  return g;
}

Dataset small_data(int per_class = 8) {
  SyntheticSpec ds;
  ds.train_per_class = per_class;
  ds.validation_per_class = 4;
  ds.seed = 5;
  return make_cluster_images(ds);
}

SearchSettings quick(int iterations) {
  SearchSettings s;
  s.sample_size = 3;
  s.alpha_lr = 0.1;
  s.max_iterations = iterations;
  s.convergence_threshold = 0.0;
  s.fine_tune_epochs = 1;
  s.train.batch_size = 16;
  return s;
}

}  // namespace

TEST(Estimator, MatchesScoreOracle) {
  Rng rng(4);
  for (const auto& arch : {toys::quant_toy(), toys::prune_toy(),
                           toys::conv_arch(Mode::Quantization, {3}, 1, {{2, 2}, {4, 4}, {8, 8}})}) {
    AlphaParams alpha = AlphaParams::zeros(arch);
    for (auto& l : alpha.per_layer) {
      for (double& a : l) a = rng.normal();
    }
    SampleSet s;
    for (int i = 0; i < 5; ++i) {
      s.configs.push_back(sample_network(arch, alpha, rng));
      s.losses.push_back(rng.uniform() * 3);
    }
    const AlphaGradient g = estimate_gradient(arch, s, alpha);
    for (std::size_t l = 0; l < alpha.per_layer.size(); ++l) {
      for (std::size_t t = 0; t < alpha.per_layer[l].size(); ++t) {
        double want = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
          want += s.losses[i] * fd_score(arch, alpha, s.configs[i]).per_layer[l][t] / 5.0;
        }
        EXPECT_NEAR(g.per_layer[l][t], want, 1e-7);
      }
    }
  }
}

TEST(Estimator, ConstantLossHasZeroMeanAndRejectsNonFinite) {
  const auto arch = toys::three_config_toy();
  const AlphaParams alpha = AlphaParams::zeros(arch);
  Rng rng(1);
  SampleSet s;
  for (int i = 0; i < 4000; ++i) {
    s.configs.push_back(sample_network(arch, alpha, rng));
    s.losses.push_back(1.0);
  }
  const auto g = estimate_gradient(arch, s, alpha);
  for (double x : g.per_layer[0]) EXPECT_NEAR(x, 0.0, 0.06);

  SampleSet bad;
  bad.configs = {parse_config_id("1-1"), parse_config_id("2-0")};
  bad.losses = {1.0, std::nan("")};
  try {
    estimate_gradient(arch, bad, alpha);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("2-0"), std::string::npos);
  }
  SampleSet mismatched;
  mismatched.configs = bad.configs;
  mismatched.losses = {1.0};
  EXPECT_THROW(estimate_gradient(arch, mismatched, alpha), DomainError);
}

TEST(AlphaStep, SubtractsScaledGradient) {
  const auto arch = toys::quant_toy();
  AlphaParams a = AlphaParams::zeros(arch);
  a.per_layer[0] = {0.5, -0.5};
  AlphaGradient g = AlphaParams::zeros(arch);
  g.per_layer[0] = {1.0, 2.0};
  g.per_layer[1] = {-4.0, 0.0};
  const auto b = alpha_step(a, g, 0.25);
  EXPECT_EQ(b.per_layer[0], (std::vector<double>{0.25, -1.0}));
  EXPECT_EQ(b.per_layer[1], (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(alpha_step(a, g, 0.0), a);
}

TEST(ExpectedConfig, Rounding) {
  const auto five = toys::conv_arch(Mode::Pruning, {5}, 1);
  EXPECT_EQ(expected_config(AlphaParams::from_probability(five, 0.5), five)[0].sampled(), 2);
  EXPECT_EQ(expected_config(AlphaParams::from_probability(five, 0.6), five)[0].sampled(), 2);
  EXPECT_EQ(expected_config(AlphaParams::from_probability(five, 0.9), five)[0].sampled(), 4);
  const auto six = toys::conv_arch(Mode::Pruning, {6}, 1);
  EXPECT_EQ(expected_config(AlphaParams::from_probability(six, 0.5), six)[0].sampled(), 3);
  EXPECT_EQ(expected_config(AlphaParams::from_probability(six, 0.01), six)[0].active_filters(), 1);
  EXPECT_EQ(expected_config(AlphaParams::from_probability(six, 0.99), six)[0].active_filters(), 6);
  EXPECT_THROW(AlphaParams::from_probability(six, 1.0), DomainError);
  EXPECT_THROW(expected_config(AlphaParams::zeros(toys::quant_toy()), toys::quant_toy()),
               DomainError);
}

TEST(Algorithms, Names) {
  for (auto a : {Algorithm::Quant, Algorithm::PruneBasic, Algorithm::PruneReset,
                 Algorithm::PruneNoShare, Algorithm::PruneInterp}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_THROW(parse_algorithm("prune"), ConfigError);
}

TEST(Settings, Validation) {
  const auto q = toys::quant_toy();
  const auto p = toys::prune_toy();
  SearchSettings s;
  EXPECT_NO_THROW(s.validate(q, Algorithm::Quant));
  EXPECT_THROW(s.validate(p, Algorithm::Quant), DomainError);
  EXPECT_THROW(s.validate(q, Algorithm::PruneBasic), DomainError);
  s.lambda = 1.0;
  EXPECT_THROW(s.validate(q, Algorithm::Quant), DomainError);
  EXPECT_NO_THROW(s.validate(p, Algorithm::PruneInterp));
  s = SearchSettings{};
  s.sample_size = 0;
  EXPECT_THROW(s.validate(q, Algorithm::Quant), DomainError);
  s = SearchSettings{};
  s.sigma = "nope";
  EXPECT_THROW(s.validate(q, Algorithm::Quant), ConfigError);
  s = SearchSettings{};
  s.k_omega = 0;
  EXPECT_THROW(s.validate(p, Algorithm::PruneReset), DomainError);
}

TEST(Search, ZeroIterationsReturnsInitialAlpha) {
  const auto arch = toys::prune_toy();
  const Dataset data = small_data();
  SearchSettings s = quick(0);
  s.initial_alpha = AlphaParams::from_probability(arch, 0.7);
  for (auto a : {Algorithm::PruneBasic, Algorithm::PruneReset, Algorithm::PruneNoShare}) {
    const auto r = run_search(a, arch, data, s);
    EXPECT_TRUE(r.trace.empty());
    EXPECT_EQ(r.alpha, *s.initial_alpha);
  }
}

TEST(Search, TraceInvariantsAndDeterminism) {
  const Dataset data = small_data();
  const auto q = toys::quant_toy();
  const auto p = toys::prune_toy();
  for (auto algo : {Algorithm::Quant, Algorithm::PruneBasic, Algorithm::PruneReset,
                    Algorithm::PruneNoShare}) {
    const auto& arch = algo == Algorithm::Quant ? q : p;
    SearchSettings s = quick(3);
    s.k_omega = 2;
    const auto a = run_search(algo, arch, data, s);
    const auto b = run_search(algo, arch, data, s);
    EXPECT_TRUE(a.trace.equal_except_time(b.trace)) << to_string(algo);
    EXPECT_EQ(a.alpha, b.alpha);
    ASSERT_EQ(a.trace.size(), 3u);
    EXPECT_EQ(a.trace.records().back().alpha, a.alpha);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& rec = a.trace.records()[i];
      EXPECT_EQ(rec.iteration, static_cast<int>(i));
      EXPECT_GE(rec.alpha_steps, 1);
      EXPECT_EQ(rec.samples.size(), rec.alpha_steps * s.sample_size);
      EXPECT_EQ(rec.expected_config.has_value(), algo != Algorithm::Quant);
      for (const auto& sr : rec.samples) {
        EXPECT_NO_THROW(validate_config(arch, parse_config_id(sr.config_id)));
        EXPECT_EQ(sr.loss.combined, sr.loss.ce);  // lambda = 0
      }
    }
    SearchSettings other = s;
    other.seed = 2;
    EXPECT_NE(run_search(algo, arch, data, other).alpha, a.alpha) << to_string(algo);

    const auto round = SearchTrace::from_jsonl(a.trace.to_jsonl());
    EXPECT_TRUE(round.equal_except_time(a.trace));
    EXPECT_EQ(round.to_jsonl(), a.trace.to_jsonl());
  }
}

TEST(Search, ThreadCountDoesNotChangeResults) {
  const Dataset data = small_data();
  const auto p = toys::prune_toy();
  SearchSettings s = quick(2);
  const auto one = run_prune_noshare(p, data, s);
  s.threads = 3;
  const auto three = run_prune_noshare(p, data, s);
  EXPECT_TRUE(one.trace.equal_except_time(three.trace));
}

TEST(Search, ResetCadence) {
  const Dataset data = small_data();
  const auto p = toys::prune_toy();
  SearchSettings s = quick(7);
  s.k_omega = 3;
  const auto r = run_prune_reset(p, data, s);
  for (const auto& rec : r.trace.records()) {
    EXPECT_EQ(rec.weights_trained, rec.iteration % 3 == 0) << rec.iteration;
    EXPECT_EQ(rec.scratch_trainings, 0);
  }
}

TEST(Search, NoShareTrainsEverySampleFromItsOwnSeed) {
  const Dataset data = small_data();
  const auto p = toys::prune_toy();
  SearchSettings s = quick(2);
  const auto r = run_prune_noshare(p, data, s);
  std::set<std::uint64_t> seeds;
  for (const auto& rec : r.trace.records()) {
    EXPECT_EQ(rec.scratch_trainings, static_cast<int>(s.sample_size));
    EXPECT_FALSE(rec.weights_trained);
    for (const auto& sr : rec.samples) {
      ASSERT_TRUE(sr.weight_seed.has_value());
      ASSERT_TRUE(sr.validation_accuracy.has_value());
      seeds.insert(*sr.weight_seed);
    }
  }
  EXPECT_EQ(seeds.size(), 2 * s.sample_size);
}

TEST(Search, Convergence) {
  const Dataset data = small_data();
  const auto p = toys::prune_toy();
  SearchSettings s = quick(50);
  s.alpha_lr = 1e-12;
  s.convergence_threshold = 1e-3;
  s.convergence_window = 2;
  const auto r = run_prune_noshare(p, data, s);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.trace.size(), 2u);
}

TEST(Search, InterpolationLossRecordsReference) {
  const Dataset data = small_data();
  const auto p = toys::prune_toy();
  InterpTable table = InterpTable::from_anchors(
      {{"w1_w1", 0.0, 1.5}, {"w4_w4", 1e9, 0.1}});
  SearchSettings s = quick(1);
  s.sigma = "identity";
  const auto r = run_prune_interp(p, data, s, table);
  for (const auto& sr : r.trace.records()[0].samples) {
    EXPECT_NEAR(sr.loss.combined, sr.loss.ce - sr.loss.complexity, 1e-12);
  }
  EXPECT_THROW(run_search(Algorithm::PruneInterp, p, data, s), ConfigError);
}

TEST(Trace, AppendOrder) {
  SearchTrace t;
  TraceRecord r;
  r.iteration = 0;
  t.append(r);
  EXPECT_THROW(t.append(r), DomainError);
  r.iteration = 4;
  t.append(r);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_THROW(SearchTrace::from_jsonl("{\"iteration\": \"x\"}\n"), ConfigError);
}

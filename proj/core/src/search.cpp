#include "dnas/search.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <functional>

#include "dnas/error.hpp"
#include "dnas/parallel.hpp"
#include "dnas/rng.hpp"
#include "dnas/sigma.hpp"

namespace dnas {

void SampleSet::validate() const {
  if (configs.empty()) throw DomainError("sample set is empty");
  if (configs.size() != losses.size()) throw DomainError("sample set configs/losses misaligned");
}

AlphaGradient estimate_gradient(const ArchitectureSpec& arch, const SampleSet& sample,
                                const AlphaParams& alpha) {
  sample.validate();
  AlphaGradient g = AlphaParams::zeros(arch);
  for (std::size_t i = 0; i < sample.configs.size(); ++i) {
    const double loss = sample.losses[i];
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss " + std::to_string(loss) + " for sampled config " +
                         config_id(sample.configs[i]));
    }
    const auto s = score_all(arch, alpha, sample.configs[i]);
    for (std::size_t l = 0; l < g.per_layer.size(); ++l) {
      for (std::size_t t = 0; t < g.per_layer[l].size(); ++t) {
        g.per_layer[l][t] += loss * s.per_layer[l][t];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(sample.configs.size());
  for (auto& v : g.per_layer) {
    for (double& x : v) x *= inv;
  }
  return g;
}

AlphaParams alpha_step(const AlphaParams& alpha, const AlphaGradient& gradient, double rate) {
  if (alpha.family != gradient.family || alpha.per_layer.size() != gradient.per_layer.size()) {
    throw DomainError("gradient shape does not match alpha");
  }
  AlphaParams out = alpha;
  for (std::size_t l = 0; l < out.per_layer.size(); ++l) {
    if (out.per_layer[l].size() != gradient.per_layer[l].size()) {
      throw DomainError("gradient shape does not match alpha");
    }
    for (std::size_t t = 0; t < out.per_layer[l].size(); ++t) {
      out.per_layer[l][t] -= rate * gradient.per_layer[l][t];
    }
  }
  return out;
}

NetworkConfig expected_config(const AlphaParams& alpha, const ArchitectureSpec& arch) {
  if (alpha.family != Family::Binomial) {
    throw DomainError("the expected configuration is defined for binomial (pruning) searches");
  }
  alpha.validate(arch);
  NetworkConfig cfg;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const int trials = arch.layers[l].filters - 1;
    const long a = round_half_away(trials * sigmoid_prob(alpha.per_layer[l][0]));
    cfg.layers.push_back(LayerConfig::width(static_cast<int>(std::clamp<long>(a, 0, trials))));
  }
  return cfg;
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Quant: return "quant";
    case Algorithm::PruneBasic: return "prune-basic";
    case Algorithm::PruneReset: return "prune-reset";
    case Algorithm::PruneNoShare: return "prune-noshare";
    case Algorithm::PruneInterp: return "prune-interp";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::Quant, Algorithm::PruneBasic, Algorithm::PruneReset,
                      Algorithm::PruneNoShare, Algorithm::PruneInterp}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown search algorithm '" + name + "'");
}

void SearchSettings::validate(const ArchitectureSpec& arch, Algorithm algorithm) const {
  arch.validate();
  const bool quant = algorithm == Algorithm::Quant;
  if (quant && arch.mode() != Mode::Quantization) {
    throw DomainError("quantization search needs a quantization architecture");
  }
  if (!quant && arch.mode() != Mode::Pruning) {
    throw DomainError("pruning searches need a pruning architecture");
  }
  if (sample_size < 1) throw DomainError("sample size must be >= 1");
  if (!(alpha_lr > 0.0)) throw DomainError("alpha learning rate must be > 0");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (lambda > 0.0 && algorithm != Algorithm::PruneInterp && !target) {
    throw DomainError("lambda > 0 needs a target configuration");
  }
  if (target) validate_config(arch, *target);
  Sigma::by_name(sigma);
  if (t_omega < 0 || fine_tune_epochs < 0 || max_iterations < 0) {
    throw DomainError("epoch and iteration counts must be >= 0");
  }
  if (k_omega < 1) throw DomainError("k_omega must be >= 1");
  if (convergence_window < 1) throw DomainError("convergence window must be >= 1");
  train.validate();
  if (initial_alpha) initial_alpha->validate(arch);
  for (double r : slimmable_ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("slimmable ratios must lie in (0, 1]");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double max_abs_change(const AlphaParams& a, const AlphaParams& b) {
  double m = 0.0;
  for (std::size_t l = 0; l < a.per_layer.size(); ++l) {
    for (std::size_t t = 0; t < a.per_layer[l].size(); ++t) {
      m = std::max(m, std::abs(a.per_layer[l][t] - b.per_layer[l][t]));
    }
  }
  return m;
}

class Searcher {
 public:
  Searcher(const ArchitectureSpec& arch, const Dataset& data, const SearchSettings& settings,
           Algorithm algorithm)
      : arch_(arch),
        data_(data),
        settings_(settings),
        sigma_(Sigma::by_name(settings.sigma)),
        sampler_(derive_seed(settings.seed, "sampler")) {
    settings.validate(arch, algorithm);
    data.validate();
    data.check_compatible(arch);
    alpha_ = settings.initial_alpha ? *settings.initial_alpha : AlphaParams::zeros(arch);
  }

  using Body = std::function<void(int iteration, TraceRecord& record)>;

  SearchResult run(const Body& body) {
    SearchResult result;
    std::deque<double> window;
    for (int k = 0; k < settings_.max_iterations; ++k) {
      const auto start = Clock::now();
      const AlphaParams before = alpha_;
      TraceRecord rec;
      rec.iteration = k;
      body(k, rec);
      rec.alpha = alpha_;
      rec.max_alpha_change = max_abs_change(before, alpha_);
      if (alpha_.family == Family::Binomial) {
        rec.expected_config = config_id(expected_config(alpha_, arch_));
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      result.trace.append(std::move(rec));

      window.push_back(result.trace.records().back().max_alpha_change);
      if (window.size() > static_cast<std::size_t>(settings_.convergence_window)) {
        window.pop_front();
      }
      if (window.size() == static_cast<std::size_t>(settings_.convergence_window) &&
          *std::max_element(window.begin(), window.end()) < settings_.convergence_threshold) {
        result.converged = true;
        break;
      }
    }
    result.alpha = alpha_;
    return result;
  }

  std::vector<NetworkConfig> sample_configs() {
    std::vector<NetworkConfig> s;
    for (std::size_t i = 0; i < settings_.sample_size; ++i) {
      s.push_back(sample_network(arch_, alpha_, sampler_));
    }
    return s;
  }

  NetworkConfig sample_one() { return sample_network(arch_, alpha_, sampler_); }

  LossBreakdown combined(double ce, const NetworkConfig& cfg) const {
    if (settings_.lambda == 0.0 && !settings_.target) return {ce, 0.0, ce, 0.0};
    return combined_loss(ce, arch_, cfg, *settings_.target, settings_.lambda, sigma_,
                         settings_.complexity);
  }

  LossBreakdown interpolated(double ce, const NetworkConfig& cfg, const InterpTable& table) const {
    const double z = network_complexity(arch_, cfg, settings_.complexity);
    double reference = 0.0;
    try {
      reference = interp_ce(table, z);
    } catch (const DomainError& e) {
      throw DomainError("config " + config_id(cfg) + " is not bracketed by the anchors: " +
                        e.what());
    }
    return {ce, reference, sigma_(ce - reference), 0.0};
  }

  double batch_ce(const Weights& w, const NetworkConfig& cfg, const Batch& b) const {
    const auto logits = forward(arch_, w, cfg, b);
    return cross_entropy(logits, static_cast<std::size_t>(arch_.num_classes), b.labels);
  }

  /// One alpha step from per-config losses; appends sample records.
  void step_alpha(const std::vector<NetworkConfig>& configs,
                  const std::vector<LossBreakdown>& losses, int step, TraceRecord& rec,
                  const std::vector<std::optional<std::uint64_t>>& seeds = {},
                  const std::vector<std::optional<double>>& validation = {}) {
    SampleSet set;
    set.configs = configs;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      set.losses.push_back(losses[i].combined);
      SampleRecord sr;
      sr.step = step;
      sr.config_id = config_id(configs[i]);
      sr.loss = losses[i];
      if (!seeds.empty()) sr.weight_seed = seeds[i];
      if (!validation.empty()) sr.validation_accuracy = validation[i];
      rec.samples.push_back(std::move(sr));
    }
    rec.gradient = estimate_gradient(arch_, set, alpha_);
    alpha_ = alpha_step(alpha_, rec.gradient, settings_.alpha_lr);
    ++rec.alpha_steps;
  }

  std::vector<NetworkConfig> slimmable_set() const {
    std::vector<NetworkConfig> set;
    for (double r : settings_.slimmable_ratios) set.push_back(make_homogeneous_width(arch_, r));
    set.push_back(expected_config(alpha_, arch_));
    return set;
  }

  std::vector<std::optional<double>> validation_of(const std::vector<Weights>& weights,
                                                   const std::vector<NetworkConfig>& configs) const {
    if (!settings_.record_validation || data_.validation.empty()) return {};
    std::vector<std::optional<double>> out(configs.size());
    parallel_for(configs.size(), settings_.threads, [&](std::size_t i) {
      out[i] = evaluate(arch_, weights[i], configs[i], data_.validation).accuracy;
    });
    return out;
  }

  const ArchitectureSpec& arch_;
  const Dataset& data_;
  const SearchSettings& settings_;
  Sigma sigma_;
  Rng sampler_;
  AlphaParams alpha_;
};

/// Shared body of the no-weight-sharing algorithms.
SearchResult run_private_weights(const ArchitectureSpec& arch, const Dataset& data,
                                 const SearchSettings& settings, const InterpTable* table) {
  const Algorithm algorithm = table ? Algorithm::PruneInterp : Algorithm::PruneNoShare;
  Searcher s(arch, data, settings, algorithm);
  if (table) table->validate();
  const Split train = data.training();
  const auto batches = train.batches(settings.train.batch_size);
  return s.run([&](int k, TraceRecord& rec) {
    const auto configs = s.sample_configs();
    std::vector<Weights> weights(configs.size());
    std::vector<std::optional<std::uint64_t>> seeds(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
      seeds[i] = derive_seed(settings.seed, "private-weights", static_cast<std::uint64_t>(k), i);
    }
    parallel_for(configs.size(), settings.threads, [&](std::size_t i) {
      weights[i] = init_weights(arch, *seeds[i]);
      SgdMomentum opt(weights[i]);
      train_epochs(arch, weights[i], opt, configs[i], train, settings.train, settings.t_omega);
    });
    rec.scratch_trainings = static_cast<int>(configs.size());
    const auto validation = s.validation_of(weights, configs);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<LossBreakdown> losses(configs.size());
      parallel_for(configs.size(), settings.threads, [&](std::size_t i) {
        const double ce = s.batch_ce(weights[i], configs[i], batches[b]);
        losses[i] = table ? s.interpolated(ce, configs[i], *table) : s.combined(ce, configs[i]);
      });
      s.step_alpha(configs, losses, static_cast<int>(b), rec, seeds, validation);
    }
  });
}

}  // namespace

SearchResult run_quant_search(const ArchitectureSpec& arch, const Dataset& data,
                              const SearchSettings& settings) {
  Searcher s(arch, data, settings, Algorithm::Quant);
  Weights weights = init_weights(arch, derive_seed(settings.seed, "shared-weights"));
  SgdMomentum opt(weights);
  const auto omega_batches = data.omega.batches(settings.train.batch_size);
  const auto alpha_batches = data.alpha.batches(settings.train.batch_size);
  return s.run([&](int, TraceRecord& rec) {
    for (int e = 0; e < settings.t_omega; ++e) {
      for (const auto& b : omega_batches) {
        train_step(arch, weights, opt, s.sample_one(), b, settings.train);
      }
    }
    rec.weights_trained = settings.t_omega > 0 && !omega_batches.empty();
    for (std::size_t b = 0; b < alpha_batches.size(); ++b) {
      const auto configs = s.sample_configs();
      std::vector<LossBreakdown> losses(configs.size());
      parallel_for(configs.size(), settings.threads, [&](std::size_t i) {
        losses[i] = s.combined(s.batch_ce(weights, configs[i], alpha_batches[b]), configs[i]);
      });
      s.step_alpha(configs, losses, static_cast<int>(b), rec);
    }
  });
}

SearchResult run_prune_basic(const ArchitectureSpec& arch, const Dataset& data,
                             const SearchSettings& settings) {
  Searcher s(arch, data, settings, Algorithm::PruneBasic);
  Weights weights = init_weights(arch, derive_seed(settings.seed, "shared-weights"));
  SgdMomentum opt(weights);
  const auto omega_batches = data.omega.batches(settings.train.batch_size);
  const auto alpha_batches = data.alpha.batches(settings.train.batch_size);
  return s.run([&](int, TraceRecord& rec) {
    const auto slim = s.slimmable_set();
    for (int e = 0; e < settings.t_omega; ++e) {
      for (const auto& b : omega_batches) {
        slimmable_train_step(arch, weights, opt, slim, b, settings.train);
      }
    }
    rec.weights_trained = settings.t_omega > 0;
    for (std::size_t b = 0; b < alpha_batches.size(); ++b) {
      const auto configs = s.sample_configs();
      std::vector<Weights> tuned(configs.size());
      std::vector<LossBreakdown> losses(configs.size());
      parallel_for(configs.size(), settings.threads, [&](std::size_t i) {
        tuned[i] = fine_tune(arch, weights, configs[i], data.omega, settings.train,
                             settings.fine_tune_epochs);
        losses[i] = s.combined(s.batch_ce(tuned[i], configs[i], alpha_batches[b]), configs[i]);
      });
      s.step_alpha(configs, losses, static_cast<int>(b), rec, {}, s.validation_of(tuned, configs));
    }
  });
}

SearchResult run_prune_reset(const ArchitectureSpec& arch, const Dataset& data,
                             const SearchSettings& settings) {
  Searcher s(arch, data, settings, Algorithm::PruneReset);
  const Split train = data.training();
  const auto batches = train.batches(settings.train.batch_size);
  Weights weights = init_weights(arch, derive_seed(settings.seed, "shared-weights"));
  return s.run([&](int k, TraceRecord& rec) {
    if (k % settings.k_omega == 0) {
      const auto slim = s.slimmable_set();
      weights = init_weights(arch, derive_seed(settings.seed, "reset-weights",
                                               static_cast<std::uint64_t>(k)));
      SgdMomentum opt(weights);
      for (int e = 0; e < settings.t_omega; ++e) {
        for (const auto& b : batches) slimmable_train_step(arch, weights, opt, slim, b, settings.train);
      }
      rec.weights_trained = true;
    }
    const auto configs = s.sample_configs();
    std::vector<Weights> tuned(configs.size());
    parallel_for(configs.size(), settings.threads, [&](std::size_t i) {
      tuned[i] = fine_tune(arch, weights, configs[i], train, settings.train,
                           settings.fine_tune_epochs);
    });
    const auto validation = s.validation_of(tuned, configs);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<LossBreakdown> losses(configs.size());
      parallel_for(configs.size(), settings.threads, [&](std::size_t i) {
        losses[i] = s.combined(s.batch_ce(tuned[i], configs[i], batches[b]), configs[i]);
      });
      s.step_alpha(configs, losses, static_cast<int>(b), rec, {}, validation);
    }
  });
}

SearchResult run_prune_noshare(const ArchitectureSpec& arch, const Dataset& data,
                               const SearchSettings& settings) {
  return run_private_weights(arch, data, settings, nullptr);
}

SearchResult run_prune_interp(const ArchitectureSpec& arch, const Dataset& data,
                              const SearchSettings& settings, const InterpTable& table) {
  return run_private_weights(arch, data, settings, &table);
}

SearchResult run_search(Algorithm algorithm, const ArchitectureSpec& arch, const Dataset& data,
                        const SearchSettings& settings, const InterpTable* table) {
  switch (algorithm) {
    case Algorithm::Quant: return run_quant_search(arch, data, settings);
    case Algorithm::PruneBasic: return run_prune_basic(arch, data, settings);
    case Algorithm::PruneReset: return run_prune_reset(arch, data, settings);
    case Algorithm::PruneNoShare: return run_prune_noshare(arch, data, settings);
    case Algorithm::PruneInterp:
      if (!table) throw ConfigError("prune-interp needs an interpolation table");
      return run_prune_interp(arch, data, settings, *table);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace dnas

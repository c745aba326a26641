#include "dnas/grid.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "dnas/error.hpp"
#include "dnas/parallel.hpp"
#include "dnas/rng.hpp"

namespace dnas {

std::pair<double, double> confidence_interval(std::span<const double> samples, double level) {
  if (samples.empty()) throw DomainError("confidence interval needs at least one sample");
  if (!(level >= 0.0 && level < 1.0)) throw DomainError("confidence level must lie in [0, 1)");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double s = std::sqrt(ss / (n - 1.0));
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
  return {mean, z * s / std::sqrt(n)};
}

bool is_homogeneous(const ArchitectureSpec& arch, const NetworkConfig& cfg) {
  validate_config(arch, cfg);
  if (arch.mode() == Mode::Quantization) {
    for (std::size_t op = 0; op < arch.layers.front().ops.quant_ops.size(); ++op) {
      bool all = true;
      for (std::size_t l = 0; l < cfg.size() && all; ++l) {
        const auto& ops = arch.layers[l].ops.quant_ops;
        const auto& want = arch.layers.front().ops.quant_ops[op];
        const auto it = std::find(ops.begin(), ops.end(), want);
        all = it != ops.end() &&
              cfg[l].count(static_cast<std::size_t>(it - ops.begin())) == arch.layers[l].filters;
      }
      if (all) return true;
    }
    return false;
  }
  const double ratio =
      static_cast<double>(cfg[0].active_filters()) / arch.layers.front().filters;
  return make_homogeneous_width(arch, ratio) == cfg;
}

EarlyStopResult train_with_early_stopping(const ArchitectureSpec& arch, const Dataset& data,
                                          const NetworkConfig& cfg, const GridSettings& settings,
                                          std::uint64_t seed) {
  if (settings.patience < 1 || settings.max_epochs < 1) {
    throw DomainError("patience and max_epochs must be >= 1");
  }
  const Split train = data.training();
  Weights w = init_weights(arch, seed);
  SgdMomentum opt(w);
  EarlyStopResult r;
  r.best_accuracy = -1.0;
  for (int epoch = 1; epoch <= settings.max_epochs; ++epoch) {
    train_epochs(arch, w, opt, cfg, train, settings.train, 1);
    r.epochs_run = epoch;
    const double acc = evaluate(arch, w, cfg, data.validation).accuracy;
    if (acc > r.best_accuracy) {
      r.best_accuracy = acc;
      r.best_epoch = epoch;
    } else if (epoch - r.best_epoch >= settings.patience) {
      break;
    }
  }
  return r;
}

std::vector<GridRow> run_grid_study(const ArchitectureSpec& arch, const Dataset& data,
                                    std::span<const NetworkConfig> configs,
                                    const GridSettings& settings) {
  if (settings.repeats < 1) throw DomainError("repeats must be >= 1");
  data.check_compatible(arch);
  for (const auto& c : configs) validate_config(arch, c);

  const std::size_t repeats = static_cast<std::size_t>(settings.repeats);
  const std::size_t jobs = configs.size() * repeats;
  std::vector<double> accuracy(jobs, 0.0);
  std::vector<std::string> failure(jobs);
  parallel_for(jobs, settings.threads, [&](std::size_t j) {
    const std::size_t c = j / repeats;
    const std::size_t r = settings.same_seed_repeats ? 0 : j % repeats;
    const auto seed = derive_seed(settings.seed, "grid", c, r);
    try {
      accuracy[j] = train_with_early_stopping(arch, data, configs[c], settings, seed).best_accuracy;
    } catch (const NumericError& e) {
      failure[j] = "repeat " + std::to_string(j % repeats) + ": " + e.what();
    }
  });

  std::vector<GridRow> rows;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    GridRow row;
    row.config_id = config_id(configs[c]);
    row.z = network_complexity(arch, configs[c], settings.complexity);
    row.homogeneous = is_homogeneous(arch, configs[c]);
    for (std::size_t r = 0; r < repeats; ++r) {
      const std::size_t j = c * repeats + r;
      if (failure[j].empty()) {
        row.accuracies.push_back(accuracy[j]);
      } else {
        row.failures.push_back(failure[j]);
      }
    }
    if (row.accuracies.empty()) {
      row.mean = std::nan("");
      row.ci_half = std::nan("");
    } else {
      std::tie(row.mean, row.ci_half) = confidence_interval(row.accuracies, settings.level);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dnas

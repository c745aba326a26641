#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/complexity.hpp"
#include "dnas/data.hpp"
#include "dnas/net.hpp"

namespace dnas {

/// Sample mean and z * s / sqrt(n), with z the two-sided normal quantile at
/// `level` and s the n-1 sample standard deviation. A single sample has
/// half-width 0.
std::pair<double, double> confidence_interval(std::span<const double> samples,
                                              double level = 0.6827);

/// Quantization: every filter of every layer runs the same operation.
/// Pruning: equal to make_homogeneous_width for the first layer's ratio.
bool is_homogeneous(const ArchitectureSpec& arch, const NetworkConfig& cfg);

struct GridSettings {
  int repeats = 3;
  int patience = 15;    ///< epochs without a new best validation accuracy
  int max_epochs = 60;
  bool same_seed_repeats = false;
  double level = 0.6827;
  TrainSettings train;
  ComplexityOptions complexity;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct GridRow {
  std::string config_id;
  double z = 0.0;
  std::vector<double> accuracies;  ///< one per successful repeat
  double mean = 0.0;
  double ci_half = 0.0;
  bool homogeneous = false;
  std::vector<std::string> failures;  ///< diagnostics of diverged repeats

  bool operator==(const GridRow&) const = default;
};

struct EarlyStopResult {
  double best_accuracy = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
};

/// Trains from scratch, stopping after `patience` epochs without a new best
/// validation accuracy (or at max_epochs). Reports the best accuracy.
EarlyStopResult train_with_early_stopping(const ArchitectureSpec& arch, const Dataset& data,
                                          const NetworkConfig& cfg, const GridSettings& settings,
                                          std::uint64_t seed);

/// Trains each configuration `repeats` times. Diverged runs are recorded in
/// `failures` and the study continues.
std::vector<GridRow> run_grid_study(const ArchitectureSpec& arch, const Dataset& data,
                                    std::span<const NetworkConfig> configs,
                                    const GridSettings& settings);

}  // namespace dnas

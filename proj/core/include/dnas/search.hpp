#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/complexity.hpp"
#include "dnas/data.hpp"
#include "dnas/dist.hpp"
#include "dnas/net.hpp"
#include "dnas/objective.hpp"

namespace dnas {

/// Sampled configurations S^k with their losses.
struct SampleSet {
  std::vector<NetworkConfig> configs;
  std::vector<double> losses;

  void validate() const;
};

/// g = (1/|S|) sum_{a in S} L(a) * score(a): the sampled estimate of
/// dJ/dalpha. Throws NumericError naming the config on a non-finite loss.
AlphaGradient estimate_gradient(const ArchitectureSpec& arch, const SampleSet& sample,
                                const AlphaParams& alpha);

/// alpha - rate * gradient.
AlphaParams alpha_step(const AlphaParams& alpha, const AlphaGradient& gradient, double rate);

/// Per layer round((C_l - 1) p_l), ties away from zero. Binomial only.
NetworkConfig expected_config(const AlphaParams& alpha, const ArchitectureSpec& arch);

enum class Algorithm { Quant, PruneBasic, PruneReset, PruneNoShare, PruneInterp };

std::string to_string(Algorithm algorithm);
/// "quant", "prune-basic", "prune-reset", "prune-noshare", "prune-interp".
Algorithm parse_algorithm(const std::string& name);

struct SearchSettings {
  std::size_t sample_size = 8;  ///< |S|
  double lambda = 0.0;
  std::string sigma = "hinge";  ///< complexity sigma, or interpolation sigma
  /// Target homogeneous configuration of the complexity loss. Required when
  /// lambda > 0.
  std::optional<NetworkConfig> target;
  double alpha_lr = 0.01;
  int t_omega = 1;             ///< weight-training epochs per round
  int k_omega = 10;            ///< iterations between weight resets (prune-reset)
  int fine_tune_epochs = 5;
  int max_iterations = 50;
  double convergence_threshold = 1e-3;
  int convergence_window = 10;
  std::uint64_t seed = 1;
  TrainSettings train;
  ComplexityOptions complexity;
  /// Starting parameters; defaults to zeros (uniform softmax, p = 0.5).
  std::optional<AlphaParams> initial_alpha;
  /// Homogeneous widths A for slimmable training.
  std::vector<double> slimmable_ratios = default_width_ratios();
  /// Evaluate every sampled configuration's weights on the validation split
  /// (pruning algorithms).
  bool record_validation = true;
  unsigned threads = 1;

  void validate(const ArchitectureSpec& arch, Algorithm algorithm) const;
};

struct SampleRecord {
  int step = 0;  ///< alpha step within the iteration
  std::string config_id;
  /// For the interpolation loss, `complexity` holds the interpolated CE and
  /// `combined` the sigma of the difference.
  LossBreakdown loss;
  std::optional<std::uint64_t> weight_seed;
  std::optional<double> validation_accuracy;

  bool operator==(const SampleRecord&) const = default;
};

struct TraceRecord {
  int iteration = 0;
  AlphaParams alpha;           ///< after the iteration's updates
  AlphaGradient gradient;      ///< estimate used by the last alpha step
  int alpha_steps = 0;
  std::vector<SampleRecord> samples;
  std::optional<std::string> expected_config;  ///< binomial only
  bool weights_trained = false;                ///< shared weights trained this iteration
  int scratch_trainings = 0;                   ///< from-scratch private trainings
  double max_alpha_change = 0.0;
  double wall_ms = 0.0;  ///< excluded from equality and determinism checks

  bool equal_except_time(const TraceRecord& other) const;
};

/// Append-only, one record per iteration.
class SearchTrace {
 public:
  /// Throws DomainError unless record.iteration exceeds the last one.
  void append(TraceRecord record);
  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// One JSON object per line.
  std::string to_jsonl() const;
  static SearchTrace from_jsonl(const std::string& text);

  bool equal_except_time(const SearchTrace& other) const;

 private:
  std::vector<TraceRecord> records_;
};

struct SearchResult {
  AlphaParams alpha;
  SearchTrace trace;
  bool converged = false;
};

/// Alternates t_omega epochs of weight training on the omega split (one
/// sampled config per batch) with one alpha step per alpha-split batch on
/// the combined loss.
SearchResult run_quant_search(const ArchitectureSpec& arch, const Dataset& data,
                              const SearchSettings& settings);

/// Slimmable training on A plus the expected config over the omega split,
/// then per alpha batch: sample, fine-tune private copies on omega, step.
SearchResult run_prune_basic(const ArchitectureSpec& arch, const Dataset& data,
                             const SearchSettings& settings);

/// Every k_omega iterations the shared weights are re-initialized and
/// slimmable-trained on the whole training set. Sampled configs are
/// fine-tuned once per iteration; alpha steps once per batch.
SearchResult run_prune_reset(const ArchitectureSpec& arch, const Dataset& data,
                             const SearchSettings& settings);

/// No weight sharing: each sampled config trains its own weights from
/// scratch for t_omega epochs.
SearchResult run_prune_noshare(const ArchitectureSpec& arch, const Dataset& data,
                               const SearchSettings& settings);

/// run_prune_noshare with the interpolation loss and no complexity term.
SearchResult run_prune_interp(const ArchitectureSpec& arch, const Dataset& data,
                              const SearchSettings& settings, const InterpTable& table);

/// Dispatch by algorithm. `table` is required for PruneInterp.
SearchResult run_search(Algorithm algorithm, const ArchitectureSpec& arch, const Dataset& data,
                        const SearchSettings& settings, const InterpTable* table = nullptr);

}  // namespace dnas

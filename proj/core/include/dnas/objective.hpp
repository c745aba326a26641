#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/complexity.hpp"
#include "dnas/dist.hpp"
#include "dnas/sigma.hpp"

namespace dnas {

struct Split;
struct TrainSettings;

/// Loss of a single configuration, L(a; w).
using ConfigLoss = std::function<double(const NetworkConfig&)>;

/// Default ceiling on enumerated configuration counts.
inline constexpr std::uint64_t kDefaultEnumerationGuard = 1'000'000;

/// Mean over rows of -log softmax(logits)[label], log-sum-exp stabilized.
/// `logits` is row-major (sample, class).
double cross_entropy(std::span<const double> logits, std::size_t num_classes,
                     std::span<const int> labels);

struct LossBreakdown {
  double ce = 0.0;
  double complexity = 0.0;
  double combined = 0.0;
  double lambda = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

/// combined = ce + lambda * sigma(z_a / z_target).
LossBreakdown combined_loss(double ce, const ArchitectureSpec& arch, const NetworkConfig& cfg,
                            const NetworkConfig& target, double lambda, const Sigma& sigma,
                            const ComplexityOptions& opts = {});

struct InterpAnchor {
  std::string config_id;
  double z = 0.0;
  double ce_mean = 0.0;

  bool operator==(const InterpAnchor&) const = default;
};

/// Homogeneous anchors sorted by strictly increasing complexity.
struct InterpTable {
  std::vector<InterpAnchor> anchors;

  /// Sorts by z and checks: >= 2 anchors, strictly increasing z, finite values.
  static InterpTable from_anchors(std::vector<InterpAnchor> anchors);
  void validate() const;

  /// Text format: header "config_id,z,ce_mean", then one row per anchor with
  /// values printed at round-trip precision.
  void save(const std::filesystem::path& path) const;
  static InterpTable load(const std::filesystem::path& path);

  bool operator==(const InterpTable&) const = default;
};

/// Linear interpolation of ce_mean between the anchors bracketing z. Throws
/// DomainError outside [z_min, z_max].
double interp_ce(const InterpTable& table, double z);

/// sigma(ce_a - interp_ce(z_a)). No complexity term.
double interpolation_loss(double ce_a, double z_a, const InterpTable& table, const Sigma& sigma);
double interpolation_loss(double ce_a, const ArchitectureSpec& arch, const NetworkConfig& cfg,
                          const InterpTable& table, const Sigma& sigma,
                          const ComplexityOptions& opts = {});

/// J(alpha) = sum_a p(a|alpha) L(a), by exhaustive enumeration. Throws
/// SpaceTooLarge when the space exceeds `guard`; use the sampled estimator.
double expected_loss(const ArchitectureSpec& arch, const AlphaParams& alpha,
                     const ConfigLoss& loss, std::uint64_t guard = kDefaultEnumerationGuard);

/// Trains every anchor configuration `sessions` times from scratch (distinct
/// derived seeds) and records its complexity and mean training cross-entropy.
InterpTable build_interp_table(const ArchitectureSpec& arch, const Split& train,
                               std::span<const NetworkConfig> anchors,
                               const TrainSettings& settings, std::uint64_t seed,
                               int sessions = 5, const ComplexityOptions& opts = {});

}  // namespace dnas

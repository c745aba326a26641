#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/complexity.hpp"
#include "dnas/dist.hpp"
#include "dnas/objective.hpp"

namespace dnas {

/// Neumaier compensated summation.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct EnumeratedSpace {
  std::vector<NetworkConfig> configs;
  std::vector<double> probs;
};

/// All configs of one layer in ascending lexicographic order of their values
/// (multinomial: count vectors; binomial: sampled value 0..C_l-1).
std::vector<LayerConfig> enumerate_layer(const LayerSpec& layer);

/// Cartesian product of the per-layer enumerations, layer 0 most
/// significant. Throws SpaceTooLarge if the count exceeds `guard`.
std::vector<NetworkConfig> enumerate_configs(const ArchitectureSpec& arch,
                                             std::uint64_t guard = kDefaultEnumerationGuard);

EnumeratedSpace enumerate_space(const ArchitectureSpec& arch, const AlphaParams& alpha,
                                std::uint64_t guard = kDefaultEnumerationGuard);

/// dJ/dalpha = sum_a L(a) score(a) p(a|alpha), using the analytic lemmas.
AlphaGradient exact_grad(const ArchitectureSpec& arch, const AlphaParams& alpha,
                         const ConfigLoss& loss, std::uint64_t guard = kDefaultEnumerationGuard);

/// Central differences of the enumerated expected loss on every coordinate.
AlphaGradient finite_diff_grad(const ArchitectureSpec& arch, const AlphaParams& alpha,
                               const ConfigLoss& loss, double h = 1e-5,
                               std::uint64_t guard = kDefaultEnumerationGuard);

/// Exhaustive argmin of `loss` subject to z_a <= cap. Ties resolve to the
/// first config in enumeration order. Throws DomainError if nothing fits.
NetworkConfig grid_optimum(const ArchitectureSpec& arch, const ConfigLoss& loss,
                           double cap = std::numeric_limits<double>::infinity(),
                           const ComplexityOptions& opts = {},
                           std::uint64_t guard = kDefaultEnumerationGuard);

// --- lemma verification suite -------------------------------------------

struct LemmaSuiteOptions {
  std::uint64_t seed = 7;
  int instances = 100;  ///< per distribution family
  double step = 1e-5;
  double rel_tol = 1e-6;
  double abs_tol = 1e-8;
  double sum_tol = 1e-10;
  /// Random instances larger than this are redrawn.
  std::uint64_t max_space = 20'000;
};

struct LemmaCheck {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;

  bool passed() const { return cases > 0 && failures == 0; }
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;

  bool passed() const;
  const LemmaCheck& at(const std::string& name) const;
  /// Fixed-width pass/fail table.
  std::string table() const;
};

/// Random enumerable toy: 1..3 layers, 2..6 filters, 2..4 operations.
ArchitectureSpec random_toy_arch(Rng& rng, Family family);

/// Every analytic pmf / probability / expected-loss gradient against central
/// finite differences, plus normalization and zero-sum checks, on
/// `instances` random toys of each family.
LemmaReport run_lemma_suite(const LemmaSuiteOptions& opts = {});

}  // namespace dnas

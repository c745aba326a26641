#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dnas/arch.hpp"

namespace dnas {

/// Non-owning view of consecutive samples.
struct Batch {
  std::span<const double> inputs;
  std::span<const int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Owning block of samples stored row-major (sample, channel, y, x).
struct Split {
  std::vector<double> inputs;
  std::vector<int> labels;
  std::size_t sample_size = 0;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  Batch all() const { return {inputs, labels}; }
  Batch slice(std::size_t begin, std::size_t end) const;
  /// Fixed-order batches; the last may be short.
  std::vector<Batch> batches(std::size_t batch_size) const;

  static Split concat(const Split& a, const Split& b);
};

/// Training data with the alpha/omega halves used by the search algorithms
/// and a held-out validation split.
struct Dataset {
  InputShape shape;
  int num_classes = 2;
  Split alpha;
  Split omega;
  Split validation;

  /// alpha followed by omega.
  Split training() const { return Split::concat(alpha, omega); }
  void validate() const;
  /// Throws DomainError if the architecture's input or class count differ.
  void check_compatible(const ArchitectureSpec& arch) const;
};

/// Procedural "cluster-images": every class is an oriented grating with a
/// class-specific angle; samples draw a random phase and additive Gaussian
/// noise, clipped to [0, 1].
struct SyntheticSpec {
  InputShape shape{1, 8, 8};
  int num_classes = 4;
  int train_per_class = 64;
  int validation_per_class = 16;
  double noise = 0.15;
  std::uint64_t seed = 1;
};

Dataset make_cluster_images(const SyntheticSpec& spec);

/// Header-free rows `label,p0,p1,...`. Pixel values are min-max normalized to
/// [0, 1] over the whole file. Rows are shuffled with `seed`; the first
/// `validation_fraction` become validation and the rest is halved into
/// alpha/omega.
Dataset load_csv(const std::filesystem::path& path, InputShape shape, int num_classes,
                 std::uint64_t seed, double validation_fraction = 0.2);

}  // namespace dnas

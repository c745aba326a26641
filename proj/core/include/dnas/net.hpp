#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/data.hpp"

namespace dnas {

struct ConvWeights {
  int filters = 0;
  int in_channels = 0;
  int kernel = 0;
  std::vector<double> weight;  ///< (filter, channel, ky, kx)
  std::vector<double> bias;

  std::size_t filter_stride() const {
    return static_cast<std::size_t>(in_channels) * kernel * kernel;
  }
  bool operator==(const ConvWeights&) const = default;
};

/// Full-width parameters. Narrower (slimmable) configurations use leading
/// slices of the same tensors.
struct Weights {
  std::vector<ConvWeights> conv;
  int num_classes = 0;
  int features = 0;
  std::vector<double> classifier;  ///< (class, feature)
  std::vector<double> classifier_bias;

  /// Same shapes, all zeros.
  static Weights zeros_like(const Weights& w);
  std::size_t num_params() const;
  /// Visit every parameter buffer in a fixed order.
  template <typename F>
  void for_each_buffer(F&& f) {
    for (auto& c : conv) {
      f(c.weight);
      f(c.bias);
    }
    f(classifier);
    f(classifier_bias);
  }
  template <typename F>
  void for_each_buffer(F&& f) const {
    for (const auto& c : conv) {
      f(c.weight);
      f(c.bias);
    }
    f(classifier);
    f(classifier_bias);
  }

  bool operator==(const Weights&) const = default;
};

struct TrainSettings {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  int epochs = 1;  ///< t_omega
  std::uint64_t seed = 0;

  void validate() const;
};

/// Fan-in scaled uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)), variance
/// 2/fan_in. Biases start at zero.
Weights init_weights(const ArchitectureSpec& arch, std::uint64_t seed);

/// Symmetric uniform quantizer with round-half-away-from-zero:
/// scale = max|v| / max(1, 2^{bits-1} - 1), out = round(v / scale) * scale.
/// The backward pass treats it as identity.
std::vector<double> quantize(std::span<const double> values, int bits);
void quantize_in_place(std::span<double> values, int bits);

/// Logits, row-major (sample, class). Quantization configs quantize each
/// filter's weights at its group's weight bits and each group's post-ReLU
/// activations at its activation bits. Pruning configs run the first a_l + 1
/// filters of every layer.
std::vector<double> forward(const ArchitectureSpec& arch, const Weights& weights,
                            const NetworkConfig& cfg, const Batch& batch);
/// Full-width float network.
std::vector<double> forward_float(const ArchitectureSpec& arch, const Weights& weights,
                                  const Batch& batch);

/// Mean cross-entropy over the batch; adds its gradient into `grad`.
double loss_and_gradient(const ArchitectureSpec& arch, const Weights& weights,
                         const NetworkConfig& cfg, const Batch& batch, Weights& grad);
/// Same, for the unquantized full-width network.
double loss_and_gradient_float(const ArchitectureSpec& arch, const Weights& weights,
                               const Batch& batch, Weights& grad);

/// SGD with momentum: v = m v + g; w -= lr v.
class SgdMomentum {
 public:
  explicit SgdMomentum(const Weights& like) : velocity_(Weights::zeros_like(like)) {}
  void step(Weights& weights, const Weights& grad, const TrainSettings& settings);

 private:
  Weights velocity_;
};

/// One optimizer step on the cross-entropy of `cfg`. Returns the loss before
/// the step. Throws NumericError on a non-finite loss.
double train_step(const ArchitectureSpec& arch, Weights& weights, SgdMomentum& opt,
                  const NetworkConfig& cfg, const Batch& batch, const TrainSettings& settings);

/// Sums the gradients of every configuration in `configs`, then takes one
/// step. Returns the mean loss.
double slimmable_train_step(const ArchitectureSpec& arch, Weights& weights, SgdMomentum& opt,
                            std::span<const NetworkConfig> configs, const Batch& batch,
                            const TrainSettings& settings);

/// `epochs` passes over `split` in fixed batch order. Returns the mean loss of
/// the last epoch (NaN when epochs == 0).
double train_epochs(const ArchitectureSpec& arch, Weights& weights, SgdMomentum& opt,
                    const NetworkConfig& cfg, const Split& split, const TrainSettings& settings,
                    int epochs);

/// Trains a private copy for `epochs` epochs with a fresh optimizer state.
Weights fine_tune(const ArchitectureSpec& arch, const Weights& weights, const NetworkConfig& cfg,
                  const Split& split, const TrainSettings& settings, int epochs = 5);

struct Evaluation {
  double cross_entropy = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const ArchitectureSpec& arch, const Weights& weights,
                    const NetworkConfig& cfg, const Split& split);

}  // namespace dnas

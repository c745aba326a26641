#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dnas {

/// Increasing scalar function applied to complexity ratios and to
/// interpolation-loss differences. Registered by name:
///
///   identity    x
///   hinge       max(0, x - 1)       (default for complexity ratios)
///   exp         exp(x - 1)
///   leaky_relu  x >= 0 ? x : 0.01 x
///   sigmoid     1 / (1 + exp(-x))
///
/// "identity-ratio" and "exp-ratio" are accepted as aliases.
class Sigma {
 public:
  enum class Kind { Identity, Hinge, Exp, LeakyRelu, Sigmoid };

  static constexpr double kLeakySlope = 0.01;

  Sigma() = default;
  explicit Sigma(Kind kind) : kind_(kind) {}

  /// Throws ConfigError for unknown names.
  static Sigma by_name(std::string_view name);
  static std::vector<std::string> registered_names();

  double operator()(double x) const;
  Kind kind() const { return kind_; }
  std::string name() const;

 private:
  Kind kind_ = Kind::Hinge;
};

}  // namespace dnas

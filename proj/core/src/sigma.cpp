#include "dnas/sigma.hpp"

#include <cmath>

#include "dnas/error.hpp"

namespace dnas {

Sigma Sigma::by_name(std::string_view name) {
  if (name == "identity" || name == "identity-ratio") return Sigma(Kind::Identity);
  if (name == "hinge") return Sigma(Kind::Hinge);
  if (name == "exp" || name == "exp-ratio") return Sigma(Kind::Exp);
  if (name == "leaky_relu" || name == "leaky-relu") return Sigma(Kind::LeakyRelu);
  if (name == "sigmoid") return Sigma(Kind::Sigmoid);
  throw ConfigError("unknown sigma function '" + std::string(name) + "'");
}

std::vector<std::string> Sigma::registered_names() {
  return {"identity", "hinge", "exp", "leaky_relu", "sigmoid"};
}

double Sigma::operator()(double x) const {
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::Hinge:
      return x > 1.0 ? x - 1.0 : 0.0;
    case Kind::Exp:
      return std::exp(x - 1.0);
    case Kind::LeakyRelu:
      return x >= 0.0 ? x : kLeakySlope * x;
    case Kind::Sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

std::string Sigma::name() const {
  switch (kind_) {
    case Kind::Identity: return "identity";
    case Kind::Hinge: return "hinge";
    case Kind::Exp: return "exp";
    case Kind::LeakyRelu: return "leaky_relu";
    case Kind::Sigmoid: return "sigmoid";
  }
  return "?";
}

}  // namespace dnas

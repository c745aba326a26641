#pragma once

// nlohmann/json conversions shared by the trace and file readers. Private to
// the library.

#include <nlohmann/json.hpp>

#include "dnas/arch.hpp"
#include "dnas/dist.hpp"
#include "dnas/error.hpp"
#include "dnas/objective.hpp"

namespace dnas {

inline nlohmann::json alpha_to_json(const AlphaParams& a) {
  return {{"family", to_string(a.family)}, {"layers", a.per_layer}};
}

inline Family parse_family(const std::string& s) {
  if (s == "multinomial") return Family::Multinomial;
  if (s == "binomial") return Family::Binomial;
  throw ConfigError("unknown distribution family '" + s + "'");
}

inline AlphaParams alpha_from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    if (key != "family" && key != "layers") throw ConfigError("unknown alpha key '" + key + "'");
  }
  AlphaParams a;
  a.family = parse_family(j.at("family").get<std::string>());
  a.per_layer = j.at("layers").get<std::vector<std::vector<double>>>();
  return a;
}

inline nlohmann::json loss_to_json(const LossBreakdown& b) {
  return {{"ce", b.ce}, {"complexity", b.complexity}, {"combined", b.combined}, {"lambda", b.lambda}};
}

inline LossBreakdown loss_from_json(const nlohmann::json& j) {
  return {j.at("ce").get<double>(), j.at("complexity").get<double>(),
          j.at("combined").get<double>(), j.at("lambda").get<double>()};
}

}  // namespace dnas

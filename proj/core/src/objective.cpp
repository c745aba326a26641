#include "dnas/objective.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dnas/error.hpp"
#include "dnas/net.hpp"
#include "dnas/oracle.hpp"
#include "dnas/rng.hpp"

namespace dnas {

double cross_entropy(std::span<const double> logits, std::size_t num_classes,
                     std::span<const int> labels) {
  if (num_classes == 0 || logits.size() != labels.size() * num_classes) {
    throw DomainError("logits shape does not match labels");
  }
  if (labels.empty()) throw DomainError("cross entropy of an empty batch");
  double total = 0.0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const auto row = logits.subspan(s * num_classes, num_classes);
    const double shift = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - shift);
    const int y = labels[s];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw DomainError("label out of range");
    total += shift + std::log(z) - row[static_cast<std::size_t>(y)];
  }
  return total / static_cast<double>(labels.size());
}

LossBreakdown combined_loss(double ce, const ArchitectureSpec& arch, const NetworkConfig& cfg,
                            const NetworkConfig& target, double lambda, const Sigma& sigma,
                            const ComplexityOptions& opts) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  LossBreakdown b;
  b.ce = ce;
  b.lambda = lambda;
  b.complexity = complexity_loss(arch, cfg, target, sigma, opts);
  b.combined = ce + lambda * b.complexity;
  return b;
}

InterpTable InterpTable::from_anchors(std::vector<InterpAnchor> anchors) {
  std::sort(anchors.begin(), anchors.end(),
            [](const InterpAnchor& a, const InterpAnchor& b) { return a.z < b.z; });
  InterpTable t{std::move(anchors)};
  t.validate();
  return t;
}

void InterpTable::validate() const {
  if (anchors.size() < 2) throw DomainError("interpolation table needs at least two anchors");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!std::isfinite(anchors[i].z) || !std::isfinite(anchors[i].ce_mean)) {
      throw DomainError("interpolation anchor '" + anchors[i].config_id + "' is not finite");
    }
    if (i > 0 && !(anchors[i].z > anchors[i - 1].z)) {
      throw DomainError("interpolation anchors must have strictly increasing complexity ('" +
                        anchors[i - 1].config_id + "' vs '" + anchors[i].config_id + "')");
    }
  }
}

void InterpTable::save(const std::filesystem::path& path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw FileError("cannot write interpolation table", path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "config_id,z,ce_mean\n";
  for (const auto& a : anchors) out << a.config_id << ',' << a.z << ',' << a.ce_mean << '\n';
  if (!out) throw ConfigError("failed writing interpolation table " + path.string());
}

InterpTable InterpTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open interpolation table", path.string());
  std::string line;
  if (!std::getline(in, line) || line != "config_id,z,ce_mean") {
    throw ConfigError(path.string() + ": missing header 'config_id,z,ce_mean'");
  }
  std::vector<InterpAnchor> anchors;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    InterpAnchor a;
    std::string z, ce;
    if (!std::getline(fields, a.config_id, ',') || !std::getline(fields, z, ',') ||
        !std::getline(fields, ce)) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    try {
      a.z = std::stod(z);
      a.ce_mean = std::stod(ce);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    anchors.push_back(std::move(a));
  }
  return from_anchors(std::move(anchors));
}

double interp_ce(const InterpTable& table, double z) {
  const auto& a = table.anchors;
  if (a.size() < 2) throw DomainError("interpolation table needs at least two anchors");
  if (!(z >= a.front().z && z <= a.back().z)) {
    throw DomainError("complexity " + std::to_string(z) + " outside the anchor range [" +
                      std::to_string(a.front().z) + ", " + std::to_string(a.back().z) + "]");
  }
  auto hi = std::lower_bound(a.begin(), a.end(), z,
                             [](const InterpAnchor& x, double v) { return x.z < v; });
  if (hi->z == z) return hi->ce_mean;
  const auto lo = hi - 1;
  const double w = (z - lo->z) / (hi->z - lo->z);
  return lo->ce_mean + w * (hi->ce_mean - lo->ce_mean);
}

double interpolation_loss(double ce_a, double z_a, const InterpTable& table, const Sigma& sigma) {
  return sigma(ce_a - interp_ce(table, z_a));
}

double interpolation_loss(double ce_a, const ArchitectureSpec& arch, const NetworkConfig& cfg,
                          const InterpTable& table, const Sigma& sigma,
                          const ComplexityOptions& opts) {
  const double z = network_complexity(arch, cfg, opts);
  try {
    return interpolation_loss(ce_a, z, table, sigma);
  } catch (const DomainError& e) {
    throw DomainError("config " + config_id(cfg) + ": " + e.what());
  }
}

double expected_loss(const ArchitectureSpec& arch, const AlphaParams& alpha,
                     const ConfigLoss& loss, std::uint64_t guard) {
  const auto space = enumerate_space(arch, alpha, guard);
  NeumaierSum sum;
  for (std::size_t i = 0; i < space.configs.size(); ++i) {
    sum.add(space.probs[i] * loss(space.configs[i]));
  }
  return sum.value();
}

InterpTable build_interp_table(const ArchitectureSpec& arch, const Split& train,
                               std::span<const NetworkConfig> anchors,
                               const TrainSettings& settings, std::uint64_t seed, int sessions,
                               const ComplexityOptions& opts) {
  if (sessions < 1) throw DomainError("need at least one training session per anchor");
  std::vector<InterpAnchor> rows;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto& cfg = anchors[i];
    double ce_sum = 0.0;
    for (int s = 0; s < sessions; ++s) {
      Weights w = init_weights(arch, derive_seed(seed, "interp-anchor", i, static_cast<std::uint64_t>(s)));
      SgdMomentum opt(w);
      train_epochs(arch, w, opt, cfg, train, settings, settings.epochs);
      ce_sum += evaluate(arch, w, cfg, train).cross_entropy;
    }
    rows.push_back({config_id(cfg), network_complexity(arch, cfg, opts), ce_sum / sessions});
  }
  return InterpTable::from_anchors(std::move(rows));
}

}  // namespace dnas

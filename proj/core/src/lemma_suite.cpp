#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "dnas/error.hpp"
#include "dnas/oracle.hpp"

namespace dnas {

namespace {

class Checker {
 public:
  Checker(std::string name, const LemmaSuiteOptions& opts) : opts_(opts) { check_.name = std::move(name); }

  /// Derivative agreement: relative tolerance with an absolute floor.
  void close(double analytic, double numeric) {
    const double abs_err = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
    ++check_.cases;
    check_.max_abs_error = std::max(check_.max_abs_error, abs_err);
    if (scale > opts_.abs_tol) check_.max_rel_error = std::max(check_.max_rel_error, rel_err);
    if (!(abs_err <= opts_.abs_tol || rel_err <= opts_.rel_tol)) ++check_.failures;
  }

  /// Absolute agreement for sums.
  void near(double value, double expected) {
    const double err = std::abs(value - expected);
    ++check_.cases;
    check_.max_abs_error = std::max(check_.max_abs_error, err);
    if (!(err <= opts_.sum_tol)) ++check_.failures;
  }

  LemmaCheck result() const { return check_; }

 private:
  const LemmaSuiteOptions& opts_;
  LemmaCheck check_;
};

AlphaParams random_alpha(const ArchitectureSpec& arch, Rng& rng) {
  AlphaParams a = AlphaParams::zeros(arch);
  for (auto& v : a.per_layer) {
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
  }
  return a;
}

std::vector<std::size_t> pick(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx;
  if (n <= k) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < k; ++i) idx.push_back(rng.below(n));
  }
  return idx;
}

double layer_pmf_at(const LayerSpec& layer, Family family, std::span<const double> alpha,
                    const LayerConfig& cfg) {
  if (family == Family::Multinomial) return multinomial_pmf(layer, softmax_probs(alpha), cfg);
  return binomial_pmf(layer, sigmoid_prob(alpha[0]), cfg);
}

}  // namespace

ArchitectureSpec random_toy_arch(Rng& rng, Family family) {
  static const std::vector<BitWidths> pool = {{2, 2}, {2, 4}, {3, 3}, {4, 4}, {8, 8}, {4, 8}};
  ArchitectureSpec arch;
  arch.num_classes = 2;
  arch.input = {1, 1, 1};
  const int layers = 1 + static_cast<int>(rng.below(3));
  int in = 1;
  for (int l = 0; l < layers; ++l) {
    LayerSpec s;
    s.filters = 2 + static_cast<int>(rng.below(5));
    s.in_channels = in;
    s.kernel = 1;
    if (family == Family::Multinomial) {
      s.ops.mode = Mode::Quantization;
      auto ops = pool;
      for (std::size_t i = ops.size(); i > 1; --i) std::swap(ops[i - 1], ops[rng.below(i)]);
      ops.resize(2 + rng.below(3));
      s.ops.quant_ops = ops;
    } else {
      s.ops.mode = Mode::Pruning;
    }
    arch.layers.push_back(s);
    in = s.filters;
  }
  arch.validate();
  return arch;
}

bool LemmaReport::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.passed(); });
}

const LemmaCheck& LemmaReport::at(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw DomainError("no lemma check named '" + name + "'");
}

std::string LemmaReport::table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-34s %8s %12s %12s  %s\n", "check", "cases", "max_abs",
                "max_rel", "result");
  out << line;
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-34s %8zu %12.3e %12.3e  %s\n", c.name.c_str(), c.cases,
                  c.max_abs_error, c.max_rel_error, c.passed() ? "PASS" : "FAIL");
    out << line;
  }
  return out.str();
}

LemmaReport run_lemma_suite(const LemmaSuiteOptions& opts) {
  LemmaReport report;
  for (Family family : {Family::Multinomial, Family::Binomial}) {
    const std::string tag = "/" + to_string(family);
    Checker layer_grad("layer_pmf_grad" + tag, opts);
    Checker net_grad("network_prob_grad" + tag, opts);
    Checker loss_grad("expected_loss_grad" + tag, opts);
    Checker norm("normalization" + tag, opts);
    Checker zero_sum("gradient_zero_sum" + tag, opts);

    Rng rng(derive_seed(opts.seed, "lemma-suite/" + to_string(family)));
    for (int inst = 0; inst < opts.instances; ++inst) {
      ArchitectureSpec arch = random_toy_arch(rng, family);
      while (network_config_count(arch) > opts.max_space) arch = random_toy_arch(rng, family);
      const AlphaParams alpha = random_alpha(arch, rng);
      const double h = opts.step;

      // Per-layer pmf derivative and per-layer normalization.
      for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const auto& layer = arch.layers[l];
        const auto configs = enumerate_layer(layer);
        const auto probs = layer_probs(alpha, l);
        NeumaierSum total;
        std::vector<NeumaierSum> grad_total(alpha.per_layer[l].size());
        for (const auto& c : configs) {
          total.add(layer_pmf(layer, probs, c));
          for (std::size_t t = 0; t < alpha.per_layer[l].size(); ++t) {
            const double g = family == Family::Multinomial
                                 ? multinomial_layer_pmf_grad(layer, probs, c, t)
                                 : binomial_layer_pmf_grad(layer, probs[0], c);
            grad_total[t].add(g);
          }
        }
        norm.near(total.value(), 1.0);
        for (auto& s : grad_total) zero_sum.near(s.value(), 0.0);

        for (std::size_t ci : pick(configs.size(), 6, rng)) {
          const auto& c = configs[ci];
          for (std::size_t t = 0; t < alpha.per_layer[l].size(); ++t) {
            auto plus = alpha.per_layer[l];
            auto minus = alpha.per_layer[l];
            plus[t] += h;
            minus[t] -= h;
            const double fd =
                (layer_pmf_at(layer, family, plus, c) - layer_pmf_at(layer, family, minus, c)) /
                (2.0 * h);
            const double g = family == Family::Multinomial
                                 ? multinomial_layer_pmf_grad(layer, probs, c, t)
                                 : binomial_layer_pmf_grad(layer, probs[0], c);
            layer_grad.close(g, fd);
          }
        }
      }

      // Network-level probability, its derivative and the expected loss.
      const auto space = enumerate_space(arch, alpha, opts.max_space);
      NeumaierSum total;
      for (double p : space.probs) total.add(p);
      norm.near(total.value(), 1.0);

      for (std::size_t ci : pick(space.configs.size(), 6, rng)) {
        const auto& c = space.configs[ci];
        for (std::size_t l = 0; l < arch.num_layers(); ++l) {
          for (std::size_t t = 0; t < alpha.per_layer[l].size(); ++t) {
            AlphaParams plus = alpha;
            AlphaParams minus = alpha;
            plus.per_layer[l][t] += h;
            minus.per_layer[l][t] -= h;
            const double fd = (network_config_prob(arch, plus, c) -
                               network_config_prob(arch, minus, c)) / (2.0 * h);
            net_grad.close(network_config_prob_grad(arch, alpha, c, l, t), fd);
          }
        }
      }

      std::map<NetworkConfig, double> table;
      for (const auto& c : space.configs) table[c] = rng.uniform();
      const ConfigLoss loss = [&](const NetworkConfig& c) { return table.at(c); };
      const auto exact = exact_grad(arch, alpha, loss, opts.max_space);
      const auto fd = finite_diff_grad(arch, alpha, loss, h, opts.max_space);
      for (std::size_t l = 0; l < exact.per_layer.size(); ++l) {
        for (std::size_t t = 0; t < exact.per_layer[l].size(); ++t) {
          loss_grad.close(exact.per_layer[l][t], fd.per_layer[l][t]);
        }
      }
      const auto constant = exact_grad(
          arch, alpha, [](const NetworkConfig&) { return 1.0; }, opts.max_space);
      for (const auto& v : constant.per_layer) {
        for (double g : v) zero_sum.near(g, 0.0);
      }
    }
    for (const auto* c : {&layer_grad, &net_grad, &loss_grad, &norm, &zero_sum}) {
      report.checks.push_back(c->result());
    }
  }
  return report;
}

}  // namespace dnas

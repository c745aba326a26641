#include "dnas/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dnas/error.hpp"
#include "dnas/objective.hpp"
#include "dnas/rng.hpp"

namespace dnas {

Weights Weights::zeros_like(const Weights& w) {
  Weights z = w;
  z.for_each_buffer([](std::vector<double>& b) { std::fill(b.begin(), b.end(), 0.0); });
  return z;
}

std::size_t Weights::num_params() const {
  std::size_t n = 0;
  for_each_buffer([&](const std::vector<double>& b) { n += b.size(); });
  return n;
}

void TrainSettings::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("learning rate must be finite and non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (epochs < 0) throw DomainError("epochs must be >= 0");
}

Weights init_weights(const ArchitectureSpec& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(derive_seed(seed, "init-weights"));
  Weights w;
  for (const auto& l : arch.layers) {
    ConvWeights c;
    c.filters = l.filters;
    c.in_channels = l.in_channels;
    c.kernel = l.kernel;
    const double fan_in = static_cast<double>(c.filter_stride());
    const double bound = std::sqrt(6.0 / fan_in);
    c.weight.resize(static_cast<std::size_t>(c.filters) * c.filter_stride());
    for (double& v : c.weight) v = rng.uniform(-bound, bound);
    c.bias.assign(static_cast<std::size_t>(c.filters), 0.0);
    w.conv.push_back(std::move(c));
  }
  w.num_classes = arch.num_classes;
  w.features = arch.layers.back().filters;
  const double bound = std::sqrt(6.0 / w.features);
  w.classifier.resize(static_cast<std::size_t>(w.num_classes) * w.features);
  for (double& v : w.classifier) v = rng.uniform(-bound, bound);
  w.classifier_bias.assign(static_cast<std::size_t>(w.num_classes), 0.0);
  return w;
}

void quantize_in_place(std::span<double> values, int bits) {
  if (bits < 1 || bits > 32) throw DomainError("quantizer bits outside 1..32");
  double max_abs = 0.0;
  for (double v : values) max_abs = std::max(max_abs, std::abs(v));
  const double levels = std::max(1.0, std::exp2(bits - 1) - 1.0);
  const double scale = max_abs > 0.0 ? max_abs / levels : 1.0;
  for (double& v : values) v = std::round(v / scale) * scale;
}

std::vector<double> quantize(std::span<const double> values, int bits) {
  std::vector<double> out(values.begin(), values.end());
  quantize_in_place(out, bits);
  return out;
}

namespace {

struct Group {
  int begin = 0;
  int end = 0;
  int bits = 0;  // 0: no quantization
};

struct LayerPlan {
  int in_active = 0;
  int out_active = 0;
  std::vector<int> weight_bits;     // per active filter, 0 = float
  std::vector<Group> act_groups;    // contiguous output groups
};

std::vector<LayerPlan> make_plan(const ArchitectureSpec& arch, const NetworkConfig* cfg) {
  if (cfg) validate_config(arch, *cfg);
  std::vector<LayerPlan> plan(arch.num_layers());
  int in = arch.input.channels;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const auto& spec = arch.layers[l];
    auto& p = plan[l];
    p.in_active = in;
    if (cfg && arch.mode() == Mode::Quantization) {
      p.out_active = spec.filters;
      const auto counts = (*cfg)[l].op_counts();
      int begin = 0;
      for (std::size_t t = 0; t < counts.size(); ++t) {
        if (counts[t] == 0) continue;
        const auto& op = spec.ops.quant_ops[t];
        p.weight_bits.insert(p.weight_bits.end(), static_cast<std::size_t>(counts[t]), op.weight);
        p.act_groups.push_back({begin, begin + counts[t], op.activation});
        begin += counts[t];
      }
    } else {
      p.out_active = cfg ? (*cfg)[l].active_filters() : spec.filters;
      p.weight_bits.assign(static_cast<std::size_t>(p.out_active), 0);
    }
    in = p.out_active;
  }
  return plan;
}

/// Compact (out_active, in_active, k, k) weights with per-filter quantization.
std::vector<double> effective_weights(const ConvWeights& w, const LayerPlan& p) {
  const std::size_t k2 = static_cast<std::size_t>(w.kernel) * w.kernel;
  const std::size_t stride = static_cast<std::size_t>(p.in_active) * k2;
  std::vector<double> eff(static_cast<std::size_t>(p.out_active) * stride);
  for (int f = 0; f < p.out_active; ++f) {
    const std::size_t src = f * w.filter_stride();
    for (std::size_t i = 0; i < stride; ++i) eff[f * stride + i] = w.weight[src + i];
    if (p.weight_bits[f] > 0) {
      quantize_in_place(std::span<double>(eff).subspan(f * stride, stride), p.weight_bits[f]);
    }
  }
  return eff;
}

struct SampleCache {
  std::vector<std::vector<double>> pre;   // per layer (out_active, H, W)
  std::vector<std::vector<double>> post;  // per layer, after ReLU and quantization
  std::vector<double> features;
};

class Engine {
 public:
  Engine(const ArchitectureSpec& arch, const Weights& weights, const NetworkConfig* cfg)
      : arch_(arch), weights_(weights), plan_(make_plan(arch, cfg)) {
    if (weights.conv.size() != arch.num_layers()) {
      throw DomainError("weights do not match the architecture");
    }
    for (std::size_t l = 0; l < plan_.size(); ++l) {
      const auto& w = weights.conv[l];
      const auto& s = arch.layers[l];
      if (w.filters != s.filters || w.in_channels != s.in_channels || w.kernel != s.kernel) {
        throw DomainError("weight shape mismatch in layer " + std::to_string(l));
      }
      eff_.push_back(effective_weights(w, plan_[l]));
    }
    height_ = arch.input.height;
    width_ = arch.input.width;
  }

  std::size_t num_classes() const { return static_cast<std::size_t>(weights_.num_classes); }

  /// Forward one sample; fills cache and writes logits.
  void forward(std::span<const double> input, SampleCache& cache, std::span<double> logits) const {
    const std::size_t hw = static_cast<std::size_t>(height_) * width_;
    cache.pre.resize(plan_.size());
    cache.post.resize(plan_.size());
    std::span<const double> x = input;
    for (std::size_t l = 0; l < plan_.size(); ++l) {
      const auto& p = plan_[l];
      auto& pre = cache.pre[l];
      pre.assign(static_cast<std::size_t>(p.out_active) * hw, 0.0);
      conv(l, x, pre);
      auto& post = cache.post[l];
      post.resize(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
      for (const auto& g : p.act_groups) {
        if (g.bits > 0) {
          quantize_in_place(std::span<double>(post).subspan(g.begin * hw, (g.end - g.begin) * hw),
                            g.bits);
        }
      }
      x = post;
    }
    const int feats = plan_.back().out_active;
    cache.features.assign(static_cast<std::size_t>(feats), 0.0);
    for (int f = 0; f < feats; ++f) {
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += x[f * hw + i];
      cache.features[f] = s / static_cast<double>(hw);
    }
    for (std::size_t k = 0; k < num_classes(); ++k) {
      double z = weights_.classifier_bias[k];
      const double* row = weights_.classifier.data() + k * weights_.features;
      for (int f = 0; f < feats; ++f) z += row[f] * cache.features[f];
      logits[k] = z;
    }
  }

  /// Backward one sample given dL/dlogits; accumulates into grad.
  void backward(std::span<const double> input, const SampleCache& cache,
                std::span<const double> dlogits, Weights& grad) const {
    const std::size_t hw = static_cast<std::size_t>(height_) * width_;
    const int feats = plan_.back().out_active;
    std::vector<double> dfeat(static_cast<std::size_t>(feats), 0.0);
    for (std::size_t k = 0; k < num_classes(); ++k) {
      const double d = dlogits[k];
      grad.classifier_bias[k] += d;
      const double* row = weights_.classifier.data() + k * weights_.features;
      double* grow = grad.classifier.data() + k * weights_.features;
      for (int f = 0; f < feats; ++f) {
        grow[f] += d * cache.features[f];
        dfeat[f] += d * row[f];
      }
    }
    std::vector<double> dpost(static_cast<std::size_t>(feats) * hw);
    for (int f = 0; f < feats; ++f) {
      const double d = dfeat[f] / static_cast<double>(hw);
      std::fill(dpost.begin() + f * hw, dpost.begin() + (f + 1) * hw, d);
    }
    std::vector<double> dinput;
    for (std::size_t l = plan_.size(); l-- > 0;) {
      const auto& pre = cache.pre[l];
      // Straight-through: quantizer is identity, ReLU gates.
      for (std::size_t i = 0; i < dpost.size(); ++i) {
        if (!(pre[i] > 0.0)) dpost[i] = 0.0;
      }
      std::span<const double> x = l == 0 ? input : std::span<const double>(cache.post[l - 1]);
      const bool need_input_grad = l > 0;
      if (need_input_grad) dinput.assign(static_cast<std::size_t>(plan_[l].in_active) * hw, 0.0);
      conv_backward(l, x, dpost, grad.conv[l], need_input_grad ? &dinput : nullptr);
      if (need_input_grad) dpost.swap(dinput);
    }
  }

 private:
  void conv(std::size_t l, std::span<const double> x, std::vector<double>& out) const {
    const auto& p = plan_[l];
    const int k = arch_.layers[l].kernel;
    const int pad = (k - 1) / 2;
    const int H = height_;
    const int W = width_;
    const auto& w = eff_[l];
    const auto& bias = weights_.conv[l].bias;
    for (int f = 0; f < p.out_active; ++f) {
      double* o = out.data() + static_cast<std::size_t>(f) * H * W;
      std::fill(o, o + H * W, bias[f]);
      for (int c = 0; c < p.in_active; ++c) {
        const double* xin = x.data() + static_cast<std::size_t>(c) * H * W;
        const double* wf = w.data() + (static_cast<std::size_t>(f) * p.in_active + c) * k * k;
        for (int i = 0; i < k; ++i) {
          const int dy = i - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(H, H - dy);
          for (int j = 0; j < k; ++j) {
            const double wv = wf[i * k + j];
            const int dx = j - pad;
            const int x0 = std::max(0, -dx);
            const int x1 = std::min(W, W - dx);
            for (int y = y0; y < y1; ++y) {
              double* orow = o + y * W;
              const double* irow = xin + (y + dy) * W + dx;
              for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
            }
          }
        }
      }
    }
  }

  void conv_backward(std::size_t l, std::span<const double> x, const std::vector<double>& dout,
                     ConvWeights& g, std::vector<double>* dx) const {
    const auto& p = plan_[l];
    const int k = arch_.layers[l].kernel;
    const int pad = (k - 1) / 2;
    const int H = height_;
    const int W = width_;
    const auto& w = eff_[l];
    const std::size_t full_stride = g.filter_stride();
    for (int f = 0; f < p.out_active; ++f) {
      const double* d = dout.data() + static_cast<std::size_t>(f) * H * W;
      double db = 0.0;
      for (int i = 0; i < H * W; ++i) db += d[i];
      g.bias[f] += db;
      for (int c = 0; c < p.in_active; ++c) {
        const double* xin = x.data() + static_cast<std::size_t>(c) * H * W;
        const double* wf = w.data() + (static_cast<std::size_t>(f) * p.in_active + c) * k * k;
        double* gw = g.weight.data() + f * full_stride + static_cast<std::size_t>(c) * k * k;
        double* dxc = dx ? dx->data() + static_cast<std::size_t>(c) * H * W : nullptr;
        for (int i = 0; i < k; ++i) {
          const int dy = i - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(H, H - dy);
          for (int j = 0; j < k; ++j) {
            const int dx_off = j - pad;
            const int x0 = std::max(0, -dx_off);
            const int x1 = std::min(W, W - dx_off);
            const double wv = wf[i * k + j];
            double acc = 0.0;
            for (int y = y0; y < y1; ++y) {
              const double* drow = d + y * W;
              const double* irow = xin + (y + dy) * W + dx_off;
              for (int xx = x0; xx < x1; ++xx) acc += drow[xx] * irow[xx];
              if (dxc) {
                double* xrow = dxc + (y + dy) * W + dx_off;
                for (int xx = x0; xx < x1; ++xx) xrow[xx] += wv * drow[xx];
              }
            }
            gw[i * k + j] += acc;
          }
        }
      }
    }
  }

  const ArchitectureSpec& arch_;
  const Weights& weights_;
  std::vector<LayerPlan> plan_;
  std::vector<std::vector<double>> eff_;
  int height_ = 0;
  int width_ = 0;
};

std::vector<double> run_forward(const ArchitectureSpec& arch, const Weights& weights,
                                const NetworkConfig* cfg, const Batch& batch) {
  const Engine engine(arch, weights, cfg);
  const std::size_t n = arch.input.size();
  if (batch.inputs.size() != batch.size() * n) throw DomainError("batch shape mismatch");
  const std::size_t K = engine.num_classes();
  std::vector<double> logits(batch.size() * K);
  SampleCache cache;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    engine.forward(batch.inputs.subspan(s * n, n), cache,
                   std::span<double>(logits).subspan(s * K, K));
  }
  return logits;
}

double run_loss_and_gradient(const ArchitectureSpec& arch, const Weights& weights,
                             const NetworkConfig* cfg, const Batch& batch, Weights& grad) {
  if (batch.size() == 0) throw DomainError("empty batch");
  const Engine engine(arch, weights, cfg);
  const std::size_t n = arch.input.size();
  if (batch.inputs.size() != batch.size() * n) throw DomainError("batch shape mismatch");
  const std::size_t K = engine.num_classes();
  std::vector<double> logits(K);
  std::vector<double> dlogits(K);
  SampleCache cache;
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto input = batch.inputs.subspan(s * n, n);
    engine.forward(input, cache, logits);
    const double shift = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(logits[k] - shift);
    const double lse = shift + std::log(z);
    const int y = batch.labels[s];
    total += lse - logits[y];
    for (std::size_t k = 0; k < K; ++k) {
      dlogits[k] = (std::exp(logits[k] - lse) - (static_cast<int>(k) == y ? 1.0 : 0.0)) * inv_n;
    }
    engine.backward(input, cache, dlogits, grad);
  }
  return total * inv_n;
}

void check_finite_loss(double loss, const NetworkConfig& cfg) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss " + std::to_string(loss) + " for config " +
                       config_id(cfg));
  }
}

}  // namespace

std::vector<double> forward(const ArchitectureSpec& arch, const Weights& weights,
                            const NetworkConfig& cfg, const Batch& batch) {
  return run_forward(arch, weights, &cfg, batch);
}

std::vector<double> forward_float(const ArchitectureSpec& arch, const Weights& weights,
                                  const Batch& batch) {
  return run_forward(arch, weights, nullptr, batch);
}

double loss_and_gradient(const ArchitectureSpec& arch, const Weights& weights,
                         const NetworkConfig& cfg, const Batch& batch, Weights& grad) {
  return run_loss_and_gradient(arch, weights, &cfg, batch, grad);
}

double loss_and_gradient_float(const ArchitectureSpec& arch, const Weights& weights,
                               const Batch& batch, Weights& grad) {
  return run_loss_and_gradient(arch, weights, nullptr, batch, grad);
}

void SgdMomentum::step(Weights& weights, const Weights& grad, const TrainSettings& settings) {
  std::vector<std::vector<double>*> w;
  std::vector<const std::vector<double>*> g;
  std::vector<std::vector<double>*> v;
  weights.for_each_buffer([&](std::vector<double>& b) { w.push_back(&b); });
  grad.for_each_buffer([&](const std::vector<double>& b) { g.push_back(&b); });
  velocity_.for_each_buffer([&](std::vector<double>& b) { v.push_back(&b); });
  if (w.size() != g.size() || w.size() != v.size()) throw DomainError("optimizer shape mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto& wb = *w[i];
    const auto& gb = *g[i];
    auto& vb = *v[i];
    if (wb.size() != gb.size() || wb.size() != vb.size()) {
      throw DomainError("optimizer buffer size mismatch");
    }
    for (std::size_t j = 0; j < wb.size(); ++j) {
      vb[j] = settings.momentum * vb[j] + gb[j];
      wb[j] -= settings.learning_rate * vb[j];
    }
  }
}

double train_step(const ArchitectureSpec& arch, Weights& weights, SgdMomentum& opt,
                  const NetworkConfig& cfg, const Batch& batch, const TrainSettings& settings) {
  Weights grad = Weights::zeros_like(weights);
  const double loss = loss_and_gradient(arch, weights, cfg, batch, grad);
  check_finite_loss(loss, cfg);
  opt.step(weights, grad, settings);
  return loss;
}

double slimmable_train_step(const ArchitectureSpec& arch, Weights& weights, SgdMomentum& opt,
                            std::span<const NetworkConfig> configs, const Batch& batch,
                            const TrainSettings& settings) {
  if (configs.empty()) throw DomainError("slimmable step needs at least one configuration");
  Weights grad = Weights::zeros_like(weights);
  double total = 0.0;
  for (const auto& cfg : configs) {
    const double loss = loss_and_gradient(arch, weights, cfg, batch, grad);
    check_finite_loss(loss, cfg);
    total += loss;
  }
  opt.step(weights, grad, settings);
  return total / static_cast<double>(configs.size());
}

double train_epochs(const ArchitectureSpec& arch, Weights& weights, SgdMomentum& opt,
                    const NetworkConfig& cfg, const Split& split, const TrainSettings& settings,
                    int epochs) {
  settings.validate();
  if (split.empty()) throw DomainError("cannot train on an empty split");
  double mean = std::numeric_limits<double>::quiet_NaN();
  const auto batches = split.batches(settings.batch_size);
  for (int e = 0; e < epochs; ++e) {
    double sum = 0.0;
    for (const auto& b : batches) sum += train_step(arch, weights, opt, cfg, b, settings);
    mean = sum / static_cast<double>(batches.size());
  }
  return mean;
}

Weights fine_tune(const ArchitectureSpec& arch, const Weights& weights, const NetworkConfig& cfg,
                  const Split& split, const TrainSettings& settings, int epochs) {
  Weights copy = weights;
  if (epochs <= 0) return copy;
  SgdMomentum opt(copy);
  train_epochs(arch, copy, opt, cfg, split, settings, epochs);
  return copy;
}

Evaluation evaluate(const ArchitectureSpec& arch, const Weights& weights,
                    const NetworkConfig& cfg, const Split& split) {
  if (split.empty()) throw DomainError("cannot evaluate an empty split");
  const auto logits = forward(arch, weights, cfg, split.all());
  const std::size_t K = static_cast<std::size_t>(weights.num_classes);
  Evaluation e;
  e.cross_entropy = cross_entropy(logits, K, split.labels);
  std::size_t correct = 0;
  for (std::size_t s = 0; s < split.size(); ++s) {
    const auto row = std::span<const double>(logits).subspan(s * K, K);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == split.labels[s]) ++correct;
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
  return e;
}

}  // namespace dnas

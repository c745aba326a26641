#include "dnas/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dnas/error.hpp"
#include "dnas/rng.hpp"

namespace dnas {

Batch Split::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, size());
  if (begin > end) throw DomainError("bad batch range");
  return {std::span<const double>(inputs).subspan(begin * sample_size, (end - begin) * sample_size),
          std::span<const int>(labels).subspan(begin, end - begin)};
}

std::vector<Batch> Split::batches(std::size_t batch_size) const {
  if (batch_size == 0) throw DomainError("batch size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t b = 0; b < size(); b += batch_size) out.push_back(slice(b, b + batch_size));
  return out;
}

Split Split::concat(const Split& a, const Split& b) {
  if (!a.empty() && !b.empty() && a.sample_size != b.sample_size) {
    throw DomainError("cannot concatenate splits with different sample sizes");
  }
  Split s;
  s.sample_size = a.empty() ? b.sample_size : a.sample_size;
  s.inputs = a.inputs;
  s.inputs.insert(s.inputs.end(), b.inputs.begin(), b.inputs.end());
  s.labels = a.labels;
  s.labels.insert(s.labels.end(), b.labels.begin(), b.labels.end());
  return s;
}

void Dataset::validate() const {
  const std::size_t n = shape.size();
  for (const Split* s : {&alpha, &omega, &validation}) {
    if (!s->empty() && s->sample_size != n) throw DomainError("split sample size mismatch");
    if (s->inputs.size() != s->size() * n) throw DomainError("split input buffer size mismatch");
    for (int y : s->labels) {
      if (y < 0 || y >= num_classes) throw DomainError("label out of range");
    }
  }
}

void Dataset::check_compatible(const ArchitectureSpec& arch) const {
  if (shape.channels != arch.input.channels || shape.height != arch.input.height ||
      shape.width != arch.input.width) {
    throw DomainError("dataset input shape does not match the architecture");
  }
  if (num_classes != arch.num_classes) {
    throw DomainError("dataset class count does not match the architecture");
  }
}

namespace {

void append_grating(Split& split, const InputShape& shape, int label, int num_classes,
                    double noise, Rng& rng) {
  const double angle = std::numbers::pi * label / num_classes;
  const double freq = 2.0 * std::numbers::pi / 4.0;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double cx = std::cos(angle);
  const double sy = std::sin(angle);
  for (int c = 0; c < shape.channels; ++c) {
    for (int y = 0; y < shape.height; ++y) {
      for (int x = 0; x < shape.width; ++x) {
        const double v = 0.5 + 0.4 * std::cos(freq * (x * cx + y * sy) + phase) +
                         noise * rng.normal();
        split.inputs.push_back(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  split.labels.push_back(label);
}

Split make_split(const SyntheticSpec& spec, int per_class, Rng& rng) {
  Split s;
  s.sample_size = spec.shape.size();
  // Interleave classes so every fixed-order batch sees all of them.
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < spec.num_classes; ++c) {
      append_grating(s, spec.shape, c, spec.num_classes, spec.noise, rng);
    }
  }
  return s;
}

}  // namespace

Dataset make_cluster_images(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw DomainError("need at least two classes");
  if (spec.train_per_class < 2) throw DomainError("need at least two training samples per class");
  if (spec.validation_per_class < 1) throw DomainError("need validation samples");
  Dataset d;
  d.shape = spec.shape;
  d.num_classes = spec.num_classes;
  Rng rng(derive_seed(spec.seed, "cluster-images"));
  const int alpha_per_class = spec.train_per_class / 2;
  d.alpha = make_split(spec, alpha_per_class, rng);
  d.omega = make_split(spec, spec.train_per_class - alpha_per_class, rng);
  d.validation = make_split(spec, spec.validation_per_class, rng);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, InputShape shape, int num_classes,
                 std::uint64_t seed, double validation_fraction) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open dataset file", path.string());
  const std::size_t n = shape.size();
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream fields(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(fields, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                          field + "'");
      }
    }
    if (values.size() != n + 1) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(n + 1) + " fields, got " + std::to_string(values.size()));
    }
    const double label = values.front();
    if (label != std::floor(label) || label < 0 || label >= num_classes) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad label");
    }
    labels.push_back(static_cast<int>(label));
    rows.emplace_back(values.begin() + 1, values.end());
  }
  if (rows.size() < 3) throw ConfigError(path.string() + ": need at least 3 rows");

  double lo = rows.front().front();
  double hi = lo;
  for (const auto& r : rows) {
    for (double v : r) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double range = hi > lo ? hi - lo : 1.0;

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "csv-shuffle"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(validation_fraction * rows.size())));
  const std::size_t n_train = rows.size() - n_val;
  Dataset d;
  d.shape = shape;
  d.num_classes = num_classes;
  for (Split* s : {&d.alpha, &d.omega, &d.validation}) s->sample_size = n;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Split& dst = i < n_val ? d.validation : (i - n_val < n_train / 2 ? d.alpha : d.omega);
    for (double v : rows[order[i]]) dst.inputs.push_back((v - lo) / range);
    dst.labels.push_back(labels[order[i]]);
  }
  d.validate();
  return d;
}

}  // namespace dnas

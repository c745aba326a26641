#include "dnas/io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dnas/error.hpp"
#include "dnas/rng.hpp"
#include "json_codec.hpp"

namespace dnas {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be an object");
}

void allow_keys(const json& j, std::initializer_list<std::string_view> keys,
                const std::string& what) {
  require_object(j, what);
  for (const auto& [key, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown key '" + key + "' in " + what);
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ConfigError(what + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(what + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out, const std::string& what) {
  if (j.contains(key)) out = get<T>(j, key, what);
}

std::vector<BitWidths> parse_ops(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": ops must be a non-empty array");
  std::vector<BitWidths> ops;
  for (const auto& op : j) {
    if (!op.is_array() || op.size() != 2 || !op[0].is_number_integer() ||
        !op[1].is_number_integer()) {
      throw ConfigError(what + ": each op is [weight_bits, activation_bits]");
    }
    ops.push_back({op[0].get<int>(), op[1].get<int>()});
  }
  return ops;
}

Mode parse_mode(const std::string& s) {
  if (s == "quantization") return Mode::Quantization;
  if (s == "pruning") return Mode::Pruning;
  throw ConfigError("unknown mode '" + s + "' (expected quantization or pruning)");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_relative() && !base.empty() ? base / path : path).lexically_normal();
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::is_regular_file(p)) throw FileError(what + " not found", p.string());
}

MemoryPolicy parse_memory(const std::string& s) {
  if (s == "auto") return MemoryPolicy::Auto;
  if (s == "always") return MemoryPolicy::Always;
  if (s == "never") return MemoryPolicy::Never;
  throw ConfigError("unknown memory policy '" + s + "' (expected auto, always or never)");
}

TrainSettings parse_train(const json& j) {
  const std::string what = "train settings";
  allow_keys(j, {"learning_rate", "momentum", "batch_size", "epochs"}, what);
  TrainSettings t;
  get_to(j, "learning_rate", t.learning_rate, what);
  get_to(j, "momentum", t.momentum, what);
  get_to(j, "batch_size", t.batch_size, what);
  get_to(j, "epochs", t.epochs, what);
  return t;
}

SearchSettings parse_search(const json& j) {
  const std::string what = "search settings";
  allow_keys(j,
             {"sample_size", "lambda", "sigma", "alpha_lr", "t_omega", "k_omega",
              "fine_tune_epochs", "max_iterations", "convergence_threshold",
              "convergence_window", "record_validation", "slimmable_ratios", "memory",
              "pruning_weight_bits", "train"},
             what);
  SearchSettings s;
  get_to(j, "sample_size", s.sample_size, what);
  get_to(j, "lambda", s.lambda, what);
  get_to(j, "sigma", s.sigma, what);
  get_to(j, "alpha_lr", s.alpha_lr, what);
  get_to(j, "t_omega", s.t_omega, what);
  get_to(j, "k_omega", s.k_omega, what);
  get_to(j, "fine_tune_epochs", s.fine_tune_epochs, what);
  get_to(j, "max_iterations", s.max_iterations, what);
  get_to(j, "convergence_threshold", s.convergence_threshold, what);
  get_to(j, "convergence_window", s.convergence_window, what);
  get_to(j, "record_validation", s.record_validation, what);
  get_to(j, "slimmable_ratios", s.slimmable_ratios, what);
  if (j.contains("memory")) s.complexity.memory = parse_memory(get<std::string>(j, "memory", what));
  get_to(j, "pruning_weight_bits", s.complexity.pruning_weight_bits, what);
  if (j.contains("train")) s.train = parse_train(j.at("train"));
  Sigma::by_name(s.sigma);
  return s;
}

TargetSpec parse_target(const json& j) {
  const std::string what = "target";
  allow_keys(j, {"op", "ratio", "id"}, what);
  TargetSpec t;
  if (j.contains("op")) t.op = get<std::size_t>(j, "op", what);
  if (j.contains("ratio")) t.ratio = get<double>(j, "ratio", what);
  if (j.contains("id")) t.id = get<std::string>(j, "id", what);
  if (static_cast<int>(t.op.has_value()) + t.ratio.has_value() + t.id.has_value() != 1) {
    throw ConfigError("target needs exactly one of 'op', 'ratio' or 'id'");
  }
  return t;
}

DatasetSource parse_dataset(const json& j, const std::filesystem::path& base) {
  const std::string what = "dataset";
  allow_keys(j, {"synthetic", "csv", "validation_fraction"}, what);
  DatasetSource d;
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    allow_keys(s, {"train_per_class", "validation_per_class", "noise"}, "synthetic dataset");
    SyntheticSpec spec;
    get_to(s, "train_per_class", spec.train_per_class, "synthetic dataset");
    get_to(s, "validation_per_class", spec.validation_per_class, "synthetic dataset");
    get_to(s, "noise", spec.noise, "synthetic dataset");
    d.synthetic = spec;
  }
  if (j.contains("csv")) {
    d.csv = resolve(base, get<std::string>(j, "csv", what));
    require_file(*d.csv, "dataset file");
  }
  get_to(j, "validation_fraction", d.validation_fraction, what);
  if (d.synthetic.has_value() == d.csv.has_value()) {
    throw ConfigError("dataset needs exactly one of 'synthetic' or 'csv'");
  }
  return d;
}

GridSpec parse_grid(const json& j) {
  const std::string what = "grid settings";
  allow_keys(j, {"configs", "all", "patience", "max_epochs", "same_seed_repeats", "level"}, what);
  GridSpec g;
  get_to(j, "configs", g.configs, what);
  get_to(j, "all", g.all, what);
  get_to(j, "patience", g.patience, what);
  get_to(j, "max_epochs", g.max_epochs, what);
  get_to(j, "same_seed_repeats", g.same_seed_repeats, what);
  get_to(j, "level", g.level, what);
  if (g.patience < 1 || g.max_epochs < 1) {
    throw ConfigError("grid patience and max_epochs must be >= 1");
  }
  if (!(g.level >= 0.0 && g.level < 1.0)) throw ConfigError("grid level must lie in [0, 1)");
  return g;
}

InterpSpec parse_interp(const json& j, const std::filesystem::path& base) {
  const std::string what = "interpolation settings";
  allow_keys(j, {"table", "ratios", "sessions"}, what);
  InterpSpec s;
  if (j.contains("table")) {
    s.table = resolve(base, get<std::string>(j, "table", what));
    require_file(*s.table, "interpolation table");
  }
  get_to(j, "ratios", s.ratios, what);
  get_to(j, "sessions", s.sessions, what);
  if (s.sessions < 1) throw ConfigError("interpolation sessions must be >= 1");
  return s;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ArchitectureSpec parse_architecture(const std::string& json_text) {
  const std::string what = "architecture";
  const json j = parse_json(json_text, what);
  allow_keys(j, {"mode", "num_classes", "input", "input_bits", "ops", "layers"}, what);
  ArchitectureSpec arch;
  const Mode mode = parse_mode(get<std::string>(j, "mode", what));
  arch.num_classes = get<int>(j, "num_classes", what);
  const json& in = j.at("input");
  allow_keys(in, {"channels", "height", "width"}, "architecture input");
  arch.input.channels = get<int>(in, "channels", "architecture input");
  arch.input.height = get<int>(in, "height", "architecture input");
  arch.input.width = get<int>(in, "width", "architecture input");
  get_to(j, "input_bits", arch.input_bits, what);

  std::vector<BitWidths> default_ops;
  if (j.contains("ops")) default_ops = parse_ops(j.at("ops"), what);
  if (mode == Mode::Pruning && j.contains("ops")) {
    throw ConfigError("pruning architectures take no 'ops'");
  }

  if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty()) {
    throw ConfigError("architecture needs a non-empty 'layers' array");
  }
  int channels = arch.input.channels;
  std::size_t index = 0;
  for (const auto& lj : j.at("layers")) {
    const std::string lwhat = "layer " + std::to_string(index++);
    allow_keys(lj, {"filters", "kernel", "ops"}, lwhat);
    LayerSpec layer;
    layer.filters = get<int>(lj, "filters", lwhat);
    layer.kernel = get<int>(lj, "kernel", lwhat);
    layer.in_channels = channels;
    layer.out_height = arch.input.height;
    layer.out_width = arch.input.width;
    layer.ops.mode = mode;
    if (mode == Mode::Quantization) {
      layer.ops.quant_ops = lj.contains("ops") ? parse_ops(lj.at("ops"), lwhat) : default_ops;
      if (layer.ops.quant_ops.empty()) throw ConfigError(lwhat + ": no quantization ops given");
    } else if (lj.contains("ops")) {
      throw ConfigError(lwhat + ": pruning layers take no 'ops'");
    }
    channels = layer.filters;
    arch.layers.push_back(std::move(layer));
  }
  try {
    arch.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid architecture: ") + e.what());
  }
  return arch;
}

ArchitectureSpec load_architecture(const std::filesystem::path& path) {
  require_file(path, "architecture file");
  try {
    return parse_architecture(read_text_file(path));
  } catch (const FileError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

AlphaParams parse_alpha(const std::string& json_text) {
  const json j = parse_json(json_text, "alpha");
  require_object(j, "alpha");
  try {
    return alpha_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("alpha: ") + e.what());
  }
}

AlphaParams load_alpha(const std::filesystem::path& path) {
  require_file(path, "alpha file");
  return parse_alpha(read_text_file(path));
}

std::string alpha_to_json_text(const AlphaParams& alpha) {
  return alpha_to_json(alpha).dump(2) + "\n";
}

NetworkConfig parse_config(const std::string& json_text) {
  const std::string what = "config";
  const json j = parse_json(json_text, what);
  allow_keys(j, {"id", "layers", "widths"}, what);
  if (j.size() != 1) throw ConfigError("config needs exactly one of 'id', 'layers' or 'widths'");
  try {
    if (j.contains("id")) return parse_config_id(get<std::string>(j, "id", what));
    NetworkConfig cfg;
    if (j.contains("layers")) {
      for (auto& counts : get<std::vector<std::vector<int>>>(j, "layers", what)) {
        cfg.layers.push_back(LayerConfig::counts(std::move(counts)));
      }
    } else {
      for (int filters : get<std::vector<int>>(j, "widths", what)) {
        cfg.layers.push_back(LayerConfig::width(filters - 1));
      }
    }
    return cfg;
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

NetworkConfig load_config(const std::filesystem::path& path) {
  require_file(path, "config file");
  return parse_config(read_text_file(path));
}

NetworkConfig TargetSpec::resolve(const ArchitectureSpec& arch) const {
  NetworkConfig cfg;
  if (op) {
    cfg = make_homogeneous(arch, *op);
  } else if (ratio) {
    cfg = make_homogeneous_width(arch, *ratio);
  } else if (id) {
    cfg = parse_config_id(*id);
  } else {
    throw ConfigError("empty target");
  }
  validate_config(arch, cfg);
  return cfg;
}

Dataset load_dataset(const DatasetSource& source, const ArchitectureSpec& arch,
                     std::uint64_t seed) {
  const std::uint64_t data_seed = derive_seed(seed, "dataset");
  Dataset d;
  if (source.synthetic) {
    SyntheticSpec spec = *source.synthetic;
    spec.shape = arch.input;
    spec.num_classes = arch.num_classes;
    spec.seed = data_seed;
    d = make_cluster_images(spec);
  } else if (source.csv) {
    d = load_csv(*source.csv, arch.input, arch.num_classes, data_seed,
                 source.validation_fraction);
  } else {
    throw ConfigError("dataset source is empty");
  }
  d.check_compatible(arch);
  return d;
}

ExperimentSpec parse_experiment(const std::string& json_text, const std::filesystem::path& base) {
  const std::string what = "experiment";
  const json j = parse_json(json_text, what);
  allow_keys(j,
             {"architecture", "mode", "algorithm", "seed", "repeats", "output", "dataset",
              "search", "target", "initial_prob", "grid", "interp", "threads"},
             what);
  ExperimentSpec spec;
  spec.architecture = resolve(base, get<std::string>(j, "architecture", what));
  const ArchitectureSpec arch = load_architecture(spec.architecture);
  if (j.contains("mode") && parse_mode(get<std::string>(j, "mode", what)) != arch.mode()) {
    throw ConfigError("experiment mode does not match the architecture's mode");
  }
  spec.algorithm = parse_algorithm(get<std::string>(j, "algorithm", what));
  get_to(j, "seed", spec.seed, what);
  get_to(j, "repeats", spec.repeats, what);
  if (spec.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (j.contains("output")) spec.output = resolve(base, get<std::string>(j, "output", what));
  if (!j.contains("dataset")) throw ConfigError("experiment: missing key 'dataset'");
  spec.dataset = parse_dataset(j.at("dataset"), base);
  if (j.contains("search")) spec.search = parse_search(j.at("search"));
  get_to(j, "threads", spec.search.threads, what);
  if (j.contains("target")) {
    spec.target = parse_target(j.at("target"));
    try {
      spec.search.target = spec.target->resolve(arch);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("target: ") + e.what());
    }
  }
  if (j.contains("initial_prob")) {
    spec.initial_prob = get<double>(j, "initial_prob", what);
    if (arch.mode() != Mode::Pruning) throw ConfigError("initial_prob applies to pruning only");
    if (!(*spec.initial_prob > 0.0 && *spec.initial_prob < 1.0)) {
      throw ConfigError("initial_prob must lie in (0, 1)");
    }
    spec.search.initial_alpha = AlphaParams::from_probability(arch, *spec.initial_prob);
  }
  if (j.contains("grid")) spec.grid = parse_grid(j.at("grid"));
  if (j.contains("interp")) spec.interp = parse_interp(j.at("interp"), base);
  spec.search.seed = spec.seed;
  spec.search.train.seed = spec.seed;
  try {
    spec.search.validate(arch, spec.algorithm);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("search settings: ") + e.what());
  }
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  require_file(path, "experiment spec");
  try {
    return parse_experiment(read_text_file(path), path.parent_path());
  } catch (const FileError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

GridSettings grid_settings(const ExperimentSpec& spec) {
  GridSettings g;
  g.repeats = spec.repeats;
  g.patience = spec.grid.patience;
  g.max_epochs = spec.grid.max_epochs;
  g.same_seed_repeats = spec.grid.same_seed_repeats;
  g.level = spec.grid.level;
  g.train = spec.search.train;
  g.complexity = spec.search.complexity;
  g.seed = spec.seed;
  g.threads = spec.search.threads;
  return g;
}

}  // namespace dnas

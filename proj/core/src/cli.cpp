#include "dnas/cli.hpp"

#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dnas/complexity.hpp"
#include "dnas/emit.hpp"
#include "dnas/error.hpp"
#include "dnas/grid.hpp"
#include "dnas/io.hpp"
#include "dnas/oracle.hpp"
#include "dnas/search.hpp"
#include "json_codec.hpp"

namespace dnas {

namespace {

using nlohmann::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

ExperimentSpec load_spec(const std::string& path, const Globals& g) {
  ExperimentSpec spec = load_experiment(path);
  if (g.seed) {
    spec.seed = *g.seed;
    spec.search.seed = *g.seed;
    spec.search.train.seed = *g.seed;
  }
  if (g.threads) spec.search.threads = *g.threads;
  if (g.out) spec.output = *g.out;
  return spec;
}

json probs_json(const AlphaParams& alpha) {
  json layers = json::array();
  for (std::size_t l = 0; l < alpha.num_layers(); ++l) layers.push_back(layer_probs(alpha, l));
  return layers;
}

InterpTable interp_table_for(const ExperimentSpec& spec, const ArchitectureSpec& arch,
                             const Dataset& data, std::ostream& out) {
  if (spec.interp.table) return InterpTable::load(*spec.interp.table);
  std::vector<NetworkConfig> anchors;
  for (double r : spec.interp.ratios) {
    auto cfg = make_homogeneous_width(arch, r);
    if (std::find(anchors.begin(), anchors.end(), cfg) == anchors.end()) anchors.push_back(cfg);
  }
  InterpTable table =
      build_interp_table(arch, data.training(), anchors, spec.search.train,
                         derive_seed(spec.seed, "interp-table"), spec.interp.sessions,
                         spec.search.complexity);
  const auto path = spec.output / "interp_table.csv";
  std::filesystem::create_directories(spec.output);
  table.save(path);
  out << "wrote " << path.string() << "\n";
  return table;
}

int cmd_search(const std::string& spec_path, const Globals& g, std::ostream& out) {
  const ExperimentSpec spec = load_spec(spec_path, g);
  const ArchitectureSpec arch = load_architecture(spec.architecture);
  const Dataset data = load_dataset(spec.dataset, arch, spec.seed);
  std::optional<InterpTable> table;
  if (spec.algorithm == Algorithm::PruneInterp) table = interp_table_for(spec, arch, data, out);
  const SearchResult result =
      run_search(spec.algorithm, arch, data, spec.search, table ? &*table : nullptr);

  json summary;
  summary["algorithm"] = to_string(spec.algorithm);
  summary["seed"] = spec.seed;
  summary["iterations"] = result.trace.size();
  summary["converged"] = result.converged;
  summary["alpha"] = alpha_to_json(result.alpha);
  summary["probabilities"] = probs_json(result.alpha);
  if (arch.mode() == Mode::Pruning) {
    // Validation of the expected configuration, trained from scratch.
    const NetworkConfig expected = expected_config(result.alpha, arch);
    Weights w = init_weights(arch, derive_seed(spec.seed, "expected-config"));
    SgdMomentum opt(w);
    train_epochs(arch, w, opt, expected, data.training(), spec.search.train,
                 std::max(1, spec.search.t_omega));
    summary["expected_config"] = config_id(expected);
    summary["expected_complexity"] = network_complexity(arch, expected, spec.search.complexity);
    summary["expected_validation_accuracy"] =
        data.validation.empty() ? json(nullptr)
                                : json(evaluate(arch, w, expected, data.validation).accuracy);
  }
  const auto trace_path = emit_trace(result.trace, spec.output);
  write_text_file(spec.output / "alpha.json", alpha_to_json_text(result.alpha));
  write_text_file(spec.output / "summary.json", summary.dump(2) + "\n");
  out << summary.dump(2) << "\n";
  out << "wrote " << trace_path.string() << "\n";
  return 0;
}

int cmd_grid(const std::string& spec_path, const Globals& g, std::ostream& out) {
  const ExperimentSpec spec = load_spec(spec_path, g);
  const ArchitectureSpec arch = load_architecture(spec.architecture);
  const Dataset data = load_dataset(spec.dataset, arch, spec.seed);
  std::vector<NetworkConfig> configs;
  if (!spec.grid.configs.empty()) {
    for (const auto& id : spec.grid.configs) {
      auto cfg = parse_config_id(id);
      validate_config(arch, cfg);
      configs.push_back(std::move(cfg));
    }
  }
  if (spec.grid.all || configs.empty()) configs = enumerate_configs(arch);
  const auto rows = run_grid_study(arch, data, configs, grid_settings(spec));
  const GridFiles files = emit_grid(rows, spec.output);
  out << grid_table_csv(rows);
  for (const auto& r : rows) {
    for (const auto& f : r.failures) out << "failure " << r.config_id << ": " << f << "\n";
  }
  out << "wrote " << files.records.string() << ", " << files.table.string() << ", "
      << files.plot.string() << "\n";
  return 0;
}

NetworkConfig default_target(const ArchitectureSpec& arch) {
  if (arch.mode() == Mode::Pruning) return make_homogeneous_width(arch, 1.0);
  const auto& ops = arch.layers.front().ops.quant_ops;
  std::size_t best = 0;
  for (std::size_t i = 1; i < ops.size(); ++i) {
    if (ops[i].weight + ops[i].activation > ops[best].weight + ops[best].activation) best = i;
  }
  return make_homogeneous(arch, best);
}

struct BopsArgs {
  std::string arch;
  std::string config;
  std::string target_file;
  std::optional<std::size_t> target_op;
  std::optional<double> target_ratio;
  std::string memory = "auto";
};

int cmd_bops(const BopsArgs& a, std::ostream& out) {
  const ArchitectureSpec arch = load_architecture(a.arch);
  const NetworkConfig cfg = load_config(a.config);
  NetworkConfig target;
  const int chosen = static_cast<int>(!a.target_file.empty()) + a.target_op.has_value() +
                     a.target_ratio.has_value();
  if (chosen > 1) throw ConfigError("give at most one of --target, --target-op, --target-ratio");
  if (!a.target_file.empty()) {
    target = load_config(a.target_file);
  } else if (a.target_op) {
    target = make_homogeneous(arch, *a.target_op);
  } else if (a.target_ratio) {
    target = make_homogeneous_width(arch, *a.target_ratio);
  } else {
    target = default_target(arch);
  }
  ComplexityOptions opts;
  if (a.memory == "always") {
    opts.memory = MemoryPolicy::Always;
  } else if (a.memory == "never") {
    opts.memory = MemoryPolicy::Never;
  }
  validate_config(arch, cfg);
  validate_config(arch, target);
  const ComplexityReport r = complexity_report(arch, cfg, target, opts);
  json j;
  j["config"] = config_id(cfg);
  j["target"] = config_id(target);
  j["metric"] = arch.mode() == Mode::Quantization ? "bops" : "macs";
  j["per_layer"] = r.per_layer;
  j["memory_cost"] = r.memory_cost;
  j["memory_included"] = r.memory_included;
  j["total"] = r.total;
  j["target_total"] = r.target_total;
  j["ratio"] = r.ratio;
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_oracle_check(int instances, const Globals& g, std::ostream& out) {
  LemmaSuiteOptions opts;
  if (g.seed) opts.seed = *g.seed;
  opts.instances = instances;
  const LemmaReport report = run_lemma_suite(opts);
  out << report.table();
  out << (report.passed() ? "all checks passed\n" : "some checks FAILED\n");
  return report.passed() ? 0 : 1;
}

int cmd_sample(const std::string& arch_path, const std::string& alpha_path, int count,
               const Globals& g, std::ostream& out) {
  const ArchitectureSpec arch = load_architecture(arch_path);
  const AlphaParams alpha = load_alpha(alpha_path);
  try {
    alpha.validate(arch);
  } catch (const DomainError& e) {
    throw ConfigError(alpha_path + ": " + e.what());
  }
  Rng rng(derive_seed(g.seed.value_or(1), "cli-sample"));
  char buf[32];
  for (int i = 0; i < count; ++i) {
    const NetworkConfig cfg = sample_network(arch, alpha, rng);
    std::snprintf(buf, sizeof buf, "%.17g", network_config_prob(arch, alpha, cfg));
    out << config_id(cfg) << "\t" << buf << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distribution-based compression search"};
  app.name("dnas");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string spec_path;
  auto* search = app.add_subcommand("search", "Run a search from an experiment spec");
  search->add_option("spec", spec_path, "Experiment spec file")->required();

  std::string grid_spec;
  auto* grid = app.add_subcommand("grid", "Grid study of per-configuration accuracy");
  grid->add_option("spec", grid_spec, "Experiment spec file")->required();

  BopsArgs bops_args;
  auto* bops = app.add_subcommand("bops", "Complexity report for a configuration");
  bops->add_option("arch", bops_args.arch, "Architecture file")->required();
  bops->add_option("config", bops_args.config, "Config file")->required();
  bops->add_option("--target", bops_args.target_file, "Target config file");
  bops->add_option("--target-op", bops_args.target_op, "Homogeneous target operation index");
  bops->add_option("--target-ratio", bops_args.target_ratio, "Homogeneous target width ratio");
  bops->add_option("--memory", bops_args.memory, "Memory fetch cost: auto, always, never")
      ->check(CLI::IsMember({"auto", "always", "never"}));

  int instances = 100;
  auto* oracle = app.add_subcommand("oracle-check", "Verify gradients against finite differences");
  oracle->add_option("--instances", instances, "Random instances per family")
      ->check(CLI::PositiveNumber);

  std::string sample_arch, sample_alpha;
  int sample_count = 10;
  auto* sample = app.add_subcommand("sample", "Draw configurations from an alpha file");
  sample->add_option("arch", sample_arch, "Architecture file")->required();
  sample->add_option("alpha", sample_alpha, "Alpha file")->required();
  sample->add_option("-n,--count", sample_count, "Number of draws")->check(CLI::NonNegativeNumber);

  for (auto* sub : {search, grid, bops, oracle, sample}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*search) return cmd_search(spec_path, g, out);
    if (*grid) return cmd_grid(grid_spec, g, out);
    if (*bops) return cmd_bops(bops_args, out);
    if (*oracle) return cmd_oracle_check(instances, g, out);
    if (*sample) return cmd_sample(sample_arch, sample_alpha, sample_count, g, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dnas

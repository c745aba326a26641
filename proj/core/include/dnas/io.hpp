#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/data.hpp"
#include "dnas/dist.hpp"
#include "dnas/grid.hpp"
#include "dnas/search.hpp"

namespace dnas {

// All readers are strict: unknown keys are rejected with ConfigError.
// Schemas are documented in docs/formats.md.

ArchitectureSpec parse_architecture(const std::string& json_text);
ArchitectureSpec load_architecture(const std::filesystem::path& path);

AlphaParams parse_alpha(const std::string& json_text);
AlphaParams load_alpha(const std::filesystem::path& path);
std::string alpha_to_json_text(const AlphaParams& alpha);

/// {"id": "..."}, {"layers": [[counts], ...]} or {"widths": [filters, ...]}.
NetworkConfig parse_config(const std::string& json_text);
NetworkConfig load_config(const std::filesystem::path& path);

/// How the complexity target is named in files: a homogeneous operation
/// index, a homogeneous width ratio, or an explicit config id.
struct TargetSpec {
  std::optional<std::size_t> op;
  std::optional<double> ratio;
  std::optional<std::string> id;

  NetworkConfig resolve(const ArchitectureSpec& arch) const;
};

struct DatasetSource {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::filesystem::path> csv;
  double validation_fraction = 0.2;
};

Dataset load_dataset(const DatasetSource& source, const ArchitectureSpec& arch,
                     std::uint64_t seed);

struct GridSpec {
  /// Config ids; empty with `all` set enumerates the whole space.
  std::vector<std::string> configs;
  bool all = false;
  int patience = 15;
  int max_epochs = 60;
  bool same_seed_repeats = false;
  double level = 0.6827;
};

struct InterpSpec {
  std::optional<std::filesystem::path> table;
  std::vector<double> ratios = default_width_ratios();
  int sessions = 5;
};

struct ExperimentSpec {
  std::filesystem::path architecture;
  Algorithm algorithm = Algorithm::Quant;
  std::uint64_t seed = 1;
  int repeats = 3;
  std::filesystem::path output = "out";
  DatasetSource dataset;
  SearchSettings search;
  std::optional<TargetSpec> target;
  std::optional<double> initial_prob;
  GridSpec grid;
  InterpSpec interp;
};

/// Relative paths inside the spec resolve against the spec file's directory.
ExperimentSpec parse_experiment(const std::string& json_text,
                                const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment(const std::filesystem::path& path);

/// Grid settings derived from an experiment spec.
GridSettings grid_settings(const ExperimentSpec& spec);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace dnas

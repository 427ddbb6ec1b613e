#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fednb/data.hpp"
#include "fednb/governance.hpp"
#include "fednb/partition.hpp"
#include "fednb/weight_learning.hpp"

namespace fednb {

enum class Proposal { C, B, E, A };

std::string_view to_string(Proposal p) noexcept;
Proposal parse_proposal(std::string_view s);

struct DataSource {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  std::string name = "synthetic";
  SynthSpec synth;
  std::filesystem::path csv;
  std::filesystem::path schema;
};

// Everything one grid run depends on. Defaults are the reference grid:
// seed 42, 5 repetitions, seven alpha levels, 60/20/20 split, lambda 0.10,
// delta 0.05, 500 iterations from 5 starts.
struct ExperimentConfig {
  DataSource source;
  std::vector<NodeProfile> profiles;
  std::vector<double> alphas = default_alphas();
  int reps = 5;
  std::uint64_t seed = 42;
  SplitConfig split;
  OptimizerConfig optimizer;
  std::vector<Proposal> proposals = {Proposal::C, Proposal::B, Proposal::E, Proposal::A};
  int jobs = 1;
  // Wall-clock runtime is written to the results only when enabled, since it
  // breaks byte-identical reruns.
  bool timing = false;
  int plot_feature = 0;

  static std::vector<double> default_alphas() { return {0.05, 0.10, 0.20, 0.30, 0.50, 0.70, 1.00}; }

  std::size_t k() const noexcept { return profiles.size(); }
  bool has(Proposal p) const;
  // True when every grid parameter equals the reference value.
  bool uses_reference_parameters() const;
  // Throws Error(config).
  void validate() const;
};

// Plain text, one "key = value" per line, '#' comments. Relative paths are
// resolved against base_dir. See README for the key list.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>",
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(const ExperimentConfig& config, std::ostream& out);

// Overrides accepted from the command line: seed, alphas, reps, lambda, delta.
// Throws Error(config) for unknown keys or ill-typed values.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

}  // namespace fednb

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fednb/config.hpp"
#include "fednb/data.hpp"
#include "fednb/evaluation.hpp"
#include "fednb/local_model.hpp"
#include "fednb/mog_server.hpp"
#include "fednb/partition.hpp"
#include "fednb/weight_learning.hpp"

namespace fednb {

struct ExperimentRecord {
  std::string dataset;
  double alpha = 0.0;
  int rep = 0;
  Proposal proposal = Proposal::C;
  double f1_macro = 0.0;
  double anll = 0.0;
  double jsd = 0.0;
  std::vector<double> weights;            // empty for C
  std::optional<double> mcnemar_p_vs_b;   // A only, when B also ran
  double runtime_ms = 0.0;
};

// Per-cell side information needed by the verification protocol.
struct CellDiagnostics {
  std::size_t alpha_index = 0;
  double alpha = 0.0;
  int rep = 0;
  std::uint64_t cell_seed = 0;
  PartitionReport partition;
  std::vector<std::size_t> node_sizes;
  int partition_attempts = 1;
  std::size_t test_rows = 0;
  std::optional<OptimizationTrace> trace;
  std::optional<McNemarResult> mcnemar;
  std::size_t invalid_scores = 0;  // mixture scores that were neither finite nor the sentinel
};

// The grid parameters as actually used, stored next to the results.
struct RunEcho {
  std::uint64_t seed = 0;
  int reps = 0;
  std::vector<double> alphas;
  std::vector<std::string> proposals;
  double lambda = 0.0;
  double delta = 0.0;
  int max_iters = 0;
  int n_starts = 0;
  std::array<double, 3> split{};
  std::size_t k = 0;

  static RunEcho of(const ExperimentConfig& config);
  friend bool operator==(const RunEcho&, const RunEcho&) = default;
};

// Loaded data plus the category map built from it.
struct PreparedData {
  Dataset data;
  CategoryMap categories;
};

PreparedData prepare_data(const ExperimentConfig& config);

struct CellResult {
  std::vector<ExperimentRecord> records;
  CellDiagnostics diagnostics;
  std::vector<HybridModel> node_models;
};

// Seeds. The split and partition streams depend on (seed, rep) only, so the
// alpha levels of one repetition partition the same shuffled rows with the
// same uniforms; everything else uses the per-cell seed.
std::uint64_t cell_seed(std::uint64_t master, std::size_t alpha_index, int rep);
std::uint64_t split_seed(std::uint64_t master, int rep);
std::uint64_t partition_seed(std::uint64_t master, int rep);

CellResult run_cell(const ExperimentConfig& config, const PreparedData& data, std::size_t alpha_index, int rep);
CellResult run_cell(const ExperimentConfig& config, std::size_t alpha_index, int rep);

struct GridResult {
  std::vector<ExperimentRecord> records;  // ordered by (alpha, rep, proposal)
  std::vector<CellDiagnostics> cells;     // ordered by (alpha, rep)
  RunEcho echo;
  // Node models of the representative cell (largest alpha, rep 0), for the
  // density plot.
  std::vector<HybridModel> plot_models;
};

GridResult run_grid(const ExperimentConfig& config);
GridResult run_grid(const ExperimentConfig& config, const PreparedData& data);

// ---------------------------------------------------------------- verification

struct VerificationCheck {
  std::string name;
  bool passed = false;
  std::string message;
};

struct VerificationReport {
  std::vector<VerificationCheck> checks;  // always 15, in protocol order
  std::size_t passed_count = 0;

  bool all_passed() const noexcept { return passed_count == checks.size(); }
};

struct VerifyContext {
  ExperimentConfig config;
  RunEcho echo;
  // Re-runs one cell; used by the reproducibility check.
  std::function<std::vector<ExperimentRecord>(std::size_t alpha_index, int rep)> rerun;
  // Allowance for weights stored at reduced precision (results CSV).
  double weight_sum_tolerance = 1e-9;
};

VerificationReport verify(const std::vector<ExperimentRecord>& records, const std::vector<CellDiagnostics>& cells,
                          const VerifyContext& context);

void write_report(const VerificationReport& report, std::ostream& out);

// ---------------------------------------------------------------- files

// Header: dataset,alpha,rep,proposal,f1_macro,anll,jsd,w_1..w_K,mcnemar_p_vs_B,runtime_ms
void emit_results_csv(const std::vector<ExperimentRecord>& records, std::size_t k, std::ostream& out);
void emit_results_csv(const std::vector<ExperimentRecord>& records, std::size_t k, const std::filesystem::path& path);
std::vector<ExperimentRecord> load_results_csv(const std::filesystem::path& path);
std::vector<ExperimentRecord> parse_results_csv(std::istream& in, const std::string& source = "<results>");
// One CSV line (no newline) in the emitted format.
std::string format_record(const ExperimentRecord& record, std::size_t k);

void write_diagnostics(const GridResult& grid, std::ostream& out);
void write_diagnostics(const GridResult& grid, const std::filesystem::path& path);
struct LoadedDiagnostics {
  RunEcho echo;
  std::vector<CellDiagnostics> cells;
};
LoadedDiagnostics load_diagnostics(const std::filesystem::path& path);
LoadedDiagnostics parse_diagnostics(std::istream& in, const std::string& source = "<diagnostics>");

struct PlotFiles {
  std::filesystem::path gradient;
  std::filesystem::path alignment;
  std::filesystem::path weights_by_alpha;
  std::filesystem::path densities;
};

inline constexpr std::size_t kDensityPoints = 200;
inline constexpr double kDensityHalfWidth = 6.0;  // in standard deviations

// Tab separated plot data: gradient curves, alignment bars, weight
// trajectories and per-node Gaussian density profiles.
PlotFiles emit_plot_data(const std::vector<ExperimentRecord>& records, const ExperimentConfig& config,
                         const std::vector<HybridModel>& density_models, const std::filesystem::path& out_dir);

}  // namespace fednb

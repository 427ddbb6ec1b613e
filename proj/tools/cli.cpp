#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fednb/config.hpp"
#include "fednb/error.hpp"
#include "fednb/experiment.hpp"
#include "fednb/local_model.hpp"
#include "fednb/partition.hpp"

namespace fednb::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kResultsFile = "results.csv";
constexpr const char* kDiagnosticsFile = "diagnostics.json";
constexpr const char* kConfigEcho = "config.cfg";
constexpr const char* kReportFile = "verification.txt";
constexpr const char* kPlotDir = "plots";

// CSV weights carry 6 decimals, so a K-vector may be off by K * 5e-7.
double csv_weight_tolerance(std::size_t k) { return 1e-9 + static_cast<double>(k) * 5e-7; }

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_args(CLI::App& cmd, ConfigArgs& args, bool required) {
  auto* opt = cmd.add_option("--config", args.path, "experiment config file");
  if (required) opt->required();
  cmd.add_option("--set", args.overrides, "override key=value (seed, alphas, reps, lambda, delta)");
}

ExperimentConfig load_with_overrides(const ConfigArgs& args) {
  auto config = load_config(args.path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::config, "override '" + kv + "' is not key=value");
    apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

std::size_t alpha_index_checked(const ExperimentConfig& config, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= config.alphas.size()) {
    throw Error(ErrorKind::config, "alpha index " + std::to_string(index) + " out of range");
  }
  return static_cast<std::size_t>(index);
}

VerifyContext make_context(const ExperimentConfig& config, const RunEcho& echo,
                           std::shared_ptr<const PreparedData> prepared, double tolerance) {
  VerifyContext ctx;
  ctx.config = config;
  ctx.echo = echo;
  ctx.weight_sum_tolerance = tolerance;
  auto cache = std::make_shared<std::shared_ptr<const PreparedData>>(std::move(prepared));
  ctx.rerun = [config, cache](std::size_t alpha_index, int rep) {
    if (!*cache) *cache = std::make_shared<const PreparedData>(prepare_data(config));
    return run_cell(config, **cache, alpha_index, rep).records;
  };
  return ctx;
}

int cmd_partition(const ConfigArgs& args, const std::string& out_dir, int alpha_index, int rep, std::ostream& out) {
  const auto config = load_with_overrides(args);
  const auto ai = alpha_index_checked(config, alpha_index);
  const auto prepared = prepare_data(config);
  SplitConfig split_config = config.split;
  split_config.seed = split_seed(config.seed, rep);
  const auto split = stratified_split(prepared.data, split_config);
  const auto partition =
      dirichlet_partition(split.train.labels, config.k(), config.alphas[ai], partition_seed(config.seed, rep));
  const auto rpt = report(partition, split.train.labels, prepared.data.n_classes());

  fs::create_directories(out_dir);
  auto file = open_out(fs::path(out_dir) / "partition.tsv");
  file << "node\tsize";
  for (int c = 0; c < prepared.data.n_classes(); ++c) file << "\tclass_" << prepared.categories.labels().at(static_cast<std::size_t>(c));
  file << '\n';
  for (std::size_t k = 0; k < config.k(); ++k) {
    file << config.profiles[k].name() << '\t' << partition.node_indices[k].size();
    for (auto n : rpt.per_node_class_counts.row(k)) file << '\t' << n;
    file << '\n';
  }
  out << "alpha = " << config.alphas[ai] << ", rep = " << rep << ", jsd = " << rpt.jsd
      << ", attempts = " << partition.attempts << '\n';
  return kExitOk;
}

int cmd_train(const ConfigArgs& args, const std::string& out_dir, int alpha_index, int rep, std::ostream& out) {
  const auto config = load_with_overrides(args);
  const auto ai = alpha_index_checked(config, alpha_index);
  const auto cell = run_cell(config, prepare_data(config), ai, rep);
  fs::create_directories(out_dir);
  for (std::size_t k = 0; k < cell.node_models.size(); ++k) {
    const auto path = fs::path(out_dir) / ("node_" + std::to_string(k + 1) + ".model");
    save_model(cell.node_models[k], path);
    out << "wrote " << path.string() << '\n';
  }
  emit_results_csv(cell.records, config.k(), fs::path(out_dir) / "cell.csv");
  emit_results_csv(cell.records, config.k(), out);
  return kExitOk;
}

int cmd_run_grid(const ConfigArgs& args, const std::string& out_dir, std::optional<int> jobs, std::ostream& out) {
  auto config = load_with_overrides(args);
  if (jobs) {
    config.jobs = *jobs;
    config.validate();
  }
  auto prepared = std::make_shared<const PreparedData>(prepare_data(config));
  const auto grid = run_grid(config, *prepared);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  emit_results_csv(grid.records, config.k(), dir / kResultsFile);
  write_diagnostics(grid, dir / kDiagnosticsFile);
  {
    auto echo = open_out(dir / kConfigEcho);
    write_config(config, echo);
  }
  emit_plot_data(grid.records, config, grid.plot_models, dir / kPlotDir);

  // verify what was written, as a later `verify` would see it
  const auto records = load_results_csv(dir / kResultsFile);
  const auto diagnostics = load_diagnostics(dir / kDiagnosticsFile);
  const auto ctx = make_context(config, diagnostics.echo, prepared, csv_weight_tolerance(config.k()));
  const auto report = verify(records, diagnostics.cells, ctx);
  {
    auto file = open_out(dir / kReportFile);
    write_report(report, file);
  }
  out << grid.records.size() << " records written to " << (dir / kResultsFile).string() << '\n';
  write_report(report, out);
  return report.all_passed() ? kExitOk : kExitVerificationFailed;
}

int cmd_verify(const std::string& results_dir, const std::string& config_path, std::ostream& out) {
  const fs::path dir(results_dir);
  const auto records = load_results_csv(dir / kResultsFile);
  const auto diagnostics = load_diagnostics(dir / kDiagnosticsFile);
  const auto config = load_config(config_path.empty() ? dir / kConfigEcho : fs::path(config_path));
  const auto ctx = make_context(config, diagnostics.echo, nullptr, csv_weight_tolerance(config.k()));
  const auto report = verify(records, diagnostics.cells, ctx);
  write_report(report, out);
  return report.all_passed() ? kExitOk : kExitVerificationFailed;
}

int cmd_emit_plots(const std::string& results_dir, const std::string& config_path, std::string out_dir,
                   std::ostream& out) {
  const fs::path dir(results_dir);
  const auto records = load_results_csv(dir / kResultsFile);
  const auto config = load_config(config_path.empty() ? dir / kConfigEcho : fs::path(config_path));
  if (out_dir.empty()) out_dir = (dir / kPlotDir).string();
  // density curves come from the node models of the largest-alpha, rep-0 cell
  const auto cell = run_cell(config, config.alphas.size() - 1, 0);
  const auto files = emit_plot_data(records, config, cell.node_models, out_dir);
  for (const auto& p : {files.gradient, files.alignment, files.weights_by_alpha, files.densities}) {
    out << "wrote " << p.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Governance-weighted federated Naive Bayes experiments", "fednb"};
  app.require_subcommand(1);

  ConfigArgs config_args;
  std::string out_dir;
  int alpha_index = 0;
  int rep = 0;
  std::optional<int> jobs;
  std::string results_dir;

  auto* partition = app.add_subcommand("partition", "split and Dirichlet-partition one cell; write node class counts");
  add_config_args(*partition, config_args, true);
  partition->add_option("--out", out_dir, "output directory")->required();
  partition->add_option("--alpha-index", alpha_index, "index into the configured alphas");
  partition->add_option("--rep", rep, "repetition")->check(CLI::NonNegativeNumber);

  auto* train = app.add_subcommand("train", "fit the node models of one cell and evaluate every proposal");
  add_config_args(*train, config_args, true);
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--alpha-index", alpha_index, "index into the configured alphas");
  train->add_option("--rep", rep, "repetition")->check(CLI::NonNegativeNumber);

  auto* grid = app.add_subcommand("run-grid", "run the full grid, write results, plot data and verification report");
  add_config_args(*grid, config_args, true);
  grid->add_option("--out", out_dir, "output directory")->required();
  grid->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* verify_cmd = app.add_subcommand("verify", "re-run the 15 checks on a results directory");
  verify_cmd->add_option("--results", results_dir, "directory written by run-grid")->required();
  verify_cmd->add_option("--config", config_args.path, "config (default: the echo in the results directory)");

  auto* plots = app.add_subcommand("emit-plots", "write plot data for a results directory");
  plots->add_option("--results", results_dir, "directory written by run-grid")->required();
  plots->add_option("--config", config_args.path, "config (default: the echo in the results directory)");
  plots->add_option("--out", out_dir, "output directory (default: <results>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*partition) return cmd_partition(config_args, out_dir, alpha_index, rep, out);
    if (*train) return cmd_train(config_args, out_dir, alpha_index, rep, out);
    if (*grid) return cmd_run_grid(config_args, out_dir, jobs, out);
    if (*verify_cmd) return cmd_verify(results_dir, config_args.path, out);
    if (*plots) return cmd_emit_plots(results_dir, config_args.path, out_dir, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    // a bad config is a usage problem, except for commands that read results
    if (e.kind() == ErrorKind::config && !*verify_cmd && !*plots) {
      err << '\n' << app.help();
      return kExitUsage;
    }
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace fednb::cli

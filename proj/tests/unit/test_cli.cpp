#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fednb/experiment.hpp"
#include "helpers.hpp"

using namespace fednb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "fednb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string config_path() { return (test::source_dir() / "configs" / "synth.cfg").string(); }

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("run-grid writes every artifact and verifies") {
  const auto dir = test::temp_dir("cli_grid");
  const auto r = run({"run-grid", "--config", config_path(), "--out", dir.string()});
  CHECK_MESSAGE(r.code == cli::kExitOk, r.out << r.err);
  CHECK(line_count(dir / "results.csv") == 141);
  CHECK(fs::exists(dir / "diagnostics.json"));
  CHECK(fs::exists(dir / "config.cfg"));
  CHECK(fs::exists(dir / "verification.txt"));
  CHECK(fs::exists(dir / "plots" / "gradient.tsv"));
  CHECK(r.out.find("15/15 passed") != std::string::npos);

  const auto v = run({"verify", "--results", dir.string()});
  CHECK(v.code == cli::kExitOk);
  CHECK(v.out.find("15/15 passed") != std::string::npos);

  const auto p = run({"emit-plots", "--results", dir.string(), "--out", (dir / "replot").string()});
  CHECK(p.code == cli::kExitOk);
  CHECK(line_count(dir / "replot" / "densities.tsv") == line_count(dir / "plots" / "densities.tsv"));

  // one bad weight in a cell other than the first
  std::ifstream in(dir / "results.csv");
  std::stringstream text;
  text << in.rdbuf();
  in.close();
  auto records = parse_results_csv(text);
  records.back().weights[0] += 0.1;
  emit_results_csv(records, 3, dir / "results.csv");
  const auto bad = run({"verify", "--results", dir.string()});
  CHECK(bad.code == cli::kExitVerificationFailed);
  CHECK(bad.out.find("check.weights_sum_to_one=fail") != std::string::npos);
}

TEST_CASE("overrides change the grid") {
  const auto dir = test::temp_dir("cli_override");
  const auto r = run({"run-grid", "--config", config_path(), "--out", dir.string(), "--set", "reps=1"});
  CHECK(r.code == cli::kExitOk);
  CHECK(line_count(dir / "results.csv") == 29);
}

TEST_CASE("usage and error exit codes") {
  const auto dir = test::temp_dir("cli_errors");
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"run-grid", "--out", dir.string()}).code == cli::kExitUsage);
  CHECK(run({"run-grid", "--config", (dir / "missing.cfg").string(), "--out", dir.string()}).code == cli::kExitUsage);
  CHECK(run({"run-grid", "--config", config_path(), "--out", dir.string(), "--set", "bogus=1"}).code ==
        cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"verify", "--results", (dir / "empty").string()}).code == cli::kExitError);
  CHECK(run({"run-grid", "--help"}).code == cli::kExitOk);
}

TEST_CASE("partition and train subcommands") {
  const auto dir = test::temp_dir("cli_cell");
  const auto p = run({"partition", "--config", config_path(), "--out", dir.string(), "--alpha-index", "0"});
  CHECK(p.code == cli::kExitOk);
  CHECK(p.out.find("jsd = ") != std::string::npos);
  CHECK(line_count(dir / "partition.tsv") == 4);

  const auto t = run({"train", "--config", config_path(), "--out", dir.string(), "--alpha-index", "6", "--rep", "1"});
  CHECK(t.code == cli::kExitOk);
  for (int i = 1; i <= 3; ++i) CHECK(fs::exists(dir / ("node_" + std::to_string(i) + ".model")));
  CHECK(line_count(dir / "cell.csv") == 5);
  CHECK(run({"train", "--config", config_path(), "--out", dir.string(), "--alpha-index", "7"}).code ==
        cli::kExitUsage);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <fstream>
#include <sstream>

#include "fednb/config.hpp"
#include "fednb/error.hpp"
#include "fednb/experiment.hpp"
#include "fednb/governance.hpp"
#include "helpers.hpp"

using namespace fednb;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.source.synth.n_rows = 900;
  c.source.synth.n_classes = 3;
  c.source.synth.separation = 2.0;
  c.source.synth.node_noise = {0.0, 0.2, 0.5};
  c.profiles = reference_profiles();
  c.alphas = {0.1, 1.0};
  c.reps = 2;
  return c;
}

std::string csv_text(const std::vector<ExperimentRecord>& records, std::size_t k) {
  std::ostringstream out;
  emit_results_csv(records, k, out);
  return out.str();
}

VerifyContext context_for(const ExperimentConfig& c, const GridResult& g) {
  VerifyContext ctx;
  ctx.config = c;
  ctx.echo = g.echo;
  ctx.rerun = [c](std::size_t a, int r) { return run_cell(c, a, r).records; };
  return ctx;
}

}  // namespace

TEST_CASE("grid shape, ordering and determinism") {
  const auto c = small_config();
  const auto g = run_grid(c);
  REQUIRE(g.records.size() == 2 * 2 * 4);
  CHECK(g.cells.size() == 4);
  CHECK(g.records[0].alpha == 0.1);
  CHECK(g.records[0].rep == 0);
  CHECK(g.records[0].proposal == Proposal::C);
  CHECK(g.records[3].proposal == Proposal::A);
  CHECK(g.records[4].rep == 1);
  CHECK(g.records.back().alpha == 1.0);
  for (const auto& r : g.records) {
    CHECK(r.f1_macro >= 0.0);
    CHECK(r.f1_macro <= 1.0);
    CHECK(r.anll >= 0.0);
    CHECK(r.weights.size() == (r.proposal == Proposal::C ? 0u : 3u));
    CHECK(r.mcnemar_p_vs_b.has_value() == (r.proposal == Proposal::A));
    CHECK(r.runtime_ms == 0.0);
  }
  CHECK(g.plot_models.size() == 3);
  CHECK(csv_text(run_grid(c).records, 3) == csv_text(g.records, 3));

  auto threaded = c;
  threaded.jobs = 3;
  CHECK(csv_text(run_grid(threaded).records, 3) == csv_text(g.records, 3));
}

TEST_CASE("fedavg on equal node sizes and the C record") {
  auto c = small_config();
  c.proposals = {Proposal::B};
  c.alphas = {1000.0};
  c.reps = 1;
  c.source.synth.n_rows = 1500;
  c.source.synth.class_weights = {1.0, 1.0, 1.0};
  const auto cell = run_cell(c, 0, 0);
  REQUIRE(cell.records.size() == 1);
  const auto sizes = cell.diagnostics.node_sizes;
  if (sizes[0] == sizes[1] && sizes[1] == sizes[2]) {
    for (double w : cell.records[0].weights) CHECK(w == doctest::Approx(1.0 / 3.0));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(cell.records[0].weights[i] ==
          doctest::Approx(static_cast<double>(sizes[i]) / (sizes[0] + sizes[1] + sizes[2])));
  }
}

TEST_CASE("results csv format") {
  const auto c = small_config();
  const auto g = run_grid(c);
  const auto text = csv_text(g.records, 3);
  std::istringstream lines(text);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "dataset,alpha,rep,proposal,f1_macro,anll,jsd,w_1,w_2,w_3,mcnemar_p_vs_B,runtime_ms");
  std::string first;
  std::getline(lines, first);
  CHECK(first.find(",C,") != std::string::npos);
  CHECK(first.find(",,,,") != std::string::npos);  // empty weights and p-value
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(g.records.size() + 1));

  std::istringstream in(text);
  const auto back = parse_results_csv(in);
  CHECK(csv_text(back, 3) == text);

  std::istringstream bad("dataset,alpha\n");
  CHECK_THROWS_AS(parse_results_csv(bad), Error);
}

TEST_CASE("diagnostics round trip") {
  const auto c = small_config();
  const auto g = run_grid(c);
  std::stringstream buf;
  write_diagnostics(g, buf);
  const auto d = parse_diagnostics(buf);
  CHECK(d.echo == g.echo);
  REQUIRE(d.cells.size() == g.cells.size());
  CHECK(d.cells[1].partition.jsd == g.cells[1].partition.jsd);
  CHECK(d.cells[1].partition.per_node_class_counts == g.cells[1].partition.per_node_class_counts);
  CHECK(d.cells[1].trace->starts[2].final == g.cells[1].trace->starts[2].final);
  CHECK(d.cells[1].mcnemar->p_value == g.cells[1].mcnemar->p_value);
}

TEST_CASE("verification: clean run and single-check corruptions") {
  const auto c = small_config();
  const auto g = run_grid(c);
  const auto ctx = context_for(c, g);
  const auto clean = verify(g.records, g.cells, ctx);
  REQUIRE(clean.checks.size() == 15);
  for (const auto& check : clean.checks) CHECK_MESSAGE(check.passed, check.name << ": " << check.message);

  auto failed = [&](const std::vector<ExperimentRecord>& records) {
    std::vector<std::string> names;
    for (const auto& check : verify(records, g.cells, ctx).checks) {
      if (!check.passed) names.push_back(check.name);
    }
    return names;
  };
  auto tampered = g.records;
  tampered.back().weights[0] += 0.1;
  CHECK(failed(tampered) == std::vector<std::string>{"weights_sum_to_one"});

  tampered = g.records;
  tampered.erase(tampered.end() - 2);
  CHECK(failed(tampered) == std::vector<std::string>{"grid_completeness"});

  tampered = g.records;
  tampered.back().anll = std::nan("");
  CHECK(failed(tampered) == std::vector<std::string>{"no_nan_inf"});

  tampered = g.records;
  tampered.back().weights = {0.02, 0.49, 0.49};
  CHECK(failed(tampered) == std::vector<std::string>{"weight_floor"});

  auto other = ctx;
  other.echo.seed = 43;
  CHECK_FALSE(verify(g.records, g.cells, other).checks[12].passed);

  std::ostringstream report;
  write_report(clean, report);
  CHECK(report.str().find("passed_count=15") != std::string::npos);
  CHECK(report.str().find("check.grid_completeness=pass") != std::string::npos);
}

TEST_CASE("plot data") {
  const auto c = small_config();
  const auto g = run_grid(c);
  const auto dir = test::temp_dir("plots");
  const auto files = emit_plot_data(g.records, c, g.plot_models, dir);

  std::ifstream gradient(files.gradient);
  std::string line;
  int rows = -1;
  while (std::getline(gradient, line)) ++rows;
  CHECK(rows == static_cast<int>(c.alphas.size() * c.proposals.size()));

  std::ifstream alignment(files.alignment);
  std::getline(alignment, line);
  const double expected[] = {0.667, 0.261, 0.071};
  for (double e : expected) {
    std::getline(alignment, line);
    const auto fields = [&] {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string x;
      while (std::getline(ss, x, '\t')) f.push_back(x);
      return f;
    }();
    CHECK(std::abs(std::stod(fields.at(2)) - e) <= 0.002);
  }

  // each density curve integrates to about one
  std::ifstream densities(files.densities);
  std::getline(densities, line);
  std::map<std::pair<std::string, int>, std::vector<std::pair<double, double>>> curves;
  std::string node;
  int cls = 0;
  double z = 0.0, d = 0.0;
  while (densities >> node >> cls >> z >> d) curves[{node, cls}].emplace_back(z, d);
  CHECK_FALSE(curves.empty());
  for (const auto& [key, pts] : curves) {
    CHECK(pts.size() == kDensityPoints);
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) area += 0.5 * (pts[i].second + pts[i - 1].second) * (pts[i].first - pts[i - 1].first);
    CHECK(std::abs(area - 1.0) <= 0.01);
  }
}

TEST_CASE("a failing cell names alpha and rep") {
  auto c = small_config();
  c.source.synth.n_rows = 6;
  c.source.synth.n_classes = 3;
  try {
    run_grid(c);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    CHECK(std::string(e.what()).find("rep") != std::string::npos);
  }
}

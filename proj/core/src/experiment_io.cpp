#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <json.hpp>

#include "fednb/error.hpp"
#include "fednb/experiment.hpp"
#include "fednb/governance.hpp"
#include "fednb/text.hpp"

namespace fednb {

using nlohmann::json;

namespace {

json to_json(const RunEcho& e) {
  return {{"seed", e.seed},         {"reps", e.reps},         {"alphas", e.alphas},
          {"proposals", e.proposals}, {"lambda", e.lambda},   {"delta", e.delta},
          {"max_iters", e.max_iters}, {"n_starts", e.n_starts}, {"split", e.split},
          {"k", e.k}};
}

RunEcho echo_from_json(const json& j) {
  RunEcho e;
  e.seed = j.at("seed").get<std::uint64_t>();
  e.reps = j.at("reps").get<int>();
  e.alphas = j.at("alphas").get<std::vector<double>>();
  e.proposals = j.at("proposals").get<std::vector<std::string>>();
  e.lambda = j.at("lambda").get<double>();
  e.delta = j.at("delta").get<double>();
  e.max_iters = j.at("max_iters").get<int>();
  e.n_starts = j.at("n_starts").get<int>();
  e.split = j.at("split").get<std::array<double, 3>>();
  e.k = j.at("k").get<std::size_t>();
  return e;
}

json counts_to_json(const Matrix<std::size_t>& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<std::size_t>(row.begin(), row.end()));
  }
  return rows;
}

Matrix<std::size_t> counts_from_json(const json& j) {
  Matrix<std::size_t> m;
  if (j.empty()) return m;
  m.set_cols(j.at(0).size());
  for (const auto& row : j) {
    const auto v = row.get<std::vector<std::size_t>>();
    if (v.size() != m.cols()) throw Error(ErrorKind::parse, "ragged class-count matrix");
    m.append_row(v);
  }
  return m;
}

json to_json(const CellDiagnostics& c) {
  json j = {{"alpha_index", c.alpha_index},
            {"alpha", c.alpha},
            {"rep", c.rep},
            {"cell_seed", c.cell_seed},
            {"jsd", c.partition.jsd},
            {"per_node_class_counts", counts_to_json(c.partition.per_node_class_counts)},
            {"node_sizes", c.node_sizes},
            {"partition_attempts", c.partition_attempts},
            {"test_rows", c.test_rows},
            {"invalid_scores", c.invalid_scores}};
  if (c.trace) {
    json starts = json::array();
    for (const auto& s : c.trace->starts) {
      starts.push_back({{"label", s.label},
                        {"initial", s.initial},
                        {"final", s.final},
                        {"initial_objective", s.initial_objective},
                        {"final_objective", s.final_objective},
                        {"iterations", s.iterations}});
    }
    j["trace"] = {{"starts", starts}, {"chosen", c.trace->chosen}, {"evaluations", c.trace->evaluations}};
  }
  if (c.mcnemar) {
    const auto& m = *c.mcnemar;
    j["mcnemar"] = {{"b", m.b}, {"c", m.c}, {"chi2", m.chi2}, {"p_value", m.p_value}, {"significant", m.significant}};
  }
  return j;
}

CellDiagnostics cell_from_json(const json& j) {
  CellDiagnostics c;
  c.alpha_index = j.at("alpha_index").get<std::size_t>();
  c.alpha = j.at("alpha").get<double>();
  c.rep = j.at("rep").get<int>();
  c.cell_seed = j.at("cell_seed").get<std::uint64_t>();
  c.partition.jsd = j.at("jsd").get<double>();
  c.partition.per_node_class_counts = counts_from_json(j.at("per_node_class_counts"));
  c.node_sizes = j.at("node_sizes").get<std::vector<std::size_t>>();
  c.partition_attempts = j.at("partition_attempts").get<int>();
  c.test_rows = j.at("test_rows").get<std::size_t>();
  c.invalid_scores = j.at("invalid_scores").get<std::size_t>();
  if (j.contains("trace")) {
    const auto& t = j.at("trace");
    OptimizationTrace trace;
    for (const auto& s : t.at("starts")) {
      StartRecord r;
      r.label = s.at("label").get<std::string>();
      r.initial = s.at("initial").get<std::vector<double>>();
      r.final = s.at("final").get<std::vector<double>>();
      r.initial_objective = s.at("initial_objective").get<double>();
      r.final_objective = s.at("final_objective").get<double>();
      r.iterations = s.at("iterations").get<int>();
      trace.starts.push_back(std::move(r));
    }
    trace.chosen = t.at("chosen").get<std::size_t>();
    trace.evaluations = t.at("evaluations").get<std::size_t>();
    c.trace = std::move(trace);
  }
  if (j.contains("mcnemar")) {
    const auto& m = j.at("mcnemar");
    c.mcnemar = McNemarResult{m.at("b").get<std::size_t>(), m.at("c").get<std::size_t>(), m.at("chi2").get<double>(),
                              m.at("p_value").get<double>(), m.at("significant").get<bool>()};
  }
  return c;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double sd() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sum_sq - n * m * m) / (n - 1)));
  }
};

}  // namespace

void write_diagnostics(const GridResult& grid, std::ostream& out) {
  json cells = json::array();
  for (const auto& c : grid.cells) cells.push_back(to_json(c));
  const json doc = {{"format", "fednb-diagnostics"}, {"version", 1}, {"echo", to_json(grid.echo)}, {"cells", cells}};
  out << doc.dump(1) << '\n';
}

void write_diagnostics(const GridResult& grid, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_diagnostics(grid, out);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

LoadedDiagnostics parse_diagnostics(std::istream& in, const std::string& source) {
  try {
    const auto doc = json::parse(in);
    if (doc.value("format", "") != "fednb-diagnostics") throw Error(ErrorKind::parse, source + ": not a diagnostics file");
    LoadedDiagnostics d;
    d.echo = echo_from_json(doc.at("echo"));
    for (const auto& c : doc.at("cells")) d.cells.push_back(cell_from_json(c));
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, source + ": " + e.what());
  }
}

LoadedDiagnostics load_diagnostics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return parse_diagnostics(in, path.string());
}

PlotFiles emit_plot_data(const std::vector<ExperimentRecord>& records, const ExperimentConfig& config,
                         const std::vector<HybridModel>& density_models, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  PlotFiles files{out_dir / "gradient.tsv", out_dir / "alignment.tsv", out_dir / "weights_by_alpha.tsv",
                  out_dir / "densities.tsv"};
  const auto k = config.k();
  using detail::format_fixed6;

  {
    std::map<std::pair<double, Proposal>, std::array<Moments, 3>> acc;
    for (const auto& r : records) {
      auto& m = acc[{r.alpha, r.proposal}];
      m[0].add(r.f1_macro);
      m[1].add(r.anll);
      m[2].add(r.jsd);
    }
    auto out = open_out(files.gradient);
    out << "alpha\tproposal\tf1_mean\tf1_sd\tanll_mean\tanll_sd\tjsd_mean\tn\n";
    for (const auto& [key, m] : acc) {
      out << format_fixed6(key.first) << '\t' << to_string(key.second) << '\t' << format_fixed6(m[0].mean()) << '\t'
          << format_fixed6(m[0].sd()) << '\t' << format_fixed6(m[1].mean()) << '\t' << format_fixed6(m[1].sd())
          << '\t' << format_fixed6(m[2].mean()) << '\t' << m[0].n << '\n';
    }
  }

  {
    std::map<Proposal, std::vector<Moments>> mean_w;
    for (const auto& r : records) {
      if (r.weights.size() != k) continue;
      auto& m = mean_w[r.proposal];
      m.resize(k);
      for (std::size_t i = 0; i < k; ++i) m[i].add(r.weights[i]);
    }
    const auto prior = IccPrior::from_profiles(config.profiles);
    auto out = open_out(files.alignment);
    out << "node\ticc\tprior";
    for (const auto& [p, m] : mean_w) out << "\tw_" << to_string(p);
    out << '\n';
    for (std::size_t i = 0; i < k; ++i) {
      out << config.profiles[i].name() << '\t' << format_fixed6(prior.icc[i]) << '\t'
          << format_fixed6(prior.normalized[i]);
      for (const auto& [p, m] : mean_w) out << '\t' << format_fixed6(m[i].mean());
      out << '\n';
    }
  }

  {
    std::map<double, std::vector<Moments>> acc;
    for (const auto& r : records) {
      if (r.proposal != Proposal::A || r.weights.size() != k) continue;
      auto& m = acc[r.alpha];
      m.resize(k);
      for (std::size_t i = 0; i < k; ++i) m[i].add(r.weights[i]);
    }
    auto out = open_out(files.weights_by_alpha);
    out << "alpha\tnode\tw_mean\tw_sd\n";
    for (const auto& [alpha, m] : acc) {
      for (std::size_t i = 0; i < k; ++i) {
        out << format_fixed6(alpha) << '\t' << config.profiles[i].name() << '\t' << format_fixed6(m[i].mean()) << '\t'
            << format_fixed6(m[i].sd()) << '\n';
      }
    }
  }

  {
    auto out = open_out(files.densities);
    out << "node\tclass\tz\tdensity\n";
    const auto f = static_cast<std::size_t>(config.plot_feature);
    // one curve per node and present class, each over its own mean +- 6 sd
    for (std::size_t node = 0; node < density_models.size(); ++node) {
      const auto& m = density_models[node];
      if (f >= m.n_numerical()) break;
      for (int c = 0; c < m.n_classes; ++c) {
        if (!m.present(c)) continue;
        const auto ci = static_cast<std::size_t>(c);
        const double mu = m.gauss.mean(ci, f);
        const double var = m.gauss.var(ci, f);
        const double sd = std::sqrt(var);
        for (std::size_t i = 0; i < kDensityPoints; ++i) {
          const double z = mu - kDensityHalfWidth * sd +
                           2.0 * kDensityHalfWidth * sd * static_cast<double>(i) / static_cast<double>(kDensityPoints - 1);
          const double d = z - mu;
          const double density = std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
          out << config.profiles.at(node).name() << '\t' << c << '\t' << detail::format_exact(z) << '\t'
              << detail::format_exact(density) << '\n';
        }
      }
    }
  }
  return files;
}

}  // namespace fednb

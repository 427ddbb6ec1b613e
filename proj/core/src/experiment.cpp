#include "fednb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "fednb/error.hpp"
#include "fednb/governance.hpp"
#include "fednb/rng.hpp"
#include "fednb/text.hpp"

namespace fednb {

namespace {

// stream tags for derive_seed
constexpr std::uint64_t kTagData = 0xDA7A;
constexpr std::uint64_t kTagSplit = 0x5B11;
constexpr std::uint64_t kTagPartition = 0x9A27;
constexpr std::uint64_t kTagCell = 0xCE11;
constexpr std::uint64_t kTagDegrade = 0xDE69;
constexpr std::uint64_t kTagOptimizer = 0x0971;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

Matrix<std::size_t> label_counts(const std::vector<Dataset>& local, int n_classes) {
  Matrix<std::size_t> counts(local.size(), static_cast<std::size_t>(n_classes));
  for (std::size_t k = 0; k < local.size(); ++k) {
    for (int y : local[k].labels) ++counts(k, static_cast<std::size_t>(y));
  }
  return counts;
}

}  // namespace

RunEcho RunEcho::of(const ExperimentConfig& c) {
  RunEcho e;
  e.seed = c.seed;
  e.reps = c.reps;
  e.alphas = c.alphas;
  for (auto p : c.proposals) e.proposals.emplace_back(to_string(p));
  e.lambda = c.optimizer.lambda;
  e.delta = c.optimizer.floor_delta;
  e.max_iters = c.optimizer.max_iters;
  e.n_starts = c.optimizer.n_starts;
  e.split = {c.split.train_frac, c.split.val_frac, c.split.test_frac};
  e.k = c.k();
  return e;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t alpha_index, int rep) {
  return derive_seed(master, {kTagCell, alpha_index, static_cast<std::uint64_t>(rep)});
}

std::uint64_t split_seed(std::uint64_t master, int rep) {
  return derive_seed(master, {kTagSplit, static_cast<std::uint64_t>(rep)});
}

std::uint64_t partition_seed(std::uint64_t master, int rep) {
  return derive_seed(master, {kTagPartition, static_cast<std::uint64_t>(rep)});
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  if (config.source.kind == DataSource::Kind::synthetic) {
    const auto& spec = config.source.synth;
    return {synth_generate(spec, derive_seed(config.seed, {kTagData})), synth_category_map(spec)};
  }
  const auto schema = load_schema(config.source.schema);
  auto loaded = load_csv(config.source.csv, schema);
  return {std::move(loaded.dataset), std::move(loaded.categories)};
}

CellResult run_cell(const ExperimentConfig& config, const PreparedData& prepared, std::size_t alpha_index, int rep) {
  const double alpha = config.alphas.at(alpha_index);
  try {
    const auto k = config.k();
    const int n_classes = prepared.data.n_classes();
    const auto seed = cell_seed(config.seed, alpha_index, rep);

    CellResult cell;
    auto& diag = cell.diagnostics;
    diag.alpha_index = alpha_index;
    diag.alpha = alpha;
    diag.rep = rep;
    diag.cell_seed = seed;

    const auto shared_start = std::chrono::steady_clock::now();
    SplitConfig split_config = config.split;
    split_config.seed = split_seed(config.seed, rep);
    const auto split = stratified_split(prepared.data, split_config);
    // categorical codes are refitted on the training split; unseen -> OOD
    const auto remap = CategoryRemap::fit(split.train);
    const auto train = remap.apply(split.train);
    const auto val = remap.apply(split.val);
    const auto test = remap.apply(split.test);
    diag.test_rows = test.rows();

    const auto partition = dirichlet_partition(train.labels, k, alpha, partition_seed(config.seed, rep));
    diag.partition = report(partition, train.labels, n_classes);
    diag.node_sizes = partition.node_sizes();
    diag.partition_attempts = partition.attempts;

    const auto& noise = config.source.synth.node_noise;
    const bool degrade_nodes = config.source.kind == DataSource::Kind::synthetic && !noise.empty();
    const auto feature_std = column_std(train);
    std::vector<Dataset> local(k);
    for (std::size_t node = 0; node < k; ++node) {
      local[node] = subset(train, partition.node_indices[node]);
      if (degrade_nodes && noise[node] > 0.0) {
        local[node] = degrade(local[node], noise[node], feature_std, derive_seed(seed, {kTagDegrade, node}));
      }
    }
    cell.node_models.reserve(k);
    for (const auto& d : local) cell.node_models.push_back(fit_hybrid(d));
    const auto test_scores = NodeScoreTable::build(cell.node_models, test);
    const double shared_ms = elapsed_ms(shared_start);

    std::vector<int> preds_a;
    std::vector<int> preds_b;
    for (const auto proposal : config.proposals) {
      const auto start = std::chrono::steady_clock::now();
      ExperimentRecord rec;
      rec.dataset = config.source.name;
      rec.alpha = alpha;
      rec.rep = rep;
      rec.proposal = proposal;
      rec.jsd = diag.partition.jsd;
      std::vector<int> preds;
      if (proposal == Proposal::C) {
        // pooled, undegraded training split
        const std::vector<HybridModel> central{fit_hybrid(train)};
        const auto central_scores = NodeScoreTable::build(central, test);
        const auto one = WeightVector::uniform(1);
        preds = central_scores.predict(one);
        rec.anll = central_scores.anll(one);
        diag.invalid_scores += central_scores.count_invalid(one);
      } else {
        WeightVector w;
        if (proposal == Proposal::B) {
          w = weights_fedavg(diag.node_sizes);
        } else if (proposal == Proposal::E) {
          w = weights_entropy(label_counts(local, n_classes));
        } else {
          const auto prior = IccPrior::from_profiles(config.profiles);
          const auto val_scores = NodeScoreTable::build(cell.node_models, val);
          OptimizerConfig opt = config.optimizer;
          opt.seed = derive_seed(seed, {kTagOptimizer});
          auto learned = learn_weights_icc(val_scores, prior.normalized, opt);
          w = learned.weights;
          diag.trace = std::move(learned.trace);
        }
        preds = test_scores.predict(w);
        rec.anll = test_scores.anll(w);
        rec.weights.assign(w.values().begin(), w.values().end());
        diag.invalid_scores += test_scores.count_invalid(w);
      }
      rec.f1_macro = f1_macro(test.labels, preds, n_classes);
      if (config.timing) rec.runtime_ms = elapsed_ms(start) + (proposal == Proposal::C ? 0.0 : shared_ms);
      if (proposal == Proposal::A) preds_a = preds;
      if (proposal == Proposal::B) preds_b = preds;
      cell.records.push_back(std::move(rec));
    }
    if (config.has(Proposal::A) && config.has(Proposal::B)) {
      diag.mcnemar = mcnemar_yates(preds_a, preds_b, test.labels);
      for (auto& rec : cell.records) {
        if (rec.proposal == Proposal::A) rec.mcnemar_p_vs_b = diag.mcnemar->p_value;
      }
    }
    return cell;
  } catch (const Error& e) {
    throw Error(e.kind(), "cell (alpha = " + detail::format_exact(alpha) + ", rep = " + std::to_string(rep) +
                              "): " + e.what());
  }
}

CellResult run_cell(const ExperimentConfig& config, std::size_t alpha_index, int rep) {
  return run_cell(config, prepare_data(config), alpha_index, rep);
}

GridResult run_grid(const ExperimentConfig& config, const PreparedData& data) {
  config.validate();
  const auto n_alpha = config.alphas.size();
  const auto n_rep = static_cast<std::size_t>(config.reps);
  const auto n_cells = n_alpha * n_rep;
  std::vector<std::optional<CellResult>> cells(n_cells);

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n_cells; i = next++) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        cells[i] = run_cell(config, data, i / n_rep, static_cast<int>(i % n_rep));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), n_cells);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  GridResult grid;
  grid.echo = RunEcho::of(config);
  for (std::size_t i = 0; i < n_cells; ++i) {
    auto& cell = *cells[i];
    grid.records.insert(grid.records.end(), cell.records.begin(), cell.records.end());
    grid.cells.push_back(std::move(cell.diagnostics));
    if (i == (n_alpha - 1) * n_rep) grid.plot_models = std::move(cell.node_models);
  }
  return grid;
}

GridResult run_grid(const ExperimentConfig& config) { return run_grid(config, prepare_data(config)); }

// ---------------------------------------------------------------- verification

namespace {

struct CheckList {
  std::vector<VerificationCheck> checks;
  void add(std::string name, bool passed, std::string message) {
    checks.push_back({std::move(name), passed, std::move(message)});
  }
};

bool finite_record(const ExperimentRecord& r) {
  if (!std::isfinite(r.f1_macro) || !std::isfinite(r.anll) || !std::isfinite(r.jsd) || !std::isfinite(r.alpha) ||
      !std::isfinite(r.runtime_ms)) {
    return false;
  }
  for (double w : r.weights) {
    if (!std::isfinite(w)) return false;
  }
  return !r.mcnemar_p_vs_b || std::isfinite(*r.mcnemar_p_vs_b);
}

std::string zero_runtime_line(ExperimentRecord r, std::size_t k) {
  r.runtime_ms = 0.0;
  return format_record(r, k);
}

// A tiny train/test pair with one unseen protocol value at inference.
std::pair<bool, std::string> check_ood_slot() {
  FeatureSchema schema;
  schema.columns = {{"proto", ColumnKind::categorical}, {"bytes", ColumnKind::numerical}, {"label", ColumnKind::label}};
  std::istringstream train_csv("proto,bytes,label\ntcp,1.0,0\nudp,2.0,1\ntcp,1.5,0\nudp,2.5,1\ntcp,0.5,1\n");
  const auto train = parse_csv(train_csv, schema, nullptr, "ood-train");
  const int n_cats = train.categories.n_cats(0);
  std::istringstream test_csv("proto,bytes,label\ntcp,1.0,0\nicmp,1.0,0\n");
  const auto test = parse_csv(test_csv, schema, &train.categories, "ood-test");
  const int ood_code = test.dataset.categorical(1, 0);
  if (ood_code != n_cats) {
    return {false, "unseen value encoded as " + std::to_string(ood_code) + ", expected n_cats = " + std::to_string(n_cats)};
  }
  const auto model = fit_hybrid(train.dataset);
  const auto before = joint_log_scores(model, row_of(test.dataset, 0));
  const auto ood = joint_log_scores(model, row_of(test.dataset, 1));
  const auto after = joint_log_scores(model, row_of(test.dataset, 0));
  for (int c = 0; c < model.n_classes; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    // rows 0 and 1 differ only in the categorical code
    const double expected = ood[ci] - model.cat.log_prob[0][ci][static_cast<std::size_t>(n_cats)] -
                            (before[ci] - model.cat.log_prob[0][ci][0]);
    if (std::abs(expected) > 1e-12) return {false, "OOD row does not use the slot at n_cats"};
    if (before[ci] != after[ci]) return {false, "known-category scores changed after scoring an unseen value"};
  }
  return {true, "unseen value -> code " + std::to_string(n_cats) + " (n_cats)"};
}

}  // namespace

VerificationReport verify(const std::vector<ExperimentRecord>& records, const std::vector<CellDiagnostics>& cells,
                          const VerifyContext& ctx) {
  CheckList list;
  const auto& config = ctx.config;
  const auto k = config.k();

  // 1. ICC formula against the reference table
  {
    const auto ref = reference_profiles();
    const double expected[] = {0.393, 0.154, 0.042};
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(compute_icc(ref[i]) - expected[i]));
    list.add("icc_formula", worst <= 0.0005, "max |ICC - table| = " + detail::format_fixed6(worst));
  }

  // 2. seed reproducibility
  {
    bool ok = false;
    std::string msg = "no rerun available";
    if (ctx.rerun && !config.alphas.empty()) {
      try {
        const auto first = ctx.rerun(0, 0);
        const auto second = ctx.rerun(0, 0);
        std::vector<std::string> a, b, stored;
        for (const auto& r : first) a.push_back(zero_runtime_line(r, k));
        for (const auto& r : second) b.push_back(zero_runtime_line(r, k));
        for (const auto& r : records) {
          if (r.alpha == config.alphas[0] && r.rep == 0) stored.push_back(zero_runtime_line(r, k));
        }
        ok = a == b && a == stored;
        msg = ok ? "cell (alpha index 0, rep 0) reproduced exactly"
                 : (a != b ? "two reruns differ" : "rerun differs from the stored records");
      } catch (const std::exception& e) {
        msg = std::string("rerun failed: ") + e.what();
      }
    }
    list.add("seed_reproducibility", ok, msg);
  }

  // mean JSD per alpha level from the partition diagnostics
  std::map<double, std::pair<double, int>> jsd_by_alpha;
  for (const auto& c : cells) {
    auto& [sum, n] = jsd_by_alpha[c.alpha];
    sum += c.partition.jsd;
    ++n;
  }

  // 3. alpha ordering
  {
    bool ok = !jsd_by_alpha.empty();
    double prev = std::numeric_limits<double>::infinity();
    std::string trend;
    for (const auto& [alpha, acc] : jsd_by_alpha) {
      const double mean = acc.first / acc.second;
      if (mean > prev + 1e-12) ok = false;
      prev = mean;
      trend += (trend.empty() ? "" : " ") + detail::format_fixed6(mean);
    }
    list.add("alpha_ordering", ok, "mean JSD by ascending alpha: " + trend);
  }

  // 4. OOD slot
  {
    try {
      const auto [ok, msg] = check_ood_slot();
      list.add("ood_slot", ok, msg);
    } catch (const std::exception& e) {
      list.add("ood_slot", false, e.what());
    }
  }

  // 5. MoG finite output
  {
    std::size_t bad = 0;
    for (const auto& c : cells) bad += c.invalid_scores;
    list.add("mog_finite", !cells.empty() && bad == 0, std::to_string(bad) + " invalid mixture scores");
  }

  // 6. metric ranges (non-finite values are check 11's business)
  {
    std::size_t bad = 0;
    for (const auto& r : records) {
      if (std::isfinite(r.anll) && r.anll < 0.0) ++bad;
      if (std::isfinite(r.f1_macro) && (r.f1_macro < 0.0 || r.f1_macro > 1.0)) ++bad;
    }
    list.add("metric_ranges", bad == 0, std::to_string(bad) + " out-of-range ANLL/F1 values");
  }

  // 7. weights sum to 1
  {
    std::size_t bad = 0;
    double worst = 0.0;
    for (const auto& r : records) {
      if (r.weights.empty()) continue;
      const double sum = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
      const bool negative = std::any_of(r.weights.begin(), r.weights.end(), [](double w) { return w < 0.0; });
      if (std::isfinite(sum)) worst = std::max(worst, std::abs(sum - 1.0));
      if (negative || std::abs(sum - 1.0) > ctx.weight_sum_tolerance) ++bad;
    }
    list.add("weights_sum_to_one", bad == 0,
             std::to_string(bad) + " weight vectors off the simplex (max |sum - 1| = " + detail::format_exact(worst) + ")");
  }

  // 8. McNemar validity
  {
    std::size_t bad = 0;
    std::size_t seen = 0;
    for (const auto& r : records) {
      if (!r.mcnemar_p_vs_b) continue;
      ++seen;
      const double p = *r.mcnemar_p_vs_b;
      if (std::isnan(p)) continue;  // reported by check 11
      if (p < 0.0 || p > 1.0) {
        ++bad;
        continue;
      }
      const auto cell = std::find_if(cells.begin(), cells.end(), [&](const CellDiagnostics& c) {
        return c.alpha == r.alpha && c.rep == r.rep;
      });
      if (cell == cells.end() || !cell->mcnemar) {
        ++bad;
        continue;
      }
      const auto& m = *cell->mcnemar;
      const bool counts_ok = m.b + m.c <= cell->test_rows;
      const double diff = std::max(0.0, std::abs(static_cast<double>(m.b) - static_cast<double>(m.c)) - 1.0);
      const double chi2 = m.b + m.c > 0 ? diff * diff / static_cast<double>(m.b + m.c) : 0.0;
      const double p_ref = m.b + m.c > 0 ? chi2_sf_1df(chi2) : 1.0;
      if (!counts_ok || std::abs(p - p_ref) > 1e-6 || m.significant != (m.p_value < kSignificanceLevel)) ++bad;
    }
    const bool expected = config.has(Proposal::A) && config.has(Proposal::B);
    list.add("mcnemar_validity", bad == 0 && (!expected || seen > 0),
             std::to_string(seen) + " McNemar results checked, " + std::to_string(bad) + " invalid");
  }

  // 9. per-repetition JSD gradient: fraction of alpha pairs ordered correctly
  {
    std::map<int, std::vector<std::pair<double, double>>> by_rep;
    for (const auto& c : cells) by_rep[c.rep].emplace_back(c.alpha, c.partition.jsd);
    double total = 0.0;
    int reps = 0;
    for (auto& [rep, series] : by_rep) {
      std::sort(series.begin(), series.end());
      std::size_t pairs = 0;
      std::size_t ordered = 0;
      for (std::size_t i = 0; i < series.size(); ++i) {
        for (std::size_t j = i + 1; j < series.size(); ++j) {
          ++pairs;
          if (series[i].second >= series[j].second) ++ordered;
        }
      }
      if (pairs == 0) continue;
      total += static_cast<double>(ordered) / static_cast<double>(pairs);
      ++reps;
    }
    const double mean = reps ? total / reps : 0.0;
    list.add("jsd_gradient", reps > 0 && mean >= 0.5,
             "mean fraction of alpha pairs with non-increasing JSD: " + detail::format_fixed6(mean));
  }

  // 10. highest-ICC node outweighs lowest-ICC node under proposal A
  {
    bool ok = false;
    std::string msg = "no proposal A records";
    if (k >= 2) {
      std::vector<double> icc;
      for (const auto& p : config.profiles) icc.push_back(compute_icc(p));
      const auto hi = static_cast<std::size_t>(std::max_element(icc.begin(), icc.end()) - icc.begin());
      const auto lo = static_cast<std::size_t>(std::min_element(icc.begin(), icc.end()) - icc.begin());
      double sum_hi = 0.0, sum_lo = 0.0;
      int n = 0;
      for (const auto& r : records) {
        if (r.proposal != Proposal::A || r.weights.size() != k) continue;
        sum_hi += r.weights[hi];
        sum_lo += r.weights[lo];
        ++n;
      }
      if (n > 0) {
        ok = sum_hi / n > sum_lo / n;
        msg = config.profiles[hi].name() + " " + detail::format_fixed6(sum_hi / n) + " vs " +
              config.profiles[lo].name() + " " + detail::format_fixed6(sum_lo / n);
      }
    }
    list.add("icc_alignment", ok, msg);
  }

  // 11. no NaN / Inf
  {
    const auto bad = std::count_if(records.begin(), records.end(), [](const auto& r) { return !finite_record(r); });
    list.add("no_nan_inf", bad == 0, std::to_string(bad) + " records with NaN/Inf");
  }

  // 12. grid completeness
  {
    std::map<std::tuple<double, int, Proposal>, int> seen;
    for (const auto& r : records) ++seen[{r.alpha, r.rep, r.proposal}];
    std::size_t missing = 0;
    for (double a : config.alphas) {
      for (int rep = 0; rep < config.reps; ++rep) {
        for (auto p : config.proposals) {
          const auto it = seen.find({a, rep, p});
          if (it == seen.end() || it->second != 1) ++missing;
        }
      }
    }
    const auto expected = config.alphas.size() * static_cast<std::size_t>(config.reps) * config.proposals.size();
    const bool ok = missing == 0 && records.size() == expected;
    list.add("grid_completeness", ok,
             std::to_string(records.size()) + " of " + std::to_string(expected) + " records, " +
                 std::to_string(missing) + " cells missing or duplicated");
  }

  // 13. config echo
  {
    const auto expected = RunEcho::of(config);
    std::set<double> alphas;
    std::set<int> reps;
    for (const auto& r : records) {
      alphas.insert(r.alpha);
      reps.insert(r.rep);
    }
    bool ok = ctx.echo == expected && alphas == std::set<double>(config.alphas.begin(), config.alphas.end()) &&
              reps.size() == static_cast<std::size_t>(config.reps);
    std::string msg = ok ? "recorded parameters match the configuration" : "recorded parameters differ from the configuration";
    if (ok && config.uses_reference_parameters()) {
      const ExperimentConfig ref;
      ok = ctx.echo.seed == 42 && ctx.echo.reps == 5 && ctx.echo.alphas == ref.alphas && ctx.echo.lambda == 0.10 &&
           ctx.echo.delta == 0.05 && ctx.echo.max_iters == 500 && ctx.echo.n_starts == 5 &&
           ctx.echo.split == std::array<double, 3>{0.6, 0.2, 0.2};
      msg = ok ? "reference parameters in use and echoed" : "reference parameters not echoed";
    }
    list.add("config_echo", ok, msg);
  }

  // 14. floor compliance
  {
    std::size_t bad = 0;
    const double delta = config.optimizer.floor_delta;
    for (const auto& r : records) {
      if (r.proposal != Proposal::A) continue;
      for (double w : r.weights) {
        if (w < delta - 1e-12) ++bad;
      }
    }
    list.add("weight_floor", bad == 0, std::to_string(bad) + " learned weights below delta = " + detail::format_exact(delta));
  }

  // 15. trace sanity
  {
    std::size_t bad = 0;
    std::size_t traces = 0;
    for (const auto& c : cells) {
      if (!c.trace) continue;
      ++traces;
      const auto& t = *c.trace;
      if (t.starts.empty() || t.chosen >= t.starts.size()) {
        ++bad;
        continue;
      }
      const double best = t.starts[t.chosen].final_objective;
      for (const auto& s : t.starts) {
        if (s.final_objective < best || s.final_objective > s.initial_objective) {
          ++bad;
          break;
        }
      }
    }
    const bool expected = config.has(Proposal::A);
    list.add("trace_sanity", bad == 0 && (!expected || traces > 0),
             std::to_string(traces) + " optimizer traces, " + std::to_string(bad) + " inconsistent");
  }

  VerificationReport report;
  report.checks = std::move(list.checks);
  report.passed_count = static_cast<std::size_t>(
      std::count_if(report.checks.begin(), report.checks.end(), [](const auto& c) { return c.passed; }));
  return report;
}

void write_report(const VerificationReport& report, std::ostream& out) {
  out << "verification: " << report.passed_count << '/' << report.checks.size() << " passed\n";
  for (std::size_t i = 0; i < report.checks.size(); ++i) {
    const auto& c = report.checks[i];
    out << (c.passed ? "[PASS] " : "[FAIL] ") << (i + 1 < 10 ? "0" : "") << i + 1 << ' ' << c.name << ": "
        << c.message << '\n';
  }
  out << '\n';
  for (const auto& c : report.checks) out << "check." << c.name << '=' << (c.passed ? "pass" : "fail") << '\n';
  out << "passed_count=" << report.passed_count << '\n';
  out << "total=" << report.checks.size() << '\n';
}

// ---------------------------------------------------------------- results csv

std::string format_record(const ExperimentRecord& r, std::size_t k) {
  std::string line = r.dataset + ',' + detail::format_fixed6(r.alpha) + ',' + std::to_string(r.rep) + ',' +
                     std::string(to_string(r.proposal)) + ',' + detail::format_fixed6(r.f1_macro) + ',' +
                     detail::format_fixed6(r.anll) + ',' + detail::format_fixed6(r.jsd);
  for (std::size_t i = 0; i < k; ++i) {
    line += ',';
    if (i < r.weights.size()) line += detail::format_fixed6(r.weights[i]);
  }
  line += ',';
  if (r.mcnemar_p_vs_b) line += detail::format_fixed6(*r.mcnemar_p_vs_b);
  line += ',' + detail::format_fixed6(r.runtime_ms);
  return line;
}

void emit_results_csv(const std::vector<ExperimentRecord>& records, std::size_t k, std::ostream& out) {
  out << "dataset,alpha,rep,proposal,f1_macro,anll,jsd";
  for (std::size_t i = 1; i <= k; ++i) out << ",w_" << i;
  out << ",mcnemar_p_vs_B,runtime_ms\n";
  for (const auto& r : records) out << format_record(r, k) << '\n';
}

void emit_results_csv(const std::vector<ExperimentRecord>& records, std::size_t k, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  emit_results_csv(records, k, out);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

std::vector<ExperimentRecord> parse_results_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, source + ": empty results file");
  const auto header = detail::split_csv(detail::chomp(line));
  const std::vector<std::string> lead = {"dataset", "alpha", "rep", "proposal", "f1_macro", "anll", "jsd"};
  if (header.size() < lead.size() + 2 || !std::equal(lead.begin(), lead.end(), header.begin()) ||
      header[header.size() - 2] != "mcnemar_p_vs_B" || header.back() != "runtime_ms") {
    throw Error(ErrorKind::parse, source + ": unexpected header");
  }
  const auto k = header.size() - lead.size() - 2;
  for (std::size_t i = 0; i < k; ++i) {
    if (header[lead.size() + i] != "w_" + std::to_string(i + 1)) throw Error(ErrorKind::parse, source + ": unexpected header");
  }
  std::vector<ExperimentRecord> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto text = detail::chomp(line);
    if (text.empty()) continue;
    ++row;
    const auto where = source + ": row " + std::to_string(row);
    const auto f = detail::split_csv(text);
    if (f.size() != header.size()) throw Error(ErrorKind::parse, where + ": wrong number of fields");
    ExperimentRecord r;
    r.dataset = f[0];
    r.alpha = detail::parse_double(f[1], where);
    r.rep = detail::parse_int(f[2], where);
    try {
      r.proposal = parse_proposal(f[3]);
    } catch (const Error&) {
      throw Error(ErrorKind::parse, where + ": unknown proposal '" + f[3] + "'");
    }
    r.f1_macro = detail::parse_double(f[4], where);
    r.anll = detail::parse_double(f[5], where);
    r.jsd = detail::parse_double(f[6], where);
    std::size_t empty = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& w = f[lead.size() + i];
      if (w.empty()) {
        ++empty;
      } else {
        r.weights.push_back(detail::parse_double(w, where));
      }
    }
    if (empty != 0 && empty != k) throw Error(ErrorKind::parse, where + ": partially empty weights");
    const auto& p = f[f.size() - 2];
    if (!p.empty()) r.mcnemar_p_vs_b = detail::parse_double(p, where);
    r.runtime_ms = detail::parse_double(f.back(), where);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ExperimentRecord> load_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return parse_results_csv(in, path.string());
}

}  // namespace fednb

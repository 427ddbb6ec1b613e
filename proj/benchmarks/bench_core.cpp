#include <benchmark/benchmark.h>

#include "fednb/config.hpp"
#include "fednb/data.hpp"
#include "fednb/experiment.hpp"
#include "fednb/governance.hpp"
#include "fednb/local_model.hpp"
#include "fednb/mog_server.hpp"
#include "fednb/partition.hpp"
#include "fednb/weight_learning.hpp"

using namespace fednb;

namespace {

Dataset synth(std::size_t rows) {
  SynthSpec spec;
  spec.n_rows = rows;
  spec.n_classes = 4;
  return synth_generate(spec, 1);
}

std::vector<HybridModel> three_models(const Dataset& d) {
  std::vector<std::size_t> idx[3];
  for (std::size_t i = 0; i < d.rows(); ++i) idx[i % 3].push_back(i);
  std::vector<HybridModel> models;
  for (const auto& ix : idx) models.push_back(fit_hybrid(subset(d, ix)));
  return models;
}

}  // namespace

static void BM_FitHybrid(benchmark::State& state) {
  const auto d = synth(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_hybrid(d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitHybrid)->Arg(1000)->Arg(10000);

static void BM_JointLogScores(benchmark::State& state) {
  const auto d = synth(2000);
  const auto m = fit_hybrid(d);
  std::vector<double> out(4);
  std::size_t r = 0;
  for (auto _ : state) {
    joint_log_scores(m, row_of(d, r), out);
    benchmark::DoNotOptimize(out.data());
    r = (r + 1) % d.rows();
  }
}
BENCHMARK(BM_JointLogScores);

static void BM_ScoreTableAnll(benchmark::State& state) {
  const auto d = synth(3000);
  const auto table = NodeScoreTable::build(three_models(d), d);
  const WeightVector w({0.5, 0.3, 0.2});
  for (auto _ : state) benchmark::DoNotOptimize(table.anll(w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows()));
}
BENCHMARK(BM_ScoreTableAnll);

static void BM_LearnWeights(benchmark::State& state) {
  const auto d = synth(3000);
  const auto table = NodeScoreTable::build(three_models(d), d);
  const auto prior = IccPrior::from_profiles(reference_profiles()).normalized;
  const OptimizerConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(learn_weights_icc(table, prior, cfg));
}
BENCHMARK(BM_LearnWeights)->Unit(benchmark::kMillisecond);

static void BM_DirichletPartition(benchmark::State& state) {
  const auto d = synth(6000);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dirichlet_partition(d.labels, 3, 0.1, ++seed));
}
BENCHMARK(BM_DirichletPartition);

static void BM_RunCell(benchmark::State& state) {
  const auto config = load_config(FEDNB_SOURCE_DIR "/configs/synth.cfg");
  const auto prepared = prepare_data(config);
  for (auto _ : state) benchmark::DoNotOptimize(run_cell(config, prepared, 0, 0));
}
BENCHMARK(BM_RunCell)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

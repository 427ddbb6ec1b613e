#include <doctest.h>

#include <cmath>

#include "fednb/error.hpp"
#include "fednb/governance.hpp"
#include "fednb/nelder_mead.hpp"
#include "fednb/weight_learning.hpp"
#include "helpers.hpp"

using namespace fednb;

TEST_CASE("nelder-mead: analytic minima") {
  const double start1[] = {0.0};
  const auto r1 = nelder_mead([](std::span<const double> t) { return (t[0] - 3.0) * (t[0] - 3.0); }, start1);
  CHECK(std::abs(r1.x[0] - 3.0) <= 1e-6);
  CHECK(r1.iterations <= 500);

  const double start2[] = {5.0, 5.0};
  const auto r2 = nelder_mead([](std::span<const double> t) { return t[0] * t[0] + 10.0 * t[1] * t[1]; }, start2);
  CHECK(std::abs(r2.x[0]) <= 1e-5);
  CHECK(std::abs(r2.x[1]) <= 1e-5);
  CHECK(r2.iterations <= 500);
}

TEST_CASE("nelder-mead: constant objective and bad start") {
  const double start[] = {1.0, 0.0};
  const auto r = nelder_mead([](std::span<const double>) { return 7.0; }, start);
  CHECK(r.fx == 7.0);
  const bool is_vertex = (r.x[0] == 1.0 && r.x[1] == 0.0) || (r.x[0] == 1.05 && r.x[1] == 0.0) ||
                         (r.x[0] == 1.0 && r.x[1] == 0.00025);
  CHECK(is_vertex);
  try {
    nelder_mead([](std::span<const double>) { return std::nan(""); }, start);
    FAIL("expected optimizer error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::optimizer);
  }
}

TEST_CASE("floored simplex map") {
  const double zeros[] = {0.0, 0.0};
  const auto u = to_floored_simplex(zeros, 0.05);
  for (double w : u.values()) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const double big[] = {800.0, 0.0};
  const auto s = to_floored_simplex(big, 0.05);
  CHECK(s[0] == doctest::Approx(0.9));
  CHECK(s[1] == doctest::Approx(0.05));
  CHECK(s[2] == doctest::Approx(0.05));

  // softmax (0.8, 0.1, 0.1): theta = (log 8, 0) against the fixed last 0
  const double t[] = {std::log(8.0), 0.0};
  const auto w = to_floored_simplex(t, 0.05);
  CHECK(w[0] == doctest::Approx(0.73).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.135).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(0.135).epsilon(1e-12));
}

TEST_CASE("floored simplex round trip") {
  const auto theta = from_simplex(WeightVector::uniform(3), 0.05);
  for (double v : theta) CHECK(std::abs(v) <= 1e-12);

  Rng rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + uniform_index(rng, 4);
    const double delta = 0.05;
    auto p = dirichlet_symmetric(rng, k, 1.0);
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = delta + (1.0 - static_cast<double>(k) * delta) * (0.001 + p[i]) / (1.0 + 0.001 * k);
    const WeightVector wv(w);
    const auto back = to_floored_simplex(from_simplex(wv, delta), delta);
    for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(back[i] - wv[i]));
    CHECK(back.min() >= delta);
  }
  CHECK(worst < 1e-9);

  const WeightVector at_floor({0.05, 0.05, 0.9});
  const auto clipped = to_floored_simplex(from_simplex(at_floor, 0.05), 0.05);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(clipped[i] - at_floor[i]) <= 2e-6);
}

TEST_CASE("objective") {
  Rng rng(9);
  const auto train = test::random_dataset(rng, 60, 2, 1, 2, 3);
  const auto val = test::random_dataset(rng, 30, 2, 1, 2, 3);
  const std::vector<HybridModel> models{fit_hybrid(train), fit_hybrid(val)};
  const auto table = NodeScoreTable::build(models, val);
  const WeightVector prior({0.7, 0.3});
  const WeightVector w({0.4, 0.6});
  CHECK(objective(w, table, prior, 0.0) == table.anll(w));
  CHECK(objective(prior, table, prior, 0.5) == table.anll(prior));
  CHECK(objective(w, table, prior, 0.1) == doctest::Approx(table.anll(w) + 0.1 * 0.18).epsilon(1e-12));
  const MoGEnsemble e{models, w};
  CHECK(objective(w, e, val, prior, 0.1) == doctest::Approx(objective(w, table, prior, 0.1)).epsilon(1e-12));
  CHECK(prior_penalty(WeightVector({0.8, 0.2}), WeightVector({0.7, 0.3})) == doctest::Approx(0.02));
}

TEST_CASE("learned weights: penalty limit and identical models") {
  Rng rng(10);
  const auto train = test::random_dataset(rng, 90, 2, 1, 2, 3);
  const auto val = test::random_dataset(rng, 40, 2, 1, 2, 3);
  std::vector<std::size_t> a(45), b(45);
  for (std::size_t i = 0; i < 45; ++i) {
    a[i] = i;
    b[i] = 45 + i;
  }
  const std::vector<HybridModel> models{fit_hybrid(subset(train, a)), fit_hybrid(subset(train, b)), fit_hybrid(train)};
  const auto prior = IccPrior::from_profiles(reference_profiles());
  OptimizerConfig cfg;
  cfg.lambda = 1e6;
  const MoGEnsemble e{models, WeightVector::uniform(3)};
  const auto learned = learn_weights_icc(e, val, prior, cfg);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(learned.weights[i] - prior.normalized[i]) <= 1e-3);

  const std::vector<HybridModel> same{models[0], models[0]};
  const auto table = NodeScoreTable::build(same, val);
  OptimizerConfig plain;
  const WeightVector p2({0.8, 0.2});
  const auto twin = learn_weights_icc(table, p2, plain);
  CHECK(std::abs(twin.weights[0] - 0.8) <= 1e-3);
}

TEST_CASE("learned weights: trace, floor and determinism") {
  Rng rng(14);
  const auto train = test::random_dataset(rng, 120, 3, 1, 2, 3);
  const auto val = test::random_dataset(rng, 60, 3, 1, 2, 3);
  std::vector<std::size_t> idx[3];
  for (std::size_t i = 0; i < train.rows(); ++i) idx[i % 3].push_back(i);
  std::vector<HybridModel> models;
  for (const auto& ix : idx) models.push_back(fit_hybrid(subset(train, ix)));
  const auto table = NodeScoreTable::build(models, val);
  const auto prior = IccPrior::from_profiles(reference_profiles()).normalized;
  OptimizerConfig cfg;
  cfg.lambda = 0.0;
  const auto r1 = learn_weights_icc(table, prior, cfg);
  const auto r2 = learn_weights_icc(table, prior, cfg);
  CHECK(r1.weights.values()[0] == r2.weights.values()[0]);
  CHECK(r1.trace.starts.size() == 5);
  CHECK(r1.trace.starts[0].label == "prior");
  CHECK(r1.trace.starts[1].label == "uniform");
  CHECK(r1.weights.min() >= cfg.floor_delta);
  const auto& best = r1.trace.starts[r1.trace.chosen];
  for (const auto& s : r1.trace.starts) {
    CHECK(best.final_objective <= s.final_objective);
    CHECK(s.final_objective <= s.initial_objective);
  }
  CHECK(best.final_objective <= r1.trace.starts[0].initial_objective);
  CHECK(objective(r1.weights, table, prior, 0.0) == doctest::Approx(best.final_objective).epsilon(1e-12));
}

TEST_CASE("lambda zero pushes a pure-noise node to the floor") {
  SynthSpec spec;
  spec.n_rows = 3000;
  spec.n_classes = 2;
  spec.separation = 2.0;
  const auto data = synth_generate(spec, 5);
  std::vector<std::size_t> idx[4];
  for (std::size_t i = 0; i < data.rows(); ++i) idx[i % 4].push_back(i);
  const auto val = subset(data, idx[3]);
  const auto clean = subset(data, idx[0]);
  const auto noisy = degrade(subset(data, idx[2]), 0.5, column_std(data), 3);
  const std::vector<HybridModel> models{fit_hybrid(clean), fit_hybrid(subset(data, idx[1])), fit_hybrid(noisy)};
  OptimizerConfig cfg;
  cfg.lambda = 0.0;
  const auto prior = IccPrior::from_profiles(reference_profiles()).normalized;
  const auto learned = learn_weights_icc(NodeScoreTable::build(models, val), prior, cfg);
  CHECK(std::abs(learned.weights[2] - cfg.floor_delta) <= 0.02);
}

TEST_CASE("fedavg weights") {
  const std::size_t eq[] = {100, 100, 100};
  const auto even = weights_fedavg(eq);
  for (double w : even.values()) CHECK(w == doctest::Approx(1.0 / 3.0));
  const std::size_t uneq[] = {60, 30, 10};
  const auto w = weights_fedavg(uneq);
  CHECK(w[0] == doctest::Approx(0.6));
  CHECK(w[1] == doctest::Approx(0.3));
  CHECK(w[2] == doctest::Approx(0.1));
  const std::size_t one[] = {1};
  CHECK(weights_fedavg(one)[0] == 1.0);
  const std::size_t zero[] = {5, 0};
  try {
    weights_fedavg(zero);
    FAIL("expected size error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::size);
  }
}

TEST_CASE("entropy weights") {
  auto counts = [](std::vector<std::vector<std::size_t>> rows) {
    Matrix<std::size_t> m;
    m.set_cols(rows[0].size());
    for (const auto& r : rows) m.append_row(std::span<const std::size_t>(r));
    return m;
  };
  const auto same = weights_entropy(counts({{10, 10}, {5, 5}}));
  CHECK(same[0] == doctest::Approx(0.5));
  // entropies (1, 2) give the same 2:1 ratio as (0.5, 1.0)
  const auto half_one = weights_entropy(counts({{1, 1, 0, 0}, {1, 1, 1, 1}}));  // H = (1, 2)
  CHECK(half_one[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-5));
  const auto pure = weights_entropy(counts({{7, 0}, {3, 3}}));
  CHECK(pure[0] > 0.999);
  CHECK_THROWS_AS(weights_entropy(counts({{0, 0}, {3, 3}})), Error);
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate(3));
  c.floor_delta = 0.34;
  CHECK_THROWS_AS(c.validate(3), Error);
  c = OptimizerConfig{};
  c.lambda = -1.0;
  CHECK_THROWS_AS(c.validate(3), Error);
  c = OptimizerConfig{};
  c.n_starts = 0;
  CHECK_THROWS_AS(c.validate(3), Error);
}

// Independent reimplementations, checked against the library on random inputs.
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fednb/evaluation.hpp"
#include "fednb/local_model.hpp"
#include "fednb/mog_server.hpp"
#include "fednb/partition.hpp"
#include "helpers.hpp"
#include "oracle/brute_force.hpp"

using namespace fednb;

using ld = long double;
using test::brute_scores;

TEST_CASE("hybrid scores match a brute-force density") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const int n_classes = 2 + static_cast<int>(uniform_index(rng, 3));
    const auto train = test::random_dataset(rng, 8 + uniform_index(rng, 80), n_classes, 1 + static_cast<int>(uniform_index(rng, 2)),
                                            1 + static_cast<int>(uniform_index(rng, 3)), 3);
    const auto probe = test::random_dataset(rng, 5, n_classes, static_cast<int>(train.categorical.cols()),
                                            static_cast<int>(train.numerical.cols()), 4);  // code 3 is OOD
    const auto m = fit_hybrid(train);
    for (std::size_t r = 0; r < probe.rows(); ++r) {
      const auto row = row_of(probe, r);
      const auto got = joint_log_scores(m, row);
      const auto want = brute_scores(train, row);
      for (std::size_t c = 0; c < got.size(); ++c) {
        if (std::isinf(want[c])) {
          CHECK(is_absent(got[c]));
        } else {
          worst = std::max(worst, std::abs(got[c] - want[c]) / std::max(1.0, std::abs(want[c])));
        }
      }
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("mixture matches direct summation") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + uniform_index(rng, 5);
    const std::size_t c = 1 + uniform_index(rng, 4);
    std::vector<double> w(k), lw(k), scores(k * c);
    double total = 0.0;
    for (auto& x : w) total += (x = 0.05 + uniform01(rng));
    for (std::size_t i = 0; i < k; ++i) lw[i] = std::log(w[i] / total);
    for (auto& s : scores) s = uniform01(rng) < 0.15 ? kAbsentScore : -5.0 * uniform01(rng);
    std::vector<double> out(c);
    mix_node_scores(lw, scores, c, out);
    for (std::size_t j = 0; j < c; ++j) {
      ld direct = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (!is_absent(scores[i * c + j])) direct += (w[i] / total) * std::exp(static_cast<ld>(scores[i * c + j]));
      }
      if (direct == 0) {
        CHECK(is_absent(out[j]));
      } else {
        CHECK(std::abs(out[j] - static_cast<double>(std::log(direct))) <= 1e-12);
      }
    }
  }
}

TEST_CASE("JSD as mean KL to the mixture") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + uniform_index(rng, 4);
    const std::size_t c = 2 + uniform_index(rng, 4);
    Matrix<std::size_t> counts;
    counts.set_cols(c);
    std::vector<std::vector<ld>> p(k, std::vector<ld>(c));
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<std::size_t> row(c);
      for (auto& v : row) v = uniform01(rng) < 0.3 ? 0 : uniform_index(rng, 50);
      row[uniform_index(rng, c)] += 1;
      counts.append_row(std::span<const std::size_t>(row));
      const ld total = std::accumulate(row.begin(), row.end(), ld{0});
      for (std::size_t j = 0; j < c; ++j) p[i][j] = row[j] / total;
    }
    std::vector<ld> m(c, 0);
    for (const auto& pi : p) {
      for (std::size_t j = 0; j < c; ++j) m[j] += pi[j] / k;
    }
    ld kl = 0;
    for (const auto& pi : p) {
      for (std::size_t j = 0; j < c; ++j) {
        if (pi[j] > 0) kl += pi[j] * std::log2(pi[j] / m[j]) / k;
      }
    }
    CHECK(jsd_heterogeneity(counts) == doctest::Approx(static_cast<double>(kl / std::log2(static_cast<ld>(k)))).epsilon(1e-10));
  }
}

TEST_CASE("F1 and McNemar against textbook definitions") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_classes = 2 + static_cast<int>(uniform_index(rng, 4));
    const std::size_t n = 1 + uniform_index(rng, 60);
    std::vector<int> y(n), a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_classes)));
      a[i] = uniform01(rng) < 0.6 ? y[i] : static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_classes)));
      b[i] = uniform01(rng) < 0.5 ? y[i] : static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_classes)));
    }
    double f1 = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += a[i] == c && y[i] == c;
        fp += a[i] == c && y[i] != c;
        fn += a[i] != c && y[i] == c;
      }
      const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      if (precision + recall > 0) f1 += 2 * precision * recall / (precision + recall);
    }
    CHECK(f1_macro(y, a, n_classes) == doctest::Approx(f1 / n_classes).epsilon(1e-12));

    double only_a = 0, only_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
      only_a += a[i] == y[i] && b[i] != y[i];
      only_b += a[i] != y[i] && b[i] == y[i];
    }
    const auto r = mcnemar_yates(a, b, y);
    if (only_a + only_b == 0) {
      CHECK(r.p_value == 1.0);
    } else {
      const double stat = std::pow(std::max(0.0, std::abs(only_a - only_b) - 1.0), 2) / (only_a + only_b);
      CHECK(r.chi2 == doctest::Approx(stat).epsilon(1e-12));
      CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(stat / 2.0))).epsilon(1e-10));
    }
  }
}

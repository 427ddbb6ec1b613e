#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fednb/error.hpp"
#include "fednb/local_model.hpp"
#include "helpers.hpp"

using namespace fednb;

namespace {

Dataset categorical_only(const std::vector<int>& codes, const std::vector<int>& labels, int n_cats, int n_classes) {
  Dataset d;
  d.schema = make_synthetic_schema(1, 0, n_classes);
  d.categorical.set_cols(1);
  d.numerical.set_cols(0);
  d.n_cats = {n_cats};
  for (std::size_t i = 0; i < codes.size(); ++i) {
    d.categorical.append_row(std::vector<int>{codes[i]});
    d.numerical.append_row(std::span<const double>());
  }
  d.labels = labels;
  return d;
}

Dataset numerical_only(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, int n_classes) {
  Dataset d;
  d.schema = make_synthetic_schema(0, static_cast<int>(rows.at(0).size()), n_classes);
  d.categorical.set_cols(0);
  d.numerical.set_cols(rows.at(0).size());
  for (const auto& r : rows) {
    d.categorical.append_row(std::span<const int>());
    d.numerical.append_row(std::span<const double>(r));
  }
  d.labels = labels;
  return d;
}

}  // namespace

TEST_CASE("laplace smoothing with the OOD slot") {
  const auto d = categorical_only({0, 0, 1}, {0, 0, 0}, 2, 2);
  const auto m = fit_hybrid(d);
  const auto& lp = m.cat.log_prob[0][0];
  REQUIRE(lp.size() == 3);
  CHECK(std::exp(lp[0]) == doctest::Approx(3.0 / 6.0));
  CHECK(std::exp(lp[1]) == doctest::Approx(2.0 / 6.0));
  CHECK(std::exp(lp[2]) == doctest::Approx(1.0 / 6.0));
  CHECK(m.present(0));
  CHECK_FALSE(m.present(1));
}

TEST_CASE("class priors are frequencies") {
  const auto m = fit_hybrid(categorical_only({0, 1, 0, 1}, {0, 0, 1, 1}, 2, 2));
  CHECK(std::exp(m.log_prior[0]) == doctest::Approx(0.5));
  CHECK(std::exp(m.log_prior[1]) == doctest::Approx(0.5));
}

TEST_CASE("categorical-only scores are prior plus category term") {
  const auto m = fit_hybrid(categorical_only({0, 1, 0, 1}, {0, 0, 1, 1}, 2, 2));
  const int code = 0;
  const EncodedRow row{std::span<const int>(&code, 1), {}};
  const auto s = joint_log_scores(m, row);
  for (std::size_t c = 0; c < 2; ++c) CHECK(s[c] == doctest::Approx(std::log(0.5) + m.cat.log_prob[0][c][0]));
}

TEST_CASE("OOD code uses the slot at n_cats") {
  const auto m = fit_hybrid(categorical_only({0, 1, 0, 1}, {0, 0, 1, 1}, 2, 2));
  const int ood = 2;
  const int last = 1;
  const auto s_ood = joint_log_scores(m, {std::span<const int>(&ood, 1), {}});
  const auto s_last = joint_log_scores(m, {std::span<const int>(&last, 1), {}});
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(s_ood[c] == doctest::Approx(m.log_prior[c] + m.cat.log_prob[0][c][2]));
    CHECK(s_ood[c] != s_last[c]);
  }
  const int beyond = 3;
  CHECK_THROWS_AS(joint_log_scores(m, {std::span<const int>(&beyond, 1), {}}), Error);
}

TEST_CASE("constant column inside a class gets the variance floor") {
  const auto d = numerical_only({{1.0}, {1.0}, {1.0}, {5.0}, {6.0}}, {0, 0, 0, 1, 1}, 2);
  const auto m = fit_hybrid(d);
  CHECK(m.gauss.var(0, 0) > 0.0);
  CHECK(m.gauss.var(0, 0) < 1e-8);
  const double x = 1.0;
  const auto s = joint_log_scores(m, {{}, std::span<const double>(&x, 1)});
  CHECK(std::isfinite(s[0]));
  CHECK(std::isfinite(s[1]));
  CHECK(predict_local(m, {{}, std::span<const double>(&x, 1)}) == 0);
}

TEST_CASE("separable data is fitted perfectly; single class always predicted") {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const int y = i % 2;
    rows.push_back({6.0 * y + 0.5 * standard_normal(rng), -6.0 * y + 0.5 * standard_normal(rng)});
    labels.push_back(y);
  }
  const auto d = numerical_only(rows, labels, 2);
  const auto m = fit_hybrid(d);
  CHECK(predict_local(m, d) == labels);

  const auto single = numerical_only({{1.0}, {2.0}, {3.0}}, {1, 1, 1}, 3);
  const auto ms = fit_hybrid(single);
  for (double x : {-100.0, 0.0, 2.0, 1e6}) CHECK(predict_local(ms, {{}, std::span<const double>(&x, 1)}) == 1);
}

TEST_CASE("argmax tie break and empty fit") {
  const double tied[] = {-1.0, -0.5, -0.5};
  CHECK(argmax_score(tied) == 1);
  const double none[] = {kAbsentScore, kAbsentScore};
  CHECK(argmax_score(none) == -1);

  Dataset empty;
  empty.schema = make_synthetic_schema(0, 1, 2);
  empty.numerical.set_cols(1);
  empty.categorical.set_cols(0);
  try {
    fit_hybrid(empty);
    FAIL("expected fit error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fit);
  }
}

TEST_CASE("model invariants on random data") {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = test::random_dataset(rng, 5 + uniform_index(rng, 60), 3, 2, 2, 3);
    const auto m = fit_hybrid(d);
    double prior_mass = 0.0;
    for (int c = 0; c < 3; ++c) {
      if (m.present(c)) prior_mass += std::exp(m.log_prior[static_cast<std::size_t>(c)]);
    }
    CHECK(prior_mass == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& column : m.cat.log_prob) {
      for (const auto& per_class : column) {
        double sum = 0.0;
        for (double lp : per_class) {
          CHECK(std::isfinite(lp));
          sum += std::exp(lp);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
    for (std::size_t j = 0; j < m.n_numerical(); ++j) {
      CHECK(m.scaler.scale[j] > 0.0);
      const double x = 10.0 * standard_normal(rng);
      CHECK(std::abs(m.scaler.transform(j, m.scaler.inverse(j, x)) - x) <= 1e-9);
    }
  }
}

TEST_CASE("dimension mismatch is a shape error") {
  Rng rng(2);
  const auto m = fit_hybrid(test::random_dataset(rng, 30, 2, 1, 2, 3));
  const int code = 0;
  const double x = 1.0;
  try {
    joint_log_scores(m, {std::span<const int>(&code, 1), std::span<const double>(&x, 1)});
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape);
  }
}

TEST_CASE("model save and load are lossless") {
  Rng rng(13);
  const auto d = test::random_dataset(rng, 25, 3, 2, 3, 4);
  const auto m = fit_hybrid(d);
  std::stringstream buf;
  save_model(m, buf);
  const auto back = load_model(buf);
  CHECK(back == m);
  for (std::size_t r = 0; r < d.rows(); ++r) CHECK(joint_log_scores(back, row_of(d, r)) == joint_log_scores(m, row_of(d, r)));

  std::istringstream junk("not a model\n");
  CHECK_THROWS_AS(load_model(junk), Error);
}

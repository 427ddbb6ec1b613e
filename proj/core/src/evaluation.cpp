#include "fednb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fednb/error.hpp"

namespace fednb {

double f1_macro(std::span<const int> y_true, std::span<const int> y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorKind::shape, "y_true and y_pred lengths differ");
  if (n_classes < 1) throw Error(ErrorKind::domain, "n_classes must be positive");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::size_t> tp(k, 0), pred(k, 0), actual(k, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= n_classes) throw Error(ErrorKind::label, "true label out of range");
    ++actual[static_cast<std::size_t>(t)];
    // an invalid prediction (e.g. -1 for "no class") is simply wrong
    if (p >= 0 && p < n_classes) {
      ++pred[static_cast<std::size_t>(p)];
      if (p == t) ++tp[static_cast<std::size_t>(t)];
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const auto denom = pred[c] + actual[c];
    // F1 = 2 tp / (2 tp + fp + fn) = 2 tp / (pred + actual)
    if (denom > 0) sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(k);
}

double chi2_sf_1df(double x) {
  if (!(x >= 0.0)) throw Error(ErrorKind::domain, "chi-square statistic must be >= 0");
  return std::erfc(std::sqrt(x / 2.0));
}

McNemarResult mcnemar_yates(std::span<const int> preds_a, std::span<const int> preds_b, std::span<const int> y_true) {
  if (preds_a.size() != y_true.size() || preds_b.size() != y_true.size()) {
    throw Error(ErrorKind::shape, "prediction and label lengths differ");
  }
  McNemarResult r;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool a_ok = preds_a[i] == y_true[i];
    const bool b_ok = preds_b[i] == y_true[i];
    if (a_ok && !b_ok) ++r.b;
    if (!a_ok && b_ok) ++r.c;
  }
  const auto discordant = r.b + r.c;
  if (discordant > 0) {
    const double diff = std::abs(static_cast<double>(r.b) - static_cast<double>(r.c));
    const double corrected = std::max(0.0, diff - 1.0);
    r.chi2 = corrected * corrected / static_cast<double>(discordant);
    r.p_value = chi2_sf_1df(r.chi2);
  }
  r.significant = r.p_value < kSignificanceLevel;
  return r;
}

}  // namespace fednb

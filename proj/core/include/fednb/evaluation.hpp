#pragma once

#include <cstddef>
#include <span>

namespace fednb {

inline constexpr double kSignificanceLevel = 0.05;

struct McNemarResult {
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // A wrong, B correct
  double chi2 = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

// Unweighted mean of per-class F1 over all n_classes. A class with no true
// and no predicted samples scores 0.
double f1_macro(std::span<const int> y_true, std::span<const int> y_pred, int n_classes);

// chi2 = max(0, |b - c| - 1)^2 / (b + c), p = P(chi2_1 > chi2); p = 1 when b + c = 0.
McNemarResult mcnemar_yates(std::span<const int> preds_a, std::span<const int> preds_b, std::span<const int> y_true);

// Upper tail of the chi-square distribution with one degree of freedom:
// erfc(sqrt(x / 2)). Throws Error(domain) for negative or NaN x.
double chi2_sf_1df(double x);

}  // namespace fednb

#include "fednb/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fednb/error.hpp"

namespace fednb {

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw Error(ErrorKind::domain, "empty weight vector");
  double total = 0.0;
  for (double x : w_) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::domain, "weights must be finite and non-negative");
    total += x;
  }
  if (std::abs(total - 1.0) > kSumTolerance) throw Error(ErrorKind::domain, "weights must sum to 1");
}

WeightVector WeightVector::uniform(std::size_t k) {
  return WeightVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

double WeightVector::min() const { return *std::min_element(w_.begin(), w_.end()); }

}  // namespace fednb

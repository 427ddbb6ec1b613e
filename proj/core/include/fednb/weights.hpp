#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fednb {

// Point on the probability simplex: one non-negative weight per node.
class WeightVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  WeightVector() = default;
  // Throws Error(domain) unless entries are >= 0 and sum to 1 within tolerance.
  explicit WeightVector(std::vector<double> w);
  static WeightVector uniform(std::size_t k);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }
  double min() const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> w_;
};

}  // namespace fednb

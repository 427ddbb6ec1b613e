#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "fednb/data.hpp"

namespace fednb {

// Reserved score for a class a model has no data for. Only ever assigned
// explicitly; log-space arithmetic in this library never underflows to it.
inline constexpr double kAbsentScore = -std::numeric_limits<double>::infinity();

inline bool is_absent(double score) noexcept { return score == kAbsentScore; }

// One encoded sample: categorical codes and raw numerical values.
struct EncodedRow {
  std::span<const int> categorical;
  std::span<const double> numerical;
};

inline EncodedRow row_of(const Dataset& data, std::size_t r) {
  return {data.categorical.row(r), data.numerical.row(r)};
}

// Per-column standardization, fitted on one node's training rows.
struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> scale;  // population std; 1 for constant columns

  static ScalerParams fit(const Matrix<double>& x);
  double transform(std::size_t column, double value) const { return (value - mean[column]) / scale[column]; }
  double inverse(std::size_t column, double z) const { return z * scale[column] + mean[column]; }

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

// Laplace-smoothed class-conditional category probabilities. Each column has
// n_cats + 1 slots; the last is the out-of-distribution slot.
struct CategoricalTable {
  double smoothing = 1.0;
  std::vector<int> n_cats;
  // log_prob[column][class][slot]
  std::vector<std::vector<std::vector<double>>> log_prob;

  friend bool operator==(const CategoricalTable&, const CategoricalTable&) = default;
};

// Per-class Gaussian parameters on standardized values (n_classes x columns).
struct GaussianParams {
  Matrix<double> mean;
  Matrix<double> var;

  friend bool operator==(const GaussianParams&, const GaussianParams&) = default;
};

struct HybridModel {
  int n_classes = 0;
  ScalerParams scaler;
  CategoricalTable cat;
  GaussianParams gauss;
  std::vector<double> log_prior;  // kAbsentScore for classes without training rows
  std::vector<bool> classes_present;
  std::size_t n_train = 0;

  std::size_t n_categorical() const noexcept { return cat.n_cats.size(); }
  std::size_t n_numerical() const noexcept { return scaler.mean.size(); }
  bool present(int c) const { return classes_present.at(static_cast<std::size_t>(c)); }

  friend bool operator==(const HybridModel&, const HybridModel&) = default;
};

inline constexpr double kVarianceFloorScale = 1e-9;

// Fits one node's classifier. Throws Error(fit) on an empty dataset.
HybridModel fit_hybrid(const Dataset& train, double smoothing = 1.0);

// Per-class joint log-score of the row:
//   log P(c) + sum log P_cat(code | c) + sum log N(z; mean_c, var_c) - sum log scale
// The last term is the standardization Jacobian, which makes the score a
// density over raw feature values so scores from nodes with different scalers
// are comparable. Absent classes get kAbsentScore.
std::vector<double> joint_log_scores(const HybridModel& model, const EncodedRow& row);
void joint_log_scores(const HybridModel& model, const EncodedRow& row, std::span<double> out);

// argmax over present classes; ties go to the smallest class index.
int predict_local(const HybridModel& model, const EncodedRow& row);
std::vector<int> predict_local(const HybridModel& model, const Dataset& data);

// Index of the largest finite entry, smallest index on ties; -1 if none.
int argmax_score(std::span<const double> scores);

// Line-oriented text format, header "fednb-hybrid-model 1". Doubles are
// written in shortest round-trip form, so save/load is lossless.
void save_model(const HybridModel& model, std::ostream& out);
void save_model(const HybridModel& model, const std::filesystem::path& path);
HybridModel load_model(std::istream& in, const std::string& source = "<model>");
HybridModel load_model(const std::filesystem::path& path);

}  // namespace fednb

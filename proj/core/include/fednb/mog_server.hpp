#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fednb/data.hpp"
#include "fednb/local_model.hpp"
#include "fednb/weights.hpp"

namespace fednb {

// Contribution of a row whose true class is absent from every node.
inline constexpr double kAbsentClassPenalty = 50.0;

// K local models evaluated as one mixture. Parameters are never merged.
struct MoGEnsemble {
  std::vector<HybridModel> models;
  WeightVector weights;

  std::size_t k() const noexcept { return models.size(); }
  int n_classes() const { return models.at(0).n_classes; }
  // Throws Error(ensemble) on empty ensembles, weight/model count mismatch or
  // models that disagree on the feature layout or class universe.
  void validate() const;
};

// log sum exp over the entries that are not kAbsentScore; kAbsentScore when
// every entry is absent.
double logsumexp(std::span<const double> v);

// v_i - logsumexp(v). Absent entries stay absent. Throws Error(normalization)
// when no entry is finite.
std::vector<double> log_softmax(std::span<const double> v);
void log_softmax_inplace(std::span<double> v);

// Mixture score per class from per-node joint scores (node_scores[k][c]):
// logsumexp_k(log w_k + s_k(c)) over the nodes where class c is present.
// Weights of nodes lacking c are not redistributed.
void mix_node_scores(std::span<const double> log_weights, std::span<const double> node_scores,
                     std::size_t n_classes, std::span<double> out);

std::vector<double> mog_log_scores(const MoGEnsemble& ensemble, const EncodedRow& row);

double anll(const MoGEnsemble& ensemble, const Dataset& data);
std::vector<int> predict_mog(const MoGEnsemble& ensemble, const Dataset& data);

// Joint scores of every node on every row of a fixed dataset. Mixture
// metrics for many weight vectors then cost O(rows * K * classes) each.
class NodeScoreTable {
 public:
  static NodeScoreTable build(std::span<const HybridModel> models, const Dataset& data);

  std::size_t k() const noexcept { return k_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::span<const int> labels() const noexcept { return labels_; }

  // scores of all nodes for one row, laid out [node][class]
  std::span<const double> row(std::size_t r) const {
    return {scores_.data() + r * k_ * n_classes_, k_ * n_classes_};
  }

  void mixture(std::size_t r, std::span<const double> log_weights, std::span<double> out) const;
  double anll(const WeightVector& w) const;
  std::vector<int> predict(const WeightVector& w) const;
  // Count of mixture scores that are NaN or +/-inf without being the sentinel.
  std::size_t count_invalid(const WeightVector& w) const;

 private:
  std::size_t k_ = 0;
  std::size_t rows_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<double> scores_;
  std::vector<int> labels_;
};

std::vector<double> log_weights(const WeightVector& w);

}  // namespace fednb

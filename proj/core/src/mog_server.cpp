#include "fednb/mog_server.hpp"

#include <algorithm>
#include <cmath>

#include "fednb/error.hpp"

namespace fednb {

void MoGEnsemble::validate() const {
  if (models.empty()) throw Error(ErrorKind::ensemble, "ensemble has no models");
  if (weights.size() != models.size()) {
    throw Error(ErrorKind::ensemble, std::to_string(weights.size()) + " weights for " +
                                         std::to_string(models.size()) + " models");
  }
  const auto& first = models.front();
  for (const auto& m : models) {
    if (m.n_classes != first.n_classes || m.cat.n_cats != first.cat.n_cats ||
        m.n_numerical() != first.n_numerical()) {
      throw Error(ErrorKind::ensemble, "models disagree on schema or class universe");
    }
  }
}

double logsumexp(std::span<const double> v) {
  double top = kAbsentScore;
  for (double x : v) top = std::max(top, x);
  if (is_absent(top)) return kAbsentScore;
  if (std::isinf(top)) return top;
  double sum = 0.0;
  for (double x : v) {
    if (!is_absent(x)) sum += std::exp(x - top);
  }
  return top + std::log(sum);
}

void log_softmax_inplace(std::span<double> v) {
  for (double x : v) {
    if (std::isnan(x)) throw Error(ErrorKind::normalization, "NaN score");
  }
  const double lse = logsumexp(v);
  if (!std::isfinite(lse)) throw Error(ErrorKind::normalization, "no finite score to normalize");
  for (auto& x : v) {
    if (!is_absent(x)) x -= lse;
  }
}

std::vector<double> log_softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  log_softmax_inplace(out);
  return out;
}

std::vector<double> log_weights(const WeightVector& w) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] > 0.0 ? std::log(w[i]) : kAbsentScore;
  return out;
}

void mix_node_scores(std::span<const double> log_w, std::span<const double> node_scores, std::size_t n_classes,
                     std::span<double> out) {
  const auto k = log_w.size();
  for (std::size_t c = 0; c < n_classes; ++c) {
    double top = kAbsentScore;
    for (std::size_t node = 0; node < k; ++node) {
      const double s = node_scores[node * n_classes + c];
      if (is_absent(s) || is_absent(log_w[node])) continue;
      top = std::max(top, log_w[node] + s);
    }
    if (is_absent(top)) {
      out[c] = kAbsentScore;
      continue;
    }
    double sum = 0.0;
    for (std::size_t node = 0; node < k; ++node) {
      const double s = node_scores[node * n_classes + c];
      if (is_absent(s) || is_absent(log_w[node])) continue;
      sum += std::exp(log_w[node] + s - top);
    }
    out[c] = top + std::log(sum);
  }
}

std::vector<double> mog_log_scores(const MoGEnsemble& ensemble, const EncodedRow& row) {
  ensemble.validate();
  const auto n_classes = static_cast<std::size_t>(ensemble.n_classes());
  std::vector<double> node_scores(ensemble.k() * n_classes);
  for (std::size_t node = 0; node < ensemble.k(); ++node) {
    joint_log_scores(ensemble.models[node], row, std::span(node_scores).subspan(node * n_classes, n_classes));
  }
  std::vector<double> out(n_classes);
  mix_node_scores(log_weights(ensemble.weights), node_scores, n_classes, out);
  return out;
}

NodeScoreTable NodeScoreTable::build(std::span<const HybridModel> models, const Dataset& data) {
  if (models.empty()) throw Error(ErrorKind::ensemble, "ensemble has no models");
  NodeScoreTable t;
  t.k_ = models.size();
  t.rows_ = data.rows();
  t.n_classes_ = static_cast<std::size_t>(models.front().n_classes);
  t.labels_ = data.labels;
  t.scores_.resize(t.rows_ * t.k_ * t.n_classes_);
  for (std::size_t r = 0; r < t.rows_; ++r) {
    const auto row = row_of(data, r);
    for (std::size_t node = 0; node < t.k_; ++node) {
      if (models[node].n_classes != models.front().n_classes) {
        throw Error(ErrorKind::ensemble, "models disagree on the class universe");
      }
      joint_log_scores(models[node], row,
                       std::span(t.scores_).subspan((r * t.k_ + node) * t.n_classes_, t.n_classes_));
    }
  }
  return t;
}

void NodeScoreTable::mixture(std::size_t r, std::span<const double> log_w, std::span<double> out) const {
  mix_node_scores(log_w, row(r), n_classes_, out);
}

double NodeScoreTable::anll(const WeightVector& w) const {
  if (rows_ == 0) throw Error(ErrorKind::metric, "ANLL of an empty dataset");
  if (w.size() != k_) throw Error(ErrorKind::ensemble, "weight count does not match model count");
  const auto lw = log_weights(w);
  std::vector<double> mix(n_classes_);
  double total = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) {
    mixture(r, lw, mix);
    const auto y = static_cast<std::size_t>(labels_[r]);
    if (is_absent(mix[y])) {
      total += kAbsentClassPenalty;
      continue;
    }
    log_softmax_inplace(mix);
    total -= mix[y];
  }
  return total / static_cast<double>(rows_);
}

std::vector<int> NodeScoreTable::predict(const WeightVector& w) const {
  if (w.size() != k_) throw Error(ErrorKind::ensemble, "weight count does not match model count");
  const auto lw = log_weights(w);
  std::vector<double> mix(n_classes_);
  std::vector<int> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    mixture(r, lw, mix);
    out[r] = argmax_score(mix);
  }
  return out;
}

std::size_t NodeScoreTable::count_invalid(const WeightVector& w) const {
  const auto lw = log_weights(w);
  std::vector<double> mix(n_classes_);
  std::size_t bad = 0;
  for (std::size_t r = 0; r < rows_; ++r) {
    mixture(r, lw, mix);
    for (double s : mix) {
      if (!is_absent(s) && !std::isfinite(s)) ++bad;
    }
  }
  return bad;
}

double anll(const MoGEnsemble& ensemble, const Dataset& data) {
  ensemble.validate();
  if (data.rows() == 0) throw Error(ErrorKind::metric, "ANLL of an empty dataset");
  return NodeScoreTable::build(ensemble.models, data).anll(ensemble.weights);
}

std::vector<int> predict_mog(const MoGEnsemble& ensemble, const Dataset& data) {
  ensemble.validate();
  return NodeScoreTable::build(ensemble.models, data).predict(ensemble.weights);
}

}  // namespace fednb

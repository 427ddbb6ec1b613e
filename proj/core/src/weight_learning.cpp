#include "fednb/weight_learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fednb/error.hpp"
#include "fednb/nelder_mead.hpp"
#include "fednb/rng.hpp"

namespace fednb {

void OptimizerConfig::validate(std::size_t k) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::config, "lambda must be >= 0");
  if (!(floor_delta >= 0.0)) throw Error(ErrorKind::config, "floor delta must be >= 0");
  if (!(static_cast<double>(k) * floor_delta < 1.0)) {
    throw Error(ErrorKind::config, "K * delta must be < 1 (K = " + std::to_string(k) + ")");
  }
  if (max_iters <= 0) throw Error(ErrorKind::config, "max_iters must be positive");
  if (n_starts <= 0) throw Error(ErrorKind::config, "n_starts must be positive");
}

WeightVector to_floored_simplex(std::span<const double> theta, double delta) {
  const auto k = theta.size() + 1;
  double top = 0.0;
  for (double t : theta) top = std::max(top, t);
  std::vector<double> s(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    s[i] = std::exp((i + 1 < k ? theta[i] : 0.0) - top);
    total += s[i];
  }
  const double free_mass = 1.0 - static_cast<double>(k) * delta;
  for (auto& x : s) x = delta + free_mass * (x / total);
  return WeightVector(std::move(s));
}

std::vector<double> from_simplex(const WeightVector& w, double delta) {
  const auto k = w.size();
  if (k < 2) throw Error(ErrorKind::inversion, "need at least two weights");
  const double free_mass = 1.0 - static_cast<double>(k) * delta;
  if (!(free_mass > 0.0)) throw Error(ErrorKind::inversion, "K * delta must be < 1");
  std::vector<double> log_s(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double wi = w[i] <= delta ? delta + kFloorClip : w[i];
    if (!(wi > delta)) throw Error(ErrorKind::inversion, "weight at or below the floor after clipping");
    log_s[i] = std::log((wi - delta) / free_mass);
  }
  std::vector<double> theta(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) theta[i] = log_s[i] - log_s[k - 1];
  return theta;
}

double prior_penalty(const WeightVector& w, const WeightVector& prior) {
  if (w.size() != prior.size()) throw Error(ErrorKind::ensemble, "prior size does not match weight count");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - prior[i]) * (w[i] - prior[i]);
  return s;
}

double objective(const WeightVector& w, const NodeScoreTable& val_scores, const WeightVector& prior, double lambda) {
  return val_scores.anll(w) + lambda * prior_penalty(w, prior);
}

double objective(const WeightVector& w, const MoGEnsemble& ensemble, const Dataset& val, const WeightVector& prior,
                 double lambda) {
  MoGEnsemble e{ensemble.models, w};
  return anll(e, val) + lambda * prior_penalty(w, prior);
}

LearnedWeights learn_weights_icc(const NodeScoreTable& val_scores, const WeightVector& prior,
                                 const OptimizerConfig& config) {
  const auto k = val_scores.k();
  if (k < 2) throw Error(ErrorKind::ensemble, "weight learning needs at least two nodes");
  if (prior.size() != k) throw Error(ErrorKind::ensemble, "prior size does not match model count");
  if (val_scores.rows() == 0) throw Error(ErrorKind::metric, "empty validation set");
  config.validate(k);

  // start points on the simplex
  std::vector<std::pair<std::string, WeightVector>> starts;
  starts.emplace_back("prior", prior);
  starts.emplace_back("uniform", WeightVector::uniform(k));
  Rng rng(derive_seed(config.seed, {0x57A7}));
  const auto d1 = dirichlet_symmetric(rng, k, 1.0);
  const auto d2 = dirichlet_symmetric(rng, k, 1.0);
  std::vector<double> mid(k);
  for (std::size_t i = 0; i < k; ++i) mid[i] = 0.5 * (d1[i] + d2[i]);
  starts.emplace_back("dirichlet-1", WeightVector(d1));
  starts.emplace_back("dirichlet-2", WeightVector(d2));
  starts.emplace_back("midpoint", WeightVector(mid));
  for (int extra = 5; extra < config.n_starts; ++extra) {
    starts.emplace_back("dirichlet-" + std::to_string(extra - 2), WeightVector(dirichlet_symmetric(rng, k, 1.0)));
  }
  starts.resize(static_cast<std::size_t>(config.n_starts), starts.front());

  const auto f = [&](std::span<const double> theta) {
    return objective(to_floored_simplex(theta, config.floor_delta), val_scores, prior, config.lambda);
  };
  NelderMeadOptions options;
  options.max_iters = config.max_iters;

  LearnedWeights out;
  std::vector<std::vector<double>> best_theta;
  for (const auto& [label, w0] : starts) {
    const auto theta0 = from_simplex(w0, config.floor_delta);
    const auto nm = nelder_mead(f, theta0, options);
    StartRecord rec;
    rec.label = label;
    const auto w_init = to_floored_simplex(theta0, config.floor_delta);
    rec.initial.assign(w_init.values().begin(), w_init.values().end());
    const auto w_final = to_floored_simplex(nm.x, config.floor_delta);
    rec.final.assign(w_final.values().begin(), w_final.values().end());
    rec.initial_objective = f(theta0);
    rec.final_objective = nm.fx;
    rec.iterations = nm.iterations;
    out.trace.evaluations += static_cast<std::size_t>(nm.evaluations) + 1;
    out.trace.starts.push_back(std::move(rec));
    best_theta.push_back(nm.x);
  }
  std::size_t chosen = 0;
  for (std::size_t i = 1; i < out.trace.starts.size(); ++i) {
    if (out.trace.starts[i].final_objective < out.trace.starts[chosen].final_objective) chosen = i;
  }
  out.trace.chosen = chosen;
  out.weights = to_floored_simplex(best_theta[chosen], config.floor_delta);
  return out;
}

LearnedWeights learn_weights_icc(const MoGEnsemble& ensemble, const Dataset& val, const IccPrior& prior,
                                 const OptimizerConfig& config) {
  if (val.rows() == 0) throw Error(ErrorKind::metric, "empty validation set");
  ensemble.validate();
  return learn_weights_icc(NodeScoreTable::build(ensemble.models, val), prior.normalized, config);
}

WeightVector weights_fedavg(std::span<const std::size_t> node_sizes) {
  if (node_sizes.empty()) throw Error(ErrorKind::size, "no nodes");
  double total = 0.0;
  for (auto n : node_sizes) {
    if (n == 0) throw Error(ErrorKind::size, "node with zero samples");
    total += static_cast<double>(n);
  }
  std::vector<double> w;
  for (auto n : node_sizes) w.push_back(static_cast<double>(n) / total);
  return WeightVector(std::move(w));
}

WeightVector weights_entropy(const Matrix<std::size_t>& counts) {
  if (counts.rows() == 0) throw Error(ErrorKind::size, "no nodes");
  std::vector<double> inv(counts.rows());
  for (std::size_t node = 0; node < counts.rows(); ++node) {
    const auto row = counts.row(node);
    const double total = static_cast<double>(std::accumulate(row.begin(), row.end(), std::size_t{0}));
    if (total == 0.0) throw Error(ErrorKind::undefined_distribution, "node " + std::to_string(node) + " is empty");
    double h = 0.0;
    for (auto n : row) {
      if (n == 0) continue;
      const double p = static_cast<double>(n) / total;
      h -= p * std::log2(p);
    }
    inv[node] = 1.0 / (h + kEntropyEpsilon);
  }
  const double sum = std::accumulate(inv.begin(), inv.end(), 0.0);
  for (auto& x : inv) x /= sum;
  return WeightVector(std::move(inv));
}

}  // namespace fednb

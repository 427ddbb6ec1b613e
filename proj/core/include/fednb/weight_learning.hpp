#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fednb/data.hpp"
#include "fednb/governance.hpp"
#include "fednb/mog_server.hpp"
#include "fednb/weights.hpp"

namespace fednb {

struct OptimizerConfig {
  double lambda = 0.10;
  double floor_delta = 0.05;
  int max_iters = 500;
  int n_starts = 5;
  std::uint64_t seed = 42;

  // Throws Error(config) unless lambda >= 0, 0 <= delta, k * delta < 1,
  // max_iters > 0 and n_starts > 0.
  void validate(std::size_t k) const;
};

struct StartRecord {
  std::string label;  // prior, uniform, dirichlet-1, dirichlet-2, midpoint, dirichlet-N
  std::vector<double> initial;
  std::vector<double> final;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
};

struct OptimizationTrace {
  std::vector<StartRecord> starts;
  std::size_t chosen = 0;
  std::size_t evaluations = 0;
};

// w = delta + (1 - K delta) softmax([theta, 0]), K = theta.size() + 1.
WeightVector to_floored_simplex(std::span<const double> theta, double delta);

// Inverse of to_floored_simplex with the last coordinate fixed at 0. Entries
// at or below delta are first clipped to delta + 1e-6.
std::vector<double> from_simplex(const WeightVector& w, double delta);

inline constexpr double kFloorClip = 1e-6;

double prior_penalty(const WeightVector& w, const WeightVector& prior);

// ANLL(w) + lambda * ||w - prior||^2 on the validation data.
double objective(const WeightVector& w, const MoGEnsemble& ensemble, const Dataset& val, const WeightVector& prior,
                 double lambda);
double objective(const WeightVector& w, const NodeScoreTable& val_scores, const WeightVector& prior, double lambda);

struct LearnedWeights {
  WeightVector weights;
  OptimizationTrace trace;
};

// Multi-start Nelder-Mead over the floored simplex. Starts: the ICC prior,
// the uniform vector, two Dirichlet(1) draws, their elementwise mean, then
// further Dirichlet draws if n_starts > 5.
LearnedWeights learn_weights_icc(const MoGEnsemble& ensemble, const Dataset& val, const IccPrior& prior,
                                 const OptimizerConfig& config);
LearnedWeights learn_weights_icc(const NodeScoreTable& val_scores, const WeightVector& prior,
                                 const OptimizerConfig& config);

// w_k = n_k / sum n.
WeightVector weights_fedavg(std::span<const std::size_t> node_sizes);

inline constexpr double kEntropyEpsilon = 1e-6;

// w_k proportional to 1 / (H_k + 1e-6), H_k the base-2 label entropy of node k.
WeightVector weights_entropy(const Matrix<std::size_t>& per_node_class_counts);

}  // namespace fednb

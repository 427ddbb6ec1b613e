#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fednb/data.hpp"

namespace fednb {

struct SplitConfig {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct Split {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Per class: shuffle, then take round(val_frac * n) rows for validation,
// round(test_frac * n) for test and the rest for training. Each split keeps
// at least one row per class. Index lists are sorted.
SplitIndices stratified_split_indices(std::span<const int> labels, int n_classes, const SplitConfig& config);
Split stratified_split(const Dataset& data, const SplitConfig& config);

struct Partition {
  std::vector<std::vector<std::size_t>> node_indices;
  double alpha = 1.0;
  int attempts = 1;  // 1 + number of empty-node retries

  std::size_t k() const noexcept { return node_indices.size(); }
  std::vector<std::size_t> node_sizes() const;
};

inline constexpr int kMaxPartitionRetries = 100;

// Label-skew partition: per class, proportions ~ Dirichlet(alpha * 1_k) are
// turned into integer counts by largest-remainder apportionment. Retries with
// a fresh sub-seed while any node is empty.
Partition dirichlet_partition(std::span<const int> labels, std::size_t k, double alpha, std::uint64_t seed);

// K x n_classes counts (row-major, K rows).
Matrix<std::size_t> per_node_class_counts(const Partition& partition, std::span<const int> labels, int n_classes);

// Generalized Jensen-Shannon divergence of the node class distributions,
// equal node weights, base 2, divided by log2(K).
double jsd_heterogeneity(const Matrix<std::size_t>& counts);

struct PartitionReport {
  double jsd = 0.0;
  Matrix<std::size_t> per_node_class_counts;
};

PartitionReport report(const Partition& partition, std::span<const int> labels, int n_classes);

// Largest-remainder apportionment of `total` items by proportions `p`
// (ties go to the lower index).
std::vector<std::size_t> apportion(std::span<const double> p, std::size_t total);

}  // namespace fednb

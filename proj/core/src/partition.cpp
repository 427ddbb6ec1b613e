#include "fednb/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fednb/error.hpp"
#include "fednb/rng.hpp"

namespace fednb {

void SplitConfig::validate() const {
  if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0)) {
    throw Error(ErrorKind::config, "split fractions must be positive");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw Error(ErrorKind::config, "split fractions must sum to 1");
  }
}

SplitIndices stratified_split_indices(std::span<const int> labels, int n_classes, const SplitConfig& config) {
  config.validate();
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(static_cast<std::size_t>(labels[i])).push_back(i);

  SplitIndices out;
  Rng rng(config.seed);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    const auto n = rows.size();
    if (n == 0) continue;  // class absent from this data
    if (n < 3) {
      throw Error(ErrorKind::stratification,
                  "class " + std::to_string(c) + " has " + std::to_string(n) + " samples, need at least 3");
    }
    shuffle(rows, rng);
    auto n_val = static_cast<std::size_t>(std::floor(config.val_frac * static_cast<double>(n) + 0.5));
    auto n_test = static_cast<std::size_t>(std::floor(config.test_frac * static_cast<double>(n) + 0.5));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 2);
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1 - n_val);
    out.val.insert(out.val.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.test.insert(out.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val),
                    rows.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
    out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Split stratified_split(const Dataset& data, const SplitConfig& config) {
  const auto idx = stratified_split_indices(data.labels, data.n_classes(), config);
  return {subset(data, idx.train), subset(data, idx.val), subset(data, idx.test)};
}

std::vector<std::size_t> Partition::node_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& n : node_indices) sizes.push_back(n.size());
  return sizes;
}

std::vector<std::size_t> apportion(std::span<const double> p, std::size_t total) {
  const auto k = p.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = p[i] * static_cast<double>(total);
    counts[i] = std::min(total, static_cast<std::size_t>(std::floor(exact)));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // floor() of proportions summing to 1 can only leave items over, at most k of them
  for (std::size_t i = 0; assigned < total; i = (i + 1) % k, ++assigned) ++counts[order[i]];
  while (assigned > total) {
    const auto big = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    --counts[big];
    --assigned;
  }
  return counts;
}

Partition dirichlet_partition(std::span<const int> labels, std::size_t k, double alpha, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorKind::domain, "node count must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::domain, "alpha must be positive");
  if (labels.size() < k) throw Error(ErrorKind::partition_degenerate, "fewer samples than nodes");

  int n_classes = 0;
  for (int y : labels) {
    if (y < 0) throw Error(ErrorKind::label, "negative label");
    n_classes = std::max(n_classes, y + 1);
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  for (int attempt = 0; attempt <= kMaxPartitionRetries; ++attempt) {
    Rng rng(attempt == 0 ? seed : derive_seed(seed, {0xD1C4, static_cast<std::uint64_t>(attempt)}));
    Partition part;
    part.alpha = alpha;
    part.attempts = attempt + 1;
    part.node_indices.assign(k, {});
    for (const auto& members : by_class) {
      auto rows = members;
      shuffle(rows, rng);
      const auto p = dirichlet_symmetric(rng, k, alpha);
      const auto counts = apportion(p, rows.size());
      std::size_t offset = 0;
      for (std::size_t node = 0; node < k; ++node) {
        auto& dst = part.node_indices[node];
        dst.insert(dst.end(), rows.begin() + static_cast<std::ptrdiff_t>(offset),
                   rows.begin() + static_cast<std::ptrdiff_t>(offset + counts[node]));
        offset += counts[node];
      }
    }
    const bool all_filled = std::all_of(part.node_indices.begin(), part.node_indices.end(),
                                        [](const auto& v) { return !v.empty(); });
    if (all_filled) {
      for (auto& v : part.node_indices) std::sort(v.begin(), v.end());
      return part;
    }
  }
  throw Error(ErrorKind::partition_degenerate, "a node stayed empty after " + std::to_string(kMaxPartitionRetries) +
                                                   " retries (alpha = " + std::to_string(alpha) + ")");
}

Matrix<std::size_t> per_node_class_counts(const Partition& partition, std::span<const int> labels, int n_classes) {
  Matrix<std::size_t> counts(partition.k(), static_cast<std::size_t>(n_classes));
  for (std::size_t node = 0; node < partition.k(); ++node) {
    for (auto i : partition.node_indices[node]) ++counts(node, static_cast<std::size_t>(labels[i]));
  }
  return counts;
}

namespace {

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

}  // namespace

double jsd_heterogeneity(const Matrix<std::size_t>& counts) {
  const auto k = counts.rows();
  const auto c = counts.cols();
  if (k < 2) throw Error(ErrorKind::undefined_distribution, "need at least two nodes");
  std::vector<double> mixture(c, 0.0);
  double mean_entropy = 0.0;
  std::vector<double> p(c);
  for (std::size_t node = 0; node < k; ++node) {
    const auto row = counts.row(node);
    const double total = static_cast<double>(std::accumulate(row.begin(), row.end(), std::size_t{0}));
    if (total == 0.0) throw Error(ErrorKind::undefined_distribution, "node " + std::to_string(node) + " is empty");
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = static_cast<double>(row[j]) / total;
      mixture[j] += p[j] / static_cast<double>(k);
    }
    mean_entropy += entropy_bits(p) / static_cast<double>(k);
  }
  const double jsd = (entropy_bits(mixture) - mean_entropy) / std::log2(static_cast<double>(k));
  return std::clamp(jsd, 0.0, 1.0);
}

PartitionReport report(const Partition& partition, std::span<const int> labels, int n_classes) {
  PartitionReport r;
  r.per_node_class_counts = per_node_class_counts(partition, labels, n_classes);
  r.jsd = partition.k() >= 2 ? jsd_heterogeneity(r.per_node_class_counts) : 0.0;
  return r;
}

}  // namespace fednb

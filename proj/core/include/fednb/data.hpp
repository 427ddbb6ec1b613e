#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fednb {

// Row-major dense matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const T> values) {
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }
  void set_cols(std::size_t cols) {
    cols_ = cols;
    rows_ = 0;
    data_.clear();
  }

  const std::vector<T>& flat() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

enum class ColumnKind { categorical, numerical, label };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numerical;

  friend bool operator==(const Column&, const Column&) = default;
};

// Column typing for a tabular file. Columns not listed in a CSV header are an
// error; extra CSV columns are ignored.
struct FeatureSchema {
  std::vector<Column> columns;
  // 0 means "infer from the label values found in the file".
  int n_classes = 0;
  // Optional fixed label universe; code i is label_values[i].
  std::vector<std::string> label_values;

  std::size_t n_categorical() const;
  std::size_t n_numerical() const;
  std::size_t label_index() const;

  // Throws Error(schema) when an invariant is broken. When require_classes is
  // set, n_classes must already be known and >= 2.
  void validate(bool require_classes = false) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

FeatureSchema parse_schema(std::istream& in, const std::string& source = "<schema>");
FeatureSchema load_schema(const std::filesystem::path& path);
void write_schema(const FeatureSchema& schema, std::ostream& out);

// Schema with columns c0.., x0.., label; used by the synthetic generator.
FeatureSchema make_synthetic_schema(int n_categorical, int n_numerical, int n_classes);

// Tabular data after encoding. Categorical codes lie in [0, n_cats[j]];
// the value n_cats[j] is the out-of-distribution code.
struct Dataset {
  FeatureSchema schema;
  Matrix<int> categorical;
  Matrix<double> numerical;
  std::vector<int> labels;
  std::vector<int> n_cats;

  std::size_t rows() const noexcept { return labels.size(); }
  int n_classes() const noexcept { return schema.n_classes; }
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

Dataset subset(const Dataset& data, std::span<const std::size_t> rows);
std::vector<std::size_t> class_counts(std::span<const int> labels, int n_classes);

// Raw text value <-> dense code, per categorical column, plus the label
// mapping. Built from training data only.
class CategoryMap {
 public:
  CategoryMap() = default;
  explicit CategoryMap(std::size_t n_columns);

  std::size_t n_columns() const noexcept { return values_.size(); }
  int n_cats(std::size_t column) const { return static_cast<int>(values_.at(column).size()); }

  // Code for a raw value; n_cats(column) when the value is unseen.
  int encode(std::size_t column, const std::string& raw) const;
  // Adds the value when unseen (first-seen order) and returns its code.
  int insert(std::size_t column, const std::string& raw);
  const std::string& decode(std::size_t column, int code) const;

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  void set_labels(std::vector<std::string> labels);
  std::optional<int> encode_label(const std::string& raw) const;

  friend bool operator==(const CategoryMap& a, const CategoryMap& b) {
    return a.values_ == b.values_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<std::vector<std::string>> values_;
  std::vector<std::unordered_map<std::string, int>> index_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> label_index_;
};

struct LoadedData {
  Dataset dataset;
  CategoryMap categories;
};

// Comma separated, header row first. When `categories` is given, unseen
// categorical values encode to the OOD code and labels must be known.
LoadedData load_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                    const CategoryMap* categories = nullptr);
LoadedData parse_csv(std::istream& in, const FeatureSchema& schema,
                     const CategoryMap* categories = nullptr,
                     const std::string& source = "<csv>");
void write_csv(const Dataset& data, const CategoryMap& categories, const std::filesystem::path& path);
void write_csv(const Dataset& data, const CategoryMap& categories, std::ostream& out);

// Recodes categorical columns against the codes observed in a training
// split: seen codes become dense in first-seen order, everything else maps
// to the new OOD code.
class CategoryRemap {
 public:
  static CategoryRemap fit(const Dataset& train);
  Dataset apply(const Dataset& data) const;
  const std::vector<int>& n_cats() const noexcept { return n_cats_; }

 private:
  std::vector<std::vector<int>> table_;  // old code -> new code, -1 when unseen
  std::vector<int> n_cats_;
};

// Synthetic generator. Numerical features are class-conditional unit-variance
// Gaussians whose class means differ by `separation` in every feature;
// categorical features are class-conditional multinomials.
struct SynthSpec {
  std::size_t n_rows = 0;
  int n_classes = 2;
  int n_categorical = 2;
  int categories_per_column = 4;
  int n_numerical = 4;
  double separation = 6.0;
  std::vector<double> class_weights;  // empty: balanced
  // Per-node degradation level, aligned with the node profile order. Not a
  // column of the data; the experiment runner applies it to node-local copies.
  std::vector<double> node_noise;

  void validate() const;
};

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);
CategoryMap synth_category_map(const SynthSpec& spec);

// Node-local degradation: each label is replaced with a uniformly chosen
// different class with probability `noise`, and every numerical value gets
// zero-mean Gaussian noise with standard deviation noise * feature_std[j].
Dataset degrade(const Dataset& data, double noise, std::span<const double> feature_std,
                std::uint64_t seed);

// Population standard deviation of each numerical column.
std::vector<double> column_std(const Dataset& data);

}  // namespace fednb

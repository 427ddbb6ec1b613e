#include "fednb/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "fednb/error.hpp"
#include "fednb/rng.hpp"
#include "fednb/text.hpp"

namespace fednb {

// ---------------------------------------------------------------- schema

std::size_t FeatureSchema::n_categorical() const {
  return static_cast<std::size_t>(std::count_if(columns.begin(), columns.end(), [](const Column& c) {
    return c.kind == ColumnKind::categorical;
  }));
}

std::size_t FeatureSchema::n_numerical() const {
  return static_cast<std::size_t>(std::count_if(columns.begin(), columns.end(), [](const Column& c) {
    return c.kind == ColumnKind::numerical;
  }));
}

std::size_t FeatureSchema::label_index() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].kind == ColumnKind::label) return i;
  }
  throw Error(ErrorKind::schema, "no label column");
}

void FeatureSchema::validate(bool require_classes) const {
  const auto labels = std::count_if(columns.begin(), columns.end(),
                                    [](const Column& c) { return c.kind == ColumnKind::label; });
  if (labels != 1) {
    throw Error(ErrorKind::schema, "exactly one label column required, found " + std::to_string(labels));
  }
  if (n_categorical() + n_numerical() == 0) {
    throw Error(ErrorKind::schema, "at least one categorical or numerical column required");
  }
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw Error(ErrorKind::schema, "empty column name");
    if (!names.insert(c.name).second) throw Error(ErrorKind::schema, "duplicate column '" + c.name + "'");
  }
  if (n_classes < 0) throw Error(ErrorKind::schema, "n_classes must be positive");
  if (!label_values.empty()) {
    if (n_classes != 0 && static_cast<std::size_t>(n_classes) != label_values.size()) {
      throw Error(ErrorKind::schema, "n_classes disagrees with the labels list");
    }
    if (std::set<std::string>(label_values.begin(), label_values.end()).size() != label_values.size()) {
      throw Error(ErrorKind::schema, "duplicate label value");
    }
  }
  if ((require_classes || n_classes != 0) && n_classes < 2) {
    throw Error(ErrorKind::schema, "n_classes must be >= 2");
  }
}

FeatureSchema parse_schema(std::istream& in, const std::string& source) {
  FeatureSchema schema;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(detail::strip_comment(line));
    if (text.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (text.rfind("column", 0) == 0 && text.size() > 6 && std::isspace(static_cast<unsigned char>(text[6]))) {
      const auto words = detail::split_ws(text);
      if (words.size() != 3) throw Error(ErrorKind::schema, where + ": expected 'column <name> <kind>'");
      Column col{words[1], ColumnKind::numerical};
      if (words[2] == "categorical") {
        col.kind = ColumnKind::categorical;
      } else if (words[2] == "numerical") {
        col.kind = ColumnKind::numerical;
      } else if (words[2] == "label") {
        col.kind = ColumnKind::label;
      } else {
        throw Error(ErrorKind::schema, where + ": unknown column kind '" + words[2] + "'");
      }
      schema.columns.push_back(std::move(col));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::schema, where + ": unrecognised line");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    if (key == "n_classes") {
      schema.n_classes = detail::parse_int(value, where);
    } else if (key == "labels") {
      schema.label_values = detail::split_list(value);
    } else {
      throw Error(ErrorKind::schema, where + ": unknown key '" + key + "'");
    }
  }
  if (schema.n_classes == 0 && !schema.label_values.empty()) {
    schema.n_classes = static_cast<int>(schema.label_values.size());
  }
  schema.validate();
  return schema;
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open schema file " + path.string());
  return parse_schema(in, path.string());
}

void write_schema(const FeatureSchema& schema, std::ostream& out) {
  if (schema.n_classes != 0) out << "n_classes = " << schema.n_classes << '\n';
  if (!schema.label_values.empty()) out << "labels = " << detail::join(schema.label_values, ", ") << '\n';
  for (const auto& c : schema.columns) {
    const char* kind = c.kind == ColumnKind::categorical ? "categorical"
                       : c.kind == ColumnKind::numerical ? "numerical"
                                                         : "label";
    out << "column " << c.name << ' ' << kind << '\n';
  }
}

FeatureSchema make_synthetic_schema(int n_categorical, int n_numerical, int n_classes) {
  FeatureSchema schema;
  for (int j = 0; j < n_categorical; ++j) schema.columns.push_back({"c" + std::to_string(j), ColumnKind::categorical});
  for (int j = 0; j < n_numerical; ++j) schema.columns.push_back({"x" + std::to_string(j), ColumnKind::numerical});
  schema.columns.push_back({"label", ColumnKind::label});
  schema.n_classes = n_classes;
  for (int c = 0; c < n_classes; ++c) schema.label_values.push_back(std::to_string(c));
  return schema;
}

// ---------------------------------------------------------------- dataset

void Dataset::validate() const {
  const auto n = labels.size();
  if (categorical.rows() != n || numerical.rows() != n) {
    throw Error(ErrorKind::shape, "row counts differ between categorical, numerical and labels");
  }
  if (categorical.cols() != schema.n_categorical() || numerical.cols() != schema.n_numerical()) {
    throw Error(ErrorKind::shape, "matrix widths disagree with schema");
  }
  if (n_cats.size() != categorical.cols()) throw Error(ErrorKind::shape, "n_cats size disagrees with schema");
  for (int y : labels) {
    if (y < 0 || y >= schema.n_classes) {
      throw Error(ErrorKind::label, "label " + std::to_string(y) + " outside [0, " +
                                        std::to_string(schema.n_classes) + ")");
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < categorical.cols(); ++j) {
      const int code = categorical(r, j);
      if (code < 0 || code > n_cats[j]) throw Error(ErrorKind::shape, "categorical code out of range");
    }
  }
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.schema = data.schema;
  out.n_cats = data.n_cats;
  out.categorical = Matrix<int>(rows.size(), data.categorical.cols());
  out.numerical = Matrix<double>(rows.size(), data.numerical.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    std::copy_n(data.categorical.row(r).begin(), data.categorical.cols(), out.categorical.row(i).begin());
    std::copy_n(data.numerical.row(r).begin(), data.numerical.cols(), out.numerical.row(i).begin());
    out.labels.push_back(data.labels.at(r));
  }
  return out;
}

std::vector<std::size_t> class_counts(std::span<const int> labels, int n_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

// ---------------------------------------------------------------- category map

CategoryMap::CategoryMap(std::size_t n_columns) : values_(n_columns), index_(n_columns) {}

int CategoryMap::encode(std::size_t column, const std::string& raw) const {
  const auto& idx = index_.at(column);
  const auto it = idx.find(raw);
  return it == idx.end() ? n_cats(column) : it->second;
}

int CategoryMap::insert(std::size_t column, const std::string& raw) {
  auto& idx = index_.at(column);
  const auto [it, added] = idx.emplace(raw, static_cast<int>(values_[column].size()));
  if (added) values_[column].push_back(raw);
  return it->second;
}

const std::string& CategoryMap::decode(std::size_t column, int code) const {
  static const std::string ood = "<ood>";
  const auto& vals = values_.at(column);
  if (code < 0 || static_cast<std::size_t>(code) >= vals.size()) return ood;
  return vals[static_cast<std::size_t>(code)];
}

void CategoryMap::set_labels(std::vector<std::string> labels) {
  labels_ = std::move(labels);
  label_index_.clear();
  for (std::size_t i = 0; i < labels_.size(); ++i) label_index_.emplace(labels_[i], static_cast<int>(i));
}

std::optional<int> CategoryMap::encode_label(const std::string& raw) const {
  const auto it = label_index_.find(raw);
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- csv

namespace {

// Numeric-aware ordering: numbers sort by value, and before any text.
bool label_less(const std::string& a, const std::string& b) {
  const auto na = detail::try_parse_double(a);
  const auto nb = detail::try_parse_double(b);
  if (na && nb) return *na < *nb || (*na == *nb && a < b);
  if (na != nb) return na.has_value();
  return a < b;
}

}  // namespace

LoadedData parse_csv(std::istream& in, const FeatureSchema& schema, const CategoryMap* categories,
                     const std::string& source) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::schema, source + ": missing header row");
  const auto header = detail::split_csv(detail::chomp(line));

  // position of each schema column in the file
  std::vector<std::size_t> position(schema.columns.size());
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    const auto it = std::find(header.begin(), header.end(), schema.columns[i].name);
    if (it == header.end()) throw Error(ErrorKind::schema, source + ": missing column '" + schema.columns[i].name + "'");
    position[i] = static_cast<std::size_t>(it - header.begin());
  }

  const auto n_cat = schema.n_categorical();
  const auto n_num = schema.n_numerical();
  LoadedData out;
  out.categories = categories ? *categories : CategoryMap(n_cat);
  if (out.categories.n_columns() != n_cat) {
    throw Error(ErrorKind::schema, source + ": category map has a different number of columns");
  }
  const bool build_map = categories == nullptr;

  Matrix<int> cat(0, n_cat);
  Matrix<double> num(0, n_num);
  std::vector<std::string> raw_labels;
  std::vector<int> cat_row(n_cat);
  std::vector<double> num_row(n_num);
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    const auto text = detail::chomp(line);
    if (text.empty()) continue;
    ++row_no;
    const auto fields = detail::split_csv(text);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::parse, source + ": row " + std::to_string(row_no) + " has " +
                                        std::to_string(fields.size()) + " fields, header has " +
                                        std::to_string(header.size()));
    }
    std::size_t ci = 0;
    std::size_t ni = 0;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      const auto& field = fields[position[i]];
      switch (schema.columns[i].kind) {
        case ColumnKind::categorical:
          cat_row[ci] = build_map ? out.categories.insert(ci, field) : out.categories.encode(ci, field);
          ++ci;
          break;
        case ColumnKind::numerical: {
          const auto v = detail::try_parse_double(field);
          if (!v) {
            throw Error(ErrorKind::parse, source + ": row " + std::to_string(row_no) + ", column '" +
                                              schema.columns[i].name + "': not a number: '" + field + "'");
          }
          num_row[ni++] = *v;
          break;
        }
        case ColumnKind::label:
          raw_labels.push_back(field);
          break;
      }
    }
    cat.append_row(cat_row);
    num.append_row(num_row);
  }

  // label universe: existing map, then schema list, then sorted distinct values
  if (build_map) {
    std::vector<std::string> universe = schema.label_values;
    if (universe.empty()) {
      std::set<std::string> seen(raw_labels.begin(), raw_labels.end());
      universe.assign(seen.begin(), seen.end());
      std::sort(universe.begin(), universe.end(), label_less);
      if (schema.n_classes != 0 && universe.size() > static_cast<std::size_t>(schema.n_classes)) {
        throw Error(ErrorKind::label, source + ": found " + std::to_string(universe.size()) +
                                          " label values but n_classes = " + std::to_string(schema.n_classes));
      }
    }
    out.categories.set_labels(std::move(universe));
  }

  out.dataset.schema = schema;
  if (out.dataset.schema.n_classes == 0) {
    out.dataset.schema.n_classes = static_cast<int>(out.categories.labels().size());
  }
  out.dataset.schema.label_values = out.categories.labels();
  out.dataset.labels.reserve(raw_labels.size());
  for (std::size_t r = 0; r < raw_labels.size(); ++r) {
    const auto code = out.categories.encode_label(raw_labels[r]);
    if (!code) {
      throw Error(ErrorKind::label, source + ": row " + std::to_string(r + 1) + ": unknown label '" + raw_labels[r] + "'");
    }
    out.dataset.labels.push_back(*code);
  }
  out.dataset.categorical = std::move(cat);
  out.dataset.numerical = std::move(num);
  out.dataset.n_cats.resize(n_cat);
  for (std::size_t j = 0; j < n_cat; ++j) out.dataset.n_cats[j] = out.categories.n_cats(j);
  out.dataset.schema.validate(true);
  out.dataset.validate();
  return out;
}

LoadedData load_csv(const std::filesystem::path& path, const FeatureSchema& schema, const CategoryMap* categories) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return parse_csv(in, schema, categories, path.string());
}

void write_csv(const Dataset& data, const CategoryMap& categories, std::ostream& out) {
  const auto& cols = data.schema.columns;
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].name;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    std::size_t ci = 0;
    std::size_t ni = 0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out << ',';
      switch (cols[i].kind) {
        case ColumnKind::categorical:
          out << categories.decode(ci, data.categorical(r, ci));
          ++ci;
          break;
        case ColumnKind::numerical:
          out << detail::format_exact(data.numerical(r, ni++));
          break;
        case ColumnKind::label:
          out << categories.labels().at(static_cast<std::size_t>(data.labels[r]));
          break;
      }
    }
    out << '\n';
  }
}

void write_csv(const Dataset& data, const CategoryMap& categories, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  write_csv(data, categories, out);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

// ---------------------------------------------------------------- remap

CategoryRemap CategoryRemap::fit(const Dataset& train) {
  CategoryRemap remap;
  const auto n_cat = train.categorical.cols();
  remap.table_.resize(n_cat);
  remap.n_cats_.assign(n_cat, 0);
  for (std::size_t j = 0; j < n_cat; ++j) {
    remap.table_[j].assign(static_cast<std::size_t>(train.n_cats.at(j)) + 1, -1);
  }
  for (std::size_t r = 0; r < train.rows(); ++r) {
    for (std::size_t j = 0; j < n_cat; ++j) {
      auto& slot = remap.table_[j].at(static_cast<std::size_t>(train.categorical(r, j)));
      if (slot < 0) slot = remap.n_cats_[j]++;
    }
  }
  return remap;
}

Dataset CategoryRemap::apply(const Dataset& data) const {
  if (data.categorical.cols() != table_.size()) throw Error(ErrorKind::shape, "remap column count mismatch");
  Dataset out = data;
  out.n_cats = n_cats_;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < table_.size(); ++j) {
      const auto old = static_cast<std::size_t>(data.categorical(r, j));
      const int mapped = old < table_[j].size() ? table_[j][old] : -1;
      out.categorical(r, j) = mapped < 0 ? n_cats_[j] : mapped;
    }
  }
  return out;
}

// ---------------------------------------------------------------- synthetic

void SynthSpec::validate() const {
  if (n_rows == 0) throw Error(ErrorKind::spec, "n_rows must be positive");
  if (n_classes < 2) throw Error(ErrorKind::spec, "n_classes must be >= 2");
  if (n_categorical < 0 || n_numerical < 0 || n_categorical + n_numerical == 0) {
    throw Error(ErrorKind::spec, "need at least one feature column");
  }
  if (n_categorical > 0 && categories_per_column < 1) throw Error(ErrorKind::spec, "categories_per_column must be >= 1");
  if (!(separation >= 0.0)) throw Error(ErrorKind::spec, "separation must be >= 0");
  if (!class_weights.empty()) {
    if (class_weights.size() != static_cast<std::size_t>(n_classes)) {
      throw Error(ErrorKind::spec, "class_weights must have n_classes entries");
    }
    for (double w : class_weights) {
      if (!(w > 0.0)) throw Error(ErrorKind::spec, "class weights must be positive");
    }
  }
  for (double v : node_noise) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::spec, "node noise must lie in [0, 1]");
  }
}

CategoryMap synth_category_map(const SynthSpec& spec) {
  CategoryMap map(static_cast<std::size_t>(spec.n_categorical));
  for (int j = 0; j < spec.n_categorical; ++j) {
    for (int v = 0; v < spec.categories_per_column; ++v) {
      map.insert(static_cast<std::size_t>(j), "v" + std::to_string(v));
    }
  }
  std::vector<std::string> labels;
  for (int c = 0; c < spec.n_classes; ++c) labels.push_back(std::to_string(c));
  map.set_labels(std::move(labels));
  return map;
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto n_classes = static_cast<std::size_t>(spec.n_classes);
  const auto n_cat = static_cast<std::size_t>(spec.n_categorical);
  const auto n_num = static_cast<std::size_t>(spec.n_numerical);
  const auto n_levels = static_cast<std::size_t>(spec.categories_per_column);

  Rng structure(derive_seed(seed, {0x5717}));
  // Per feature, a random permutation of classes fixes the order of the class
  // means, so every pair of classes is at least `separation` apart.
  std::vector<std::vector<double>> means(n_num, std::vector<double>(n_classes));
  for (auto& m : means) {
    std::vector<int> order(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) order[c] = static_cast<int>(c);
    shuffle(order, structure);
    for (std::size_t c = 0; c < n_classes; ++c) m[c] = spec.separation * order[c];
  }
  // cumulative class-conditional category probabilities
  std::vector<std::vector<std::vector<double>>> cat_cdf(n_cat, std::vector<std::vector<double>>(n_classes));
  for (auto& per_class : cat_cdf) {
    for (auto& cdf : per_class) {
      cdf = dirichlet_symmetric(structure, n_levels, 1.0);
      for (std::size_t v = 1; v < n_levels; ++v) cdf[v] += cdf[v - 1];
    }
  }
  std::vector<double> class_cdf(n_classes, 1.0);
  if (!spec.class_weights.empty()) class_cdf = spec.class_weights;
  for (std::size_t c = 1; c < n_classes; ++c) class_cdf[c] += class_cdf[c - 1];
  for (auto& x : class_cdf) x /= class_cdf.back();

  auto pick = [](const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
  };

  Dataset data;
  data.schema = make_synthetic_schema(spec.n_categorical, spec.n_numerical, spec.n_classes);
  data.n_cats.assign(n_cat, spec.categories_per_column);
  data.categorical = Matrix<int>(spec.n_rows, n_cat);
  data.numerical = Matrix<double>(spec.n_rows, n_num);
  data.labels.resize(spec.n_rows);

  Rng rows(derive_seed(seed, {0x20f5}));
  for (std::size_t r = 0; r < spec.n_rows; ++r) {
    const int y = pick(class_cdf, uniform01(rows));
    data.labels[r] = y;
    for (std::size_t j = 0; j < n_cat; ++j) data.categorical(r, j) = pick(cat_cdf[j][static_cast<std::size_t>(y)], uniform01(rows));
    for (std::size_t j = 0; j < n_num; ++j) {
      data.numerical(r, j) = means[j][static_cast<std::size_t>(y)] + standard_normal(rows);
    }
  }
  return data;
}

Dataset degrade(const Dataset& data, double noise, std::span<const double> feature_std, std::uint64_t seed) {
  if (!(noise >= 0.0 && noise <= 1.0)) throw Error(ErrorKind::spec, "noise must lie in [0, 1]");
  if (feature_std.size() != data.numerical.cols()) throw Error(ErrorKind::shape, "feature_std size mismatch");
  Dataset out = data;
  if (noise == 0.0) return out;
  Rng rng(seed);
  const int n_classes = data.n_classes();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    if (uniform01(rng) < noise) {
      // uniform over the other classes
      const int shift = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_classes - 1)));
      out.labels[r] = (out.labels[r] + shift) % n_classes;
    }
    for (std::size_t j = 0; j < out.numerical.cols(); ++j) {
      out.numerical(r, j) += noise * feature_std[j] * standard_normal(rng);
    }
  }
  return out;
}

std::vector<double> column_std(const Dataset& data) {
  const auto n = data.rows();
  const auto cols = data.numerical.cols();
  std::vector<double> mean(cols, 0.0);
  std::vector<double> out(cols, 0.0);
  if (n == 0) return out;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < cols; ++j) mean[j] += data.numerical(r, j);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = data.numerical(r, j) - mean[j];
      out[j] += d * d;
    }
  }
  for (auto& v : out) v = std::sqrt(v / static_cast<double>(n));
  return out;
}

}  // namespace fednb

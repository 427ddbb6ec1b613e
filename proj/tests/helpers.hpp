#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "fednb/data.hpp"
#include "fednb/rng.hpp"

namespace fednb::test {

inline std::filesystem::path source_dir() { return FEDNB_SOURCE_DIR; }

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fednb_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline LoadedData csv_from_text(const std::string& text, const FeatureSchema& schema,
                                const CategoryMap* map = nullptr) {
  std::istringstream in(text);
  return parse_csv(in, schema, map, "<test>");
}

// Small random dataset: up to n_cat categorical and n_num numerical columns.
inline Dataset random_dataset(Rng& rng, std::size_t rows, int n_classes, int n_cat, int n_num, int cats) {
  Dataset d;
  d.schema = make_synthetic_schema(n_cat, n_num, n_classes);
  d.categorical.set_cols(static_cast<std::size_t>(n_cat));
  d.numerical.set_cols(static_cast<std::size_t>(n_num));
  d.n_cats.assign(static_cast<std::size_t>(n_cat), cats);
  std::vector<int> c(static_cast<std::size_t>(n_cat));
  std::vector<double> x(static_cast<std::size_t>(n_num));
  for (std::size_t r = 0; r < rows; ++r) {
    const int y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_classes)));
    for (auto& v : c) v = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cats)));
    for (auto& v : x) v = 3.0 * standard_normal(rng) + y + 10.0 * uniform01(rng);
    d.categorical.append_row(std::span<const int>(c));
    d.numerical.append_row(std::span<const double>(x));
    d.labels.push_back(y);
  }
  return d;
}

}  // namespace fednb::test

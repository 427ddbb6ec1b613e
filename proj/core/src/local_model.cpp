#include "fednb/local_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fednb/error.hpp"
#include "fednb/text.hpp"

namespace fednb {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 * pi)

double log_normal_pdf(double z, double mean, double var) {
  const double d = z - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

}  // namespace

ScalerParams ScalerParams::fit(const Matrix<double>& x) {
  const auto n = x.rows();
  const auto cols = x.cols();
  ScalerParams s;
  s.mean.assign(cols, 0.0);
  s.scale.assign(cols, 1.0);
  if (n == 0) return s;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < cols; ++j) s.mean[j] += x(r, j);
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> ss(cols, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = x(r, j) - s.mean[j];
      ss[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < cols; ++j) {
    const double sd = std::sqrt(ss[j] / static_cast<double>(n));
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

HybridModel fit_hybrid(const Dataset& train, double smoothing) {
  const auto n = train.rows();
  if (n == 0) throw Error(ErrorKind::fit, "empty training set");
  if (!(smoothing > 0.0)) throw Error(ErrorKind::fit, "smoothing must be positive");
  train.validate();

  const auto n_classes = static_cast<std::size_t>(train.n_classes());
  const auto n_cat = train.categorical.cols();
  const auto n_num = train.numerical.cols();

  HybridModel m;
  m.n_classes = train.n_classes();
  m.n_train = n;
  m.scaler = ScalerParams::fit(train.numerical);

  const auto counts = class_counts(train.labels, train.n_classes());
  m.classes_present.resize(n_classes);
  m.log_prior.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    m.classes_present[c] = counts[c] > 0;
    m.log_prior[c] = counts[c] > 0 ? std::log(static_cast<double>(counts[c]) / static_cast<double>(n)) : kAbsentScore;
  }

  // categorical: (count + a) / (class_total + a * (n_cats + 1))
  m.cat.smoothing = smoothing;
  m.cat.n_cats = train.n_cats;
  m.cat.log_prob.resize(n_cat);
  for (std::size_t j = 0; j < n_cat; ++j) {
    const auto slots = static_cast<std::size_t>(train.n_cats[j]) + 1;
    std::vector<std::vector<double>> tally(n_classes, std::vector<double>(slots, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
      tally[static_cast<std::size_t>(train.labels[r])][static_cast<std::size_t>(train.categorical(r, j))] += 1.0;
    }
    auto& table = m.cat.log_prob[j];
    table.resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double denom = static_cast<double>(counts[c]) + smoothing * static_cast<double>(slots);
      table[c].resize(slots);
      for (std::size_t v = 0; v < slots; ++v) table[c][v] = std::log((tally[c][v] + smoothing) / denom);
    }
  }

  // Gaussian on standardized values
  Matrix<double> z(n, n_num);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < n_num; ++j) z(r, j) = m.scaler.transform(j, train.numerical(r, j));
  }
  std::vector<double> floor(n_num);
  {
    const auto zs = ScalerParams::fit(z);
    for (std::size_t j = 0; j < n_num; ++j) {
      // scale is 1 for constant columns, which matches max(var, 1) there
      const double var = zs.scale[j] * zs.scale[j];
      floor[j] = kVarianceFloorScale * std::max(var, 1.0);
    }
  }
  m.gauss.mean = Matrix<double>(n_classes, n_num, 0.0);
  m.gauss.var = Matrix<double>(n_classes, n_num, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto c = static_cast<std::size_t>(train.labels[r]);
    for (std::size_t j = 0; j < n_num; ++j) m.gauss.mean(c, j) += z(r, j);
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < n_num; ++j) {
      m.gauss.mean(c, j) /= static_cast<double>(counts[c]);
      m.gauss.var(c, j) = 0.0;
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto c = static_cast<std::size_t>(train.labels[r]);
    for (std::size_t j = 0; j < n_num; ++j) {
      const double d = z(r, j) - m.gauss.mean(c, j);
      m.gauss.var(c, j) += d * d;
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < n_num; ++j) {
      m.gauss.var(c, j) = m.gauss.var(c, j) / static_cast<double>(counts[c]) + floor[j];
    }
  }
  return m;
}

void joint_log_scores(const HybridModel& model, const EncodedRow& row, std::span<double> out) {
  const auto n_cat = model.n_categorical();
  const auto n_num = model.n_numerical();
  if (row.categorical.size() != n_cat || row.numerical.size() != n_num) {
    throw Error(ErrorKind::shape, "row has " + std::to_string(row.categorical.size()) + " categorical and " +
                                      std::to_string(row.numerical.size()) + " numerical values, model expects " +
                                      std::to_string(n_cat) + " and " + std::to_string(n_num));
  }
  if (out.size() != static_cast<std::size_t>(model.n_classes)) throw Error(ErrorKind::shape, "output size mismatch");
  for (std::size_t j = 0; j < n_cat; ++j) {
    if (row.categorical[j] < 0 || row.categorical[j] > model.cat.n_cats[j]) {
      throw Error(ErrorKind::shape, "categorical code " + std::to_string(row.categorical[j]) + " outside [0, " +
                                        std::to_string(model.cat.n_cats[j]) + "]");
    }
  }

  double log_jacobian = 0.0;
  for (std::size_t j = 0; j < n_num; ++j) log_jacobian -= std::log(model.scaler.scale[j]);

  for (std::size_t c = 0; c < out.size(); ++c) {
    if (!model.classes_present[c]) {
      out[c] = kAbsentScore;
      continue;
    }
    double s = model.log_prior[c] + log_jacobian;
    for (std::size_t j = 0; j < n_cat; ++j) {
      s += model.cat.log_prob[j][c][static_cast<std::size_t>(row.categorical[j])];
    }
    for (std::size_t j = 0; j < n_num; ++j) {
      s += log_normal_pdf(model.scaler.transform(j, row.numerical[j]), model.gauss.mean(c, j), model.gauss.var(c, j));
    }
    out[c] = s;
  }
}

std::vector<double> joint_log_scores(const HybridModel& model, const EncodedRow& row) {
  std::vector<double> out(static_cast<std::size_t>(model.n_classes));
  joint_log_scores(model, row, out);
  return out;
}

int argmax_score(std::span<const double> scores) {
  int best = -1;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (is_absent(scores[c]) || std::isnan(scores[c])) continue;
    if (best < 0 || scores[c] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

int predict_local(const HybridModel& model, const EncodedRow& row) {
  const auto scores = joint_log_scores(model, row);
  return argmax_score(scores);
}

std::vector<int> predict_local(const HybridModel& model, const Dataset& data) {
  std::vector<int> out(data.rows());
  std::vector<double> scores(static_cast<std::size_t>(model.n_classes));
  for (std::size_t r = 0; r < data.rows(); ++r) {
    joint_log_scores(model, row_of(data, r), scores);
    out[r] = argmax_score(scores);
  }
  return out;
}

// ---------------------------------------------------------------- serialization

namespace {

void write_values(std::ostream& out, std::span<const double> v) {
  for (double x : v) out << ' ' << detail::format_exact(x);
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::vector<std::string> expect(const std::string& key, std::size_t n_values) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto words = detail::split_ws(line);
      if (words.empty()) continue;
      if (words[0] != key) fail("expected '" + key + "', found '" + words[0] + "'");
      if (n_values != npos && words.size() != n_values + 1) {
        fail("'" + key + "' expects " + std::to_string(n_values) + " values");
      }
      words.erase(words.begin());
      return words;
    }
    fail("unexpected end of file, expected '" + key + "'");
  }

  std::vector<double> doubles(const std::string& key, std::size_t n) {
    std::vector<double> out;
    for (const auto& w : expect(key, n)) out.push_back(detail::parse_double(w, where()));
    return out;
  }

  long long integer(const std::string& key) { return detail::parse_int64(expect(key, 1)[0], where()); }

  [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorKind::parse, where() + ": " + msg); }
  std::string where() const { return source_ + ":" + std::to_string(line_no_); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_model(const HybridModel& m, std::ostream& out) {
  out << "fednb-hybrid-model 1\n";
  out << "n_classes " << m.n_classes << '\n';
  out << "n_train " << m.n_train << '\n';
  out << "n_categorical " << m.n_categorical() << '\n';
  out << "n_numerical " << m.n_numerical() << '\n';
  out << "present";
  for (bool p : m.classes_present) out << ' ' << (p ? 1 : 0);
  out << "\nlog_prior";
  write_values(out, m.log_prior);
  out << "\nsmoothing " << detail::format_exact(m.cat.smoothing) << '\n';
  out << "scaler_mean";
  write_values(out, m.scaler.mean);
  out << "\nscaler_scale";
  write_values(out, m.scaler.scale);
  out << '\n';
  for (std::size_t j = 0; j < m.n_categorical(); ++j) {
    out << "n_cats " << m.cat.n_cats[j] << '\n';
    for (const auto& per_class : m.cat.log_prob[j]) {
      out << "cat_log_prob";
      write_values(out, per_class);
      out << '\n';
    }
  }
  for (std::size_t c = 0; c < static_cast<std::size_t>(m.n_classes); ++c) {
    out << "gauss_mean";
    write_values(out, m.gauss.mean.row(c));
    out << "\ngauss_var";
    write_values(out, m.gauss.var.row(c));
    out << '\n';
  }
  out << "end\n";
}

void save_model(const HybridModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  save_model(model, out);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

HybridModel load_model(std::istream& in, const std::string& source) {
  LineReader rd(in, source);
  if (rd.expect("fednb-hybrid-model", 1)[0] != "1") rd.fail("unsupported model version");
  HybridModel m;
  m.n_classes = static_cast<int>(rd.integer("n_classes"));
  if (m.n_classes < 1) rd.fail("n_classes must be positive");
  const auto k = static_cast<std::size_t>(m.n_classes);
  m.n_train = static_cast<std::size_t>(rd.integer("n_train"));
  const auto n_cat = static_cast<std::size_t>(rd.integer("n_categorical"));
  const auto n_num = static_cast<std::size_t>(rd.integer("n_numerical"));
  for (const auto& w : rd.expect("present", k)) {
    if (w != "0" && w != "1") rd.fail("present flags must be 0 or 1");
    m.classes_present.push_back(w == "1");
  }
  m.log_prior = rd.doubles("log_prior", k);
  m.cat.smoothing = rd.doubles("smoothing", 1)[0];
  m.scaler.mean = rd.doubles("scaler_mean", n_num);
  m.scaler.scale = rd.doubles("scaler_scale", n_num);
  m.cat.log_prob.resize(n_cat);
  for (std::size_t j = 0; j < n_cat; ++j) {
    const auto n_cats = rd.integer("n_cats");
    if (n_cats < 0) rd.fail("n_cats must be >= 0");
    m.cat.n_cats.push_back(static_cast<int>(n_cats));
    for (std::size_t c = 0; c < k; ++c) {
      m.cat.log_prob[j].push_back(rd.doubles("cat_log_prob", static_cast<std::size_t>(n_cats) + 1));
    }
  }
  m.gauss.mean = Matrix<double>(k, n_num);
  m.gauss.var = Matrix<double>(k, n_num);
  for (std::size_t c = 0; c < k; ++c) {
    const auto mean = rd.doubles("gauss_mean", n_num);
    const auto var = rd.doubles("gauss_var", n_num);
    std::copy(mean.begin(), mean.end(), m.gauss.mean.row(c).begin());
    std::copy(var.begin(), var.end(), m.gauss.var.row(c).begin());
  }
  rd.expect("end", 0);
  return m;
}

HybridModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return load_model(in, path.string());
}

}  // namespace fednb

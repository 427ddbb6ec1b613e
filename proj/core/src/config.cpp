#include "fednb/config.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "fednb/error.hpp"
#include "fednb/text.hpp"

namespace fednb {

std::string_view to_string(Proposal p) noexcept {
  switch (p) {
    case Proposal::C: return "C";
    case Proposal::B: return "B";
    case Proposal::E: return "E";
    case Proposal::A: return "A";
  }
  return "?";
}

Proposal parse_proposal(std::string_view s) {
  if (s == "C") return Proposal::C;
  if (s == "B") return Proposal::B;
  if (s == "E") return Proposal::E;
  if (s == "A") return Proposal::A;
  throw Error(ErrorKind::config, "unknown proposal '" + std::string(s) + "' (expected C, B, E or A)");
}

bool ExperimentConfig::has(Proposal p) const {
  return std::find(proposals.begin(), proposals.end(), p) != proposals.end();
}

bool ExperimentConfig::uses_reference_parameters() const {
  const ExperimentConfig ref;
  return seed == ref.seed && reps == ref.reps && alphas == ref.alphas && split.train_frac == ref.split.train_frac &&
         split.val_frac == ref.split.val_frac && split.test_frac == ref.split.test_frac &&
         optimizer.lambda == ref.optimizer.lambda && optimizer.floor_delta == ref.optimizer.floor_delta &&
         optimizer.max_iters == ref.optimizer.max_iters && optimizer.n_starts == ref.optimizer.n_starts;
}

void ExperimentConfig::validate() const {
  if (profiles.empty()) throw Error(ErrorKind::config, "no node profiles");
  if (alphas.empty()) throw Error(ErrorKind::config, "no alpha levels");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw Error(ErrorKind::config, "alphas must be positive");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) throw Error(ErrorKind::config, "alphas must be strictly increasing");
  }
  if (reps < 1) throw Error(ErrorKind::config, "reps must be >= 1");
  if (proposals.empty()) throw Error(ErrorKind::config, "no proposals selected");
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (std::count(proposals.begin(), proposals.end(), proposals[i]) > 1) {
      throw Error(ErrorKind::config, "duplicate proposal");
    }
  }
  if (jobs < 1) throw Error(ErrorKind::config, "jobs must be >= 1");
  split.validate();
  if (has(Proposal::A) || k() >= 2) optimizer.validate(k());
  if (has(Proposal::A) && k() < 2) throw Error(ErrorKind::config, "proposal A needs at least two nodes");
  if (source.kind == DataSource::Kind::synthetic) {
    source.synth.validate();
    if (!source.synth.node_noise.empty() && source.synth.node_noise.size() != k()) {
      throw Error(ErrorKind::config, "synth.noise must have one entry per node");
    }
    if (plot_feature < 0 || (source.synth.n_numerical > 0 && plot_feature >= source.synth.n_numerical)) {
      throw Error(ErrorKind::config, "plot.feature out of range");
    }
  } else {
    if (source.csv.empty() || source.schema.empty()) {
      throw Error(ErrorKind::config, "csv sources need dataset.csv and dataset.schema");
    }
    if (plot_feature < 0) throw Error(ErrorKind::config, "plot.feature out of range");
  }
}

namespace {

std::vector<double> parse_doubles(const std::string& value, const std::string& where) {
  std::vector<double> out;
  for (const auto& part : detail::split_list(value)) out.push_back(detail::parse_double(part, where));
  return out;
}

std::uint64_t parse_seed(const std::string& value, const std::string& where) {
  const auto v = detail::parse_int64(value, where);
  if (v < 0) throw Error(ErrorKind::config, where + ": seed must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw Error(ErrorKind::config, where + ": expected on/off");
}

// Keys shared by the config file and command-line overrides.
bool apply_grid_key(ExperimentConfig& c, const std::string& key, const std::string& value, const std::string& where) {
  if (key == "seed") {
    c.seed = parse_seed(value, where);
  } else if (key == "alphas") {
    c.alphas = parse_doubles(value, where);
  } else if (key == "reps") {
    c.reps = detail::parse_int(value, where);
  } else if (key == "lambda") {
    c.optimizer.lambda = detail::parse_double(value, where);
  } else if (key == "delta") {
    c.optimizer.floor_delta = detail::parse_double(value, where);
  } else {
    return false;
  }
  return true;
}

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  std::string line;
  std::size_t line_no = 0;
  std::vector<NodeProfile> nodes;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      const auto text = detail::trim(detail::strip_comment(line));
      if (text.empty()) continue;
      const auto where = source + ":" + std::to_string(line_no);
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::config, where + ": expected 'key = value'");
      const auto key = detail::trim(text.substr(0, eq));
      const auto value = detail::trim(text.substr(eq + 1));
      auto& s = c.source.synth;
      if (apply_grid_key(c, key, value, where)) {
        continue;
      } else if (key == "dataset.name") {
        c.source.name = value;
      } else if (key == "dataset.source") {
        if (value == "synthetic") {
          c.source.kind = DataSource::Kind::synthetic;
        } else if (value == "csv") {
          c.source.kind = DataSource::Kind::csv;
        } else {
          throw Error(ErrorKind::config, where + ": dataset.source must be 'synthetic' or 'csv'");
        }
      } else if (key == "dataset.csv") {
        c.source.csv = resolve(value, base_dir);
      } else if (key == "dataset.schema") {
        c.source.schema = resolve(value, base_dir);
      } else if (key == "synth.rows") {
        s.n_rows = static_cast<std::size_t>(detail::parse_int(value, where));
      } else if (key == "synth.classes") {
        s.n_classes = detail::parse_int(value, where);
      } else if (key == "synth.categorical") {
        s.n_categorical = detail::parse_int(value, where);
      } else if (key == "synth.categories") {
        s.categories_per_column = detail::parse_int(value, where);
      } else if (key == "synth.numerical") {
        s.n_numerical = detail::parse_int(value, where);
      } else if (key == "synth.separation") {
        s.separation = detail::parse_double(value, where);
      } else if (key == "synth.class_weights") {
        s.class_weights = parse_doubles(value, where);
      } else if (key == "synth.noise") {
        s.node_noise = parse_doubles(value, where);
      } else if (key == "node") {
        nodes.push_back(parse_profile_record(value, where));
      } else if (key == "profiles") {
        const auto loaded = load_profiles(resolve(value, base_dir));
        nodes.insert(nodes.end(), loaded.begin(), loaded.end());
      } else if (key == "split") {
        const auto f = parse_doubles(value, where);
        if (f.size() != 3) throw Error(ErrorKind::config, where + ": split needs three fractions");
        c.split.train_frac = f[0];
        c.split.val_frac = f[1];
        c.split.test_frac = f[2];
      } else if (key == "max_iters") {
        c.optimizer.max_iters = detail::parse_int(value, where);
      } else if (key == "starts") {
        c.optimizer.n_starts = detail::parse_int(value, where);
      } else if (key == "proposals") {
        c.proposals.clear();
        for (const auto& p : detail::split_list(value)) c.proposals.push_back(parse_proposal(p));
        std::sort(c.proposals.begin(), c.proposals.end());
      } else if (key == "jobs") {
        c.jobs = detail::parse_int(value, where);
      } else if (key == "timing") {
        c.timing = parse_bool(value, where);
      } else if (key == "plot.feature") {
        c.plot_feature = detail::parse_int(value, where);
      } else {
        throw Error(ErrorKind::config, where + ": unknown key '" + key + "'");
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    throw Error(ErrorKind::config, e.what());
  }
  c.profiles = std::move(nodes);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config file " + path.string());
  return parse_config(in, path.string(), path.parent_path());
}

void write_config(const ExperimentConfig& c, std::ostream& out) {
  auto list = [](const std::vector<double>& v) {
    std::vector<std::string> parts;
    for (double x : v) parts.push_back(detail::format_exact(x));
    return detail::join(parts, ", ");
  };
  out << "dataset.name = " << c.source.name << '\n';
  if (c.source.kind == DataSource::Kind::synthetic) {
    const auto& s = c.source.synth;
    out << "dataset.source = synthetic\n";
    out << "synth.rows = " << s.n_rows << '\n';
    out << "synth.classes = " << s.n_classes << '\n';
    out << "synth.categorical = " << s.n_categorical << '\n';
    out << "synth.categories = " << s.categories_per_column << '\n';
    out << "synth.numerical = " << s.n_numerical << '\n';
    out << "synth.separation = " << detail::format_exact(s.separation) << '\n';
    if (!s.class_weights.empty()) out << "synth.class_weights = " << list(s.class_weights) << '\n';
    if (!s.node_noise.empty()) out << "synth.noise = " << list(s.node_noise) << '\n';
  } else {
    out << "dataset.source = csv\n";
    out << "dataset.csv = " << std::filesystem::absolute(c.source.csv).string() << '\n';
    out << "dataset.schema = " << std::filesystem::absolute(c.source.schema).string() << '\n';
  }
  for (const auto& p : c.profiles) {
    out << "node = " << p.name() << ", " << p.cmm() << ", " << detail::format_exact(p.kci()) << ", "
        << detail::format_exact(p.kri()) << ", " << detail::format_exact(p.cvss()) << '\n';
  }
  out << "alphas = " << list(c.alphas) << '\n';
  out << "reps = " << c.reps << '\n';
  out << "seed = " << c.seed << '\n';
  out << "split = " << list({c.split.train_frac, c.split.val_frac, c.split.test_frac}) << '\n';
  out << "lambda = " << detail::format_exact(c.optimizer.lambda) << '\n';
  out << "delta = " << detail::format_exact(c.optimizer.floor_delta) << '\n';
  out << "max_iters = " << c.optimizer.max_iters << '\n';
  out << "starts = " << c.optimizer.n_starts << '\n';
  std::vector<std::string> props;
  for (auto p : c.proposals) props.emplace_back(to_string(p));
  out << "proposals = " << detail::join(props, ", ") << '\n';
  out << "jobs = " << c.jobs << '\n';
  out << "timing = " << (c.timing ? "on" : "off") << '\n';
  out << "plot.feature = " << c.plot_feature << '\n';
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto where = "override '" + key + "'";
  try {
    if (!apply_grid_key(config, key, value, where)) {
      throw Error(ErrorKind::config, "unknown override key '" + key + "' (allowed: seed, alphas, reps, lambda, delta)");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    throw Error(ErrorKind::config, e.what());
  }
  config.validate();
}

}  // namespace fednb

#include "fednb/governance.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include "fednb/error.hpp"
#include "fednb/text.hpp"

namespace fednb {

NodeProfile::NodeProfile(std::string name, int cmm, double kci, double kri, double cvss)
    : name_(std::move(name)), cmm_(cmm), kci_(kci), kri_(kri), cvss_(cvss) {
  if (cmm < 1 || cmm > 5) throw Error(ErrorKind::domain, name_ + ": cmm must lie in [1, 5]");
  if (!(kci >= 0.0 && kci <= 1.0)) throw Error(ErrorKind::domain, name_ + ": kci must lie in [0, 1]");
  if (!(kri >= 0.0 && kri <= 1.0)) throw Error(ErrorKind::domain, name_ + ": kri must lie in [0, 1]");
  if (!(cvss >= 0.0 && cvss <= 10.0)) throw Error(ErrorKind::domain, name_ + ": cvss must lie in [0, 10]");
}

double compute_icc(const NodeProfile& p) {
  return (p.cmm() / 5.0) * p.kci() * (1.0 - p.kri()) * (1.0 - p.cvss() / 10.0);
}

WeightVector normalize_prior(std::span<const double> iccs) {
  if (iccs.empty()) throw Error(ErrorKind::degenerate_prior, "no nodes");
  double total = 0.0;
  for (double v : iccs) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::degenerate_prior, "ICC values must be finite and >= 0");
    total += v;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::degenerate_prior, "all ICC values are zero");
  std::vector<double> w(iccs.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = iccs[i] / total;
  return WeightVector(std::move(w));
}

IccPrior IccPrior::from_profiles(std::span<const NodeProfile> profiles) {
  IccPrior prior;
  for (const auto& p : profiles) prior.icc.push_back(compute_icc(p));
  prior.normalized = normalize_prior(prior.icc);
  return prior;
}

NodeProfile parse_profile_record(const std::string& record, const std::string& where) {
  const auto fields = detail::split_list(record);
  if (fields.size() != 5) throw Error(ErrorKind::config, where + ": expected 'name, cmm, kci, kri, cvss'");
  return NodeProfile(fields[0], detail::parse_int(fields[1], where), detail::parse_double(fields[2], where),
                     detail::parse_double(fields[3], where), detail::parse_double(fields[4], where));
}

std::vector<NodeProfile> parse_profiles(std::istream& in, const std::string& source) {
  std::vector<NodeProfile> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(detail::strip_comment(line));
    if (text.empty()) continue;
    out.push_back(parse_profile_record(text, source + ":" + std::to_string(line_no)));
  }
  if (out.empty()) throw Error(ErrorKind::config, source + ": no node profiles");
  return out;
}

std::vector<NodeProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open profiles file " + path.string());
  return parse_profiles(in, path.string());
}

std::vector<NodeProfile> reference_profiles() {
  return {
      NodeProfile("Financial", 4, 0.82, 0.12, 3.2),
      NodeProfile("Health", 3, 0.70, 0.25, 5.1),
      NodeProfile("Government", 2, 0.55, 0.40, 6.8),
  };
}

}  // namespace fednb

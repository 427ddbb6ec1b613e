#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fednb/weights.hpp"

namespace fednb {

// CRISC governance variables for one institutional node.
class NodeProfile {
 public:
  // Throws Error(domain) when a field is out of range:
  // cmm in [1,5], kci and kri in [0,1], cvss in [0,10].
  NodeProfile(std::string name, int cmm, double kci, double kri, double cvss);

  const std::string& name() const noexcept { return name_; }
  int cmm() const noexcept { return cmm_; }
  double kci() const noexcept { return kci_; }
  double kri() const noexcept { return kri_; }
  double cvss() const noexcept { return cvss_; }

  friend bool operator==(const NodeProfile&, const NodeProfile&) = default;

 private:
  std::string name_;
  int cmm_;
  double kci_;
  double kri_;
  double cvss_;
};

// Institutional Coherence Index: (cmm/5) * kci * (1 - kri) * (1 - cvss/10).
double compute_icc(const NodeProfile& profile);

// icc_i / sum(icc). Throws Error(degenerate_prior) for an all-zero vector.
WeightVector normalize_prior(std::span<const double> iccs);

struct IccPrior {
  std::vector<double> icc;
  WeightVector normalized;

  static IccPrior from_profiles(std::span<const NodeProfile> profiles);
};

// The profiles file holds one node per line: name, cmm, kci, kri, cvss
// (comma separated, '#' starts a comment).
std::vector<NodeProfile> parse_profiles(std::istream& in, const std::string& source = "<profiles>");
std::vector<NodeProfile> load_profiles(const std::filesystem::path& path);
NodeProfile parse_profile_record(const std::string& record, const std::string& where);

// Table of the three reference institutions used throughout the experiments.
std::vector<NodeProfile> reference_profiles();

}  // namespace fednb

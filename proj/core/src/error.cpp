#include "fednb/error.hpp"

namespace fednb {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::label: return "label";
    case ErrorKind::spec: return "spec";
    case ErrorKind::io: return "io";
    case ErrorKind::degenerate_prior: return "degenerate-prior";
    case ErrorKind::stratification: return "stratification";
    case ErrorKind::partition_degenerate: return "partition-degenerate";
    case ErrorKind::undefined_distribution: return "undefined-distribution";
    case ErrorKind::fit: return "fit";
    case ErrorKind::shape: return "shape";
    case ErrorKind::ensemble: return "ensemble";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::metric: return "metric";
    case ErrorKind::inversion: return "inversion";
    case ErrorKind::optimizer: return "optimizer";
    case ErrorKind::size: return "size";
    case ErrorKind::domain: return "domain";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace fednb

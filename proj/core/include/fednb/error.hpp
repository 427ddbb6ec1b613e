#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fednb {

enum class ErrorKind {
  schema,
  parse,
  label,
  spec,
  io,
  degenerate_prior,
  stratification,
  partition_degenerate,
  undefined_distribution,
  fit,
  shape,
  ensemble,
  normalization,
  metric,
  inversion,
  optimizer,
  size,
  domain,
  config,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fednb

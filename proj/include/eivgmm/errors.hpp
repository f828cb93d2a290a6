#pragma once

#include <stdexcept>
#include <string>

namespace eivgmm {

enum class ErrorKind {
  parse,
  validation,
  degenerate_input,
  estimation,
  weight_solve,
  bootstrap_instability,
  se_failure,
  usage,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; `kind()` drives CLI exit codes and
// the machine-readable error report.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace eivgmm

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpsbf {

enum class ErrorCode {
  dimension_violation,
  divisibility_violation,
  shape_mismatch,
  infeasible_dimensions,
  rank_deficient,
  singular_matrix,
  non_convergence,
  invalid_argument,
  missing_tags,
  config_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension_violation: return "dimension-violation";
    case ErrorCode::divisibility_violation: return "divisibility-violation";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::infeasible_dimensions: return "infeasible-dimensions";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::singular_matrix: return "singular-matrix";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::missing_tags: return "missing-tags";
    case ErrorCode::config_error: return "config-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Adds a stage label to an error raised inside a pipeline stage, keeping its code.
inline Error annotate(const Error& e, std::string_view stage) {
  std::string msg = e.what();
  const auto prefix = std::string(to_string(e.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  return Error(e.code(), std::string(stage) + ": " + msg);
}

}  // namespace dpsbf

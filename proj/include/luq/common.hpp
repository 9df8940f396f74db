#pragma once

#include <stdexcept>
#include <string>

namespace luq {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  singular_matrix,
  regime_violation,
  no_convergence,
  config,
  io,
  verify_failed,
};

/// Exception carrying a stable error code alongside the message. The C API
/// maps these codes onto its status enum, and the CLI onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace luq

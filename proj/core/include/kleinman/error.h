#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kleinman {

/// Failure modes surfaced by the library. Every throw site uses one of these,
/// so callers (and the CLI exit-code mapping) can dispatch without parsing
/// message text.
enum class ErrorCode {
  // Input errors.
  kDimensionMismatch,
  kNonFinite,
  kAsymmetric,
  kInvalidArgument,
  kParseError,
  kMissingField,
  kNotPsd,
  kNonPositiveA,
  // Solver errors.
  kEigensolverFailure,
  kSpectrumDegenerate,
  kOverflow,
  kResidualTooLarge,
  kNotStabilizable,
  kNotDetectable,
  kStabilizationFailed,
  kInitialGuessNotStabilizing,
  kIterateNotStabilizing,
  kMonotonicityViolated,
  kMaxIterExceeded,
  kOracleSingular,
  kRangeConditionFailed,
  kLinearizationUnstable,
  kConeViolation,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by malformed or inconsistent input rather than by
/// a numerical procedure failing on well-formed input.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kleinman

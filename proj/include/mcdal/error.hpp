#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcdal {

/// Distinguishable failure categories. File-format codes are stable and
/// surface in CLI error output.
enum class ErrorCode {
  kInvalidArgument,
  kBadMagic,
  kVersionMismatch,
  kBadDtype,
  kTruncatedHeader,
  kTruncatedPayload,
  kTrailingData,
  kShapeMismatch,
  kProbabilitySum,
  kValueRange,
  kIo,
  kSchema,
  kDuplicateId,
  kMissingField,
  kUnsupportedVersion,
  kEmptySplit,
  kStateInconsistent,
  kSourceFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kBadDtype: return "bad_dtype";
    case ErrorCode::kTruncatedHeader: return "truncated_header";
    case ErrorCode::kTruncatedPayload: return "truncated_payload";
    case ErrorCode::kTrailingData: return "trailing_data";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kProbabilitySum: return "probability_sum";
    case ErrorCode::kValueRange: return "value_range";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kMissingField: return "missing_field";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kEmptySplit: return "empty_split";
    case ErrorCode::kStateInconsistent: return "state_inconsistent";
    case ErrorCode::kSourceFailure: return "source_failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace mcdal

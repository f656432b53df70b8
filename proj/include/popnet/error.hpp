#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace popnet {

enum class ErrorCode {
  kMissingField,
  kBadTimestamp,
  kIoError,
  kWrongLength,
  kUnknownUser,
  kRankDeficient,
  kDimensionMismatch,
  kShapeMismatch,
  kGraphNotBuilt,
  kBatchTooSmall,
  kLengthMismatch,
  kSolverNotConverged,
  kDegenerateInput,
  kInvalidArgument,
  kConfigMismatch,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace popnet

#include "popnet/error.hpp"

namespace popnet {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kBadTimestamp: return "BadTimestamp";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kWrongLength: return "WrongLength";
    case ErrorCode::kUnknownUser: return "UnknownUser";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kGraphNotBuilt: return "GraphNotBuilt";
    case ErrorCode::kBatchTooSmall: return "BatchTooSmall";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSolverNotConverged: return "SolverNotConverged";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
  }
  return "Unknown";
}

}  // namespace popnet

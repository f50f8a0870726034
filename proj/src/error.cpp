#include "gridflow/error.hpp"

namespace gridflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::RowTooShort: return "RowTooShort";
    case ErrorCode::MultipleSlack: return "MultipleSlack";
    case ErrorCode::NoSlack: return "NoSlack";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::IslandDetected: return "IslandDetected";
    case ErrorCode::ZeroImpedance: return "ZeroImpedance";
    case ErrorCode::MissingGenerator: return "MissingGenerator";
    case ErrorCode::SingularPivot: return "SingularPivot";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PatternMismatch: return "PatternMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace gridflow

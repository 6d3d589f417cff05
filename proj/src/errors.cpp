#include "gesbl/errors.hpp"

namespace gesbl {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GenerationBudgetExceeded: return "GenerationBudgetExceeded";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptyDictionary: return "EmptyDictionary";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DegenerateTruth: return "DegenerateTruth";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::MismatchedManifest: return "MismatchedManifest";
  }
  return "Unknown";
}

}  // namespace gesbl

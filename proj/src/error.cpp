#include "bileveler/error.hpp"

namespace bileveler {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Structural: return "Structural";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyLowerFeasible: return "EmptyLowerFeasible";
    case ErrorCode::LowerInfeasible: return "LowerInfeasible";
    case ErrorCode::NonConvexLowerLevel: return "NonConvexLowerLevel";
    case ErrorCode::PessimisticUnsupported: return "PessimisticUnsupported";
    case ErrorCode::NonlinearBase: return "NonlinearBase";
    case ErrorCode::UntrainedSurrogate: return "UntrainedSurrogate";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnboundedVariable: return "UnboundedVariable";
    case ErrorCode::IntegerVariableUnsupported: return "IntegerVariableUnsupported";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace bileveler

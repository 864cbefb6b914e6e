#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bileveler {

enum class ErrorCode {
  Structural,
  DimensionMismatch,
  EmptyLowerFeasible,
  LowerInfeasible,
  NonConvexLowerLevel,
  PessimisticUnsupported,
  NonlinearBase,
  UntrainedSurrogate,
  DegenerateSamples,
  InvalidPartition,
  EmptyData,
  SyntaxError,
  UnboundedVariable,
  IntegerVariableUnsupported,
  DuplicateName,
  BudgetExceeded,
  Usage,
};

std::string_view to_string(ErrorCode code);

// All toolkit failures surface as this type; the code identifies the contract
// that was violated and what() carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bileveler

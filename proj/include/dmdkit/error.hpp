#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dmdkit {

enum class ErrorCode {
  InvalidArgument,
  NonFiniteInput,
  ZeroMatrix,
  RankPolicyUnsatisfiable,
  SingularValueUnderflow,
  NonConvergence,
  ZeroToNegativePower,
  TrajectoryTooShort,
  DimensionMismatch,
  DimensionCapExceeded,
  ZeroEigenvalueWithOffset,
  ZeroEigenvalueLog,
  DimensionTooLarge,
  NonFiniteObservable,
  NoCoordinateSlots,
  NoClosedForm,
  NonDiagonalizableGenerator,
  MalformedInput,
  IrregularSpacing,
  MissingFactors,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::RankPolicyUnsatisfiable: return "RankPolicyUnsatisfiable";
    case ErrorCode::SingularValueUnderflow: return "SingularValueUnderflow";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ZeroToNegativePower: return "ZeroToNegativePower";
    case ErrorCode::TrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorCode::ZeroEigenvalueWithOffset: return "ZeroEigenvalueWithOffset";
    case ErrorCode::ZeroEigenvalueLog: return "ZeroEigenvalueLog";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NonFiniteObservable: return "NonFiniteObservable";
    case ErrorCode::NoCoordinateSlots: return "NoCoordinateSlots";
    case ErrorCode::NoClosedForm: return "NoClosedForm";
    case ErrorCode::NonDiagonalizableGenerator: return "NonDiagonalizableGenerator";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::IrregularSpacing: return "IrregularSpacing";
    case ErrorCode::MissingFactors: return "MissingFactors";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Errors that stem from bad user input rather than numerical breakdown.
/// The CLI maps these to exit code 2 and everything else to 3.
constexpr bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::TrajectoryTooShort:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DimensionCapExceeded:
    case ErrorCode::DimensionTooLarge:
    case ErrorCode::NoCoordinateSlots:
    case ErrorCode::MalformedInput:
    case ErrorCode::IrregularSpacing:
    case ErrorCode::IoError:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class WarningKind {
  DefectiveMatrix,
  Branch,
  PastIllConditioned,
};

constexpr std::string_view to_string(WarningKind kind) {
  switch (kind) {
    case WarningKind::DefectiveMatrix: return "DefectiveMatrixWarning";
    case WarningKind::Branch: return "BranchWarning";
    case WarningKind::PastIllConditioned: return "PastIllConditionedWarning";
  }
  return "Warning";
}

/// Non-fatal diagnostic attached to a result. Results stay usable.
struct Warning {
  WarningKind kind;
  std::string message;
};

inline bool has_warning(const std::vector<Warning>& warnings, WarningKind kind) {
  for (const auto& w : warnings) {
    if (w.kind == kind) return true;
  }
  return false;
}

}  // namespace dmdkit

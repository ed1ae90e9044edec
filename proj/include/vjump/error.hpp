#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vjump {

enum class ErrorCode {
  NonPositiveRate,
  ProbabilityOutOfRange,
  ReducibleChain,
  DegenerateKernel,
  AmbiguousDegeneracy,
  WrongDegeneracy,
  InvalidInitialCondition,
  NoCompletedDwells,
  IndistinguishableStates,
  NoSolutionInBox,
  InconsistentC,
  FitDiverged,
  InvalidArgument,
  CflViolation,
  NonFiniteDensity,
  ProfileNotResolved,
  GridMismatch,
  RequiresSpectralField,
  ComplexRoots,
  SingularSystem,
  SolverExhausted,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::ReducibleChain: return "ReducibleChain";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::AmbiguousDegeneracy: return "AmbiguousDegeneracy";
    case ErrorCode::WrongDegeneracy: return "WrongDegeneracy";
    case ErrorCode::InvalidInitialCondition: return "InvalidInitialCondition";
    case ErrorCode::NoCompletedDwells: return "NoCompletedDwells";
    case ErrorCode::IndistinguishableStates: return "IndistinguishableStates";
    case ErrorCode::NoSolutionInBox: return "NoSolutionInBox";
    case ErrorCode::InconsistentC: return "InconsistentC";
    case ErrorCode::FitDiverged: return "FitDiverged";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::NonFiniteDensity: return "NonFiniteDensity";
    case ErrorCode::ProfileNotResolved: return "ProfileNotResolved";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::RequiresSpectralField: return "RequiresSpectralField";
    case ErrorCode::ComplexRoots: return "ComplexRoots";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SolverExhausted: return "SolverExhausted";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vjump

#include "confspec/error.hpp"

namespace confspec {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::InvalidArgument: return "InvalidArgument";
  case ErrorKind::GridMismatch: return "GridMismatch";
  case ErrorKind::SingularMetric: return "SingularMetric";
  case ErrorKind::NonPositiveConformalFactor: return "NonPositiveConformalFactor";
  case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
  case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
  case ErrorKind::EmptyKernel: return "EmptyKernel";
  case ErrorKind::DisallowedCoupling: return "DisallowedCoupling";
  case ErrorKind::NotTraceless: return "NotTraceless";
  case ErrorKind::ConstantField: return "ConstantField";
  case ErrorKind::SPDViolation: return "SPDViolation";
  case ErrorKind::NoSignChange: return "NoSignChange";
  case ErrorKind::BranchAmbiguity: return "BranchAmbiguity";
  case ErrorKind::FirstOrderDegenerate: return "FirstOrderDegenerate";
  case ErrorKind::LineSearchFailure: return "LineSearchFailure";
  case ErrorKind::InvalidParameters: return "InvalidParameters";
  case ErrorKind::TruncationInadequate: return "TruncationInadequate";
  case ErrorKind::EmptyAdmissibleSet: return "EmptyAdmissibleSet";
  case ErrorKind::NonNegativeScalarCurvature: return "NonNegativeScalarCurvature";
  case ErrorKind::FormatError: return "FormatError";
  case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

} // namespace confspec

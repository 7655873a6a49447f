#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace confspec {

/// Error classes surfaced by the library. The CLI maps each class onto a
/// distinct exit code.
enum class ErrorKind {
  InvalidArgument,
  GridMismatch,
  SingularMetric,
  NonPositiveConformalFactor,
  DimensionTooSmall,
  ConvergenceFailure,
  EmptyKernel,
  DisallowedCoupling,
  NotTraceless,
  ConstantField,
  SPDViolation,
  NoSignChange,
  BranchAmbiguity,
  FirstOrderDegenerate,
  LineSearchFailure,
  InvalidParameters,
  TruncationInadequate,
  EmptyAdmissibleSet,
  NonNegativeScalarCurvature,
  FormatError,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

} // namespace confspec

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "confspec/config.hpp"
#include "confspec/error.hpp"

namespace confspec::cli {

inline constexpr std::string_view version = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  ok = 0,
  unexpected = 1,
  bad_config = 2,        ///< ConfigError, DisallowedCoupling, usage errors
  bad_metric = 3,        ///< SingularMetric, SPDViolation, NonPositiveConformalFactor
  no_convergence = 4,    ///< ConvergenceFailure, BranchAmbiguity
  empty_kernel = 5,
  degenerate = 6,        ///< FirstOrderDegenerate
  line_search = 7,
  no_sign_change = 8,
  product_error = 9,     ///< InvalidParameters, TruncationInadequate, EmptyAdmissibleSet,
                         ///< NonNegativeScalarCurvature
  other_error = 10,
};

int exit_code(ErrorKind kind);

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  int threads = 1;
};

void cmd_spectrum(const RunContext& ctx);
void cmd_perturb(const RunContext& ctx);
void cmd_break_kernel(const RunContext& ctx);
void cmd_product(const RunContext& ctx);
void cmd_curvature_check(const RunContext& ctx);

/// Parses the command line and runs one verb. Library errors are written to
/// <out>/error.json and mapped onto exit codes.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

} // namespace confspec::cli

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>

namespace confspec {

/// Real symmetric operator acting on blocks of column vectors.
class SymmetricOperator {
public:
  virtual ~SymmetricOperator() = default;
  virtual std::size_t size() const = 0;
  /// y = A x, column by column. `y` is resized by the callee.
  virtual void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const = 0;
};

struct EigenOptions {
  int max_iterations = 600;
  /// Converged when ||A x - l x|| <= tolerance * max(1, |l|).
  double tolerance = 1e-9;
  std::uint64_t seed = 0x5eed5eedULL;
  /// Extra block columns beyond k; < 0 picks max(4, k/2).
  int guard = -1;
  /// Force the dense solver (only allowed up to dense_limit unknowns).
  bool dense = false;
  /// Problems this small are always solved densely.
  std::size_t dense_auto = 512;
  /// Largest problem the dense solver accepts (also the fallback limit).
  std::size_t dense_limit = 4096;
};

struct EigenResult {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< orthonormal columns
  Eigen::VectorXd residuals;
  int iterations = 0;
  bool dense = false;
};

/// Materializes A as a dense matrix by applying it to unit vectors.
Eigen::MatrixXd materialize(const SymmetricOperator& a);

/// k algebraically smallest eigenpairs of a dense symmetric matrix.
EigenResult dense_lowest(const Eigen::MatrixXd& a, int k);

/// Block LOBPCG for the k algebraically smallest eigenpairs.
///
/// `preconditioner` must be symmetric positive definite when given.
/// `initial` columns, if any, seed the first block columns; the rest are
/// drawn from a normal distribution with `options.seed`.
/// Throws ConvergenceFailure with the worst residual and iteration count.
EigenResult lobpcg(const SymmetricOperator& a, const SymmetricOperator* preconditioner, int k,
                   const EigenOptions& options, const Eigen::MatrixXd* initial = nullptr);

/// Dispatches between dense and LOBPCG per `options`, with dense fallback on
/// LOBPCG failure for problems up to options.dense_limit.
EigenResult lowest_eigenpairs(const SymmetricOperator& a, const SymmetricOperator* preconditioner,
                              int k, const EigenOptions& options,
                              const Eigen::MatrixXd* initial = nullptr);

} // namespace confspec

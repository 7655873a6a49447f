#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "confspec/operators.hpp"

namespace confspec {

/// Curve of metrics through g0 with velocity h. Linear (g0 + t h) unless an
/// evaluator is supplied.
class MetricCurve {
public:
  MetricCurve(MetricField base, SymTensorField direction);
  /// `evaluator(t)` must return g0 at t = 0 and have derivative h there.
  MetricCurve(MetricField base, SymTensorField direction,
              std::function<MetricField(double)> evaluator);

  const MetricField& base() const noexcept { return base_; }
  const SymTensorField& direction() const noexcept { return direction_; }
  bool linear() const noexcept { return !evaluator_; }

  /// Open interval (lo, hi) on which g0 + t h is positive definite, from the
  /// pointwise eigenvalues of g0^{-1/2} h g0^{-1/2}. Infinite ends are +-inf.
  std::pair<double, double> spd_interval() const noexcept { return {t_lo_, t_hi_}; }
  /// min(-lo, hi).
  double t_max() const noexcept { return std::min(-t_lo_, t_hi_); }

  /// g(t). g(0) is returned exactly. Throws SPDViolation outside the SPD
  /// interval of a linear curve, or when the evaluator's result is singular.
  MetricField at(double t) const;

private:
  MetricField base_;
  SymTensorField direction_;
  std::function<MetricField(double)> evaluator_;
  double t_lo_ = 0.0, t_hi_ = 0.0;
};

/// Largest |eigenvalue| of g^{-1/2} h g^{-1/2} over all nodes.
double pointwise_norm(const MetricField& g, const SymTensorField& h);

/// First variation of the scalar curvature along h:
///     R' = -<h, Ric> + delta^2 h - Delta tr h.
ScalarField dot_scalar_curvature(const MetricField& g, const SymTensorField& h,
                                 Scheme scheme = default_scheme);
ScalarField dot_scalar_curvature(const MetricField& g, const Curvature& curv,
                                 const SymTensorField& h, Scheme scheme = default_scheme);

/// First variation of the Laplacian along h applied to f:
///     Delta' f = -<h, nabla^2 f> + <delta h + d tr h / 2, df>.
ScalarField dot_laplacian(const MetricField& g, const SymTensorField& h, const ScalarField& f,
                          Scheme scheme = default_scheme);
ScalarField dot_laplacian(const MetricField& g, const ChristoffelField& gamma,
                          const SymTensorField& h, const ScalarField& f,
                          Scheme scheme = default_scheme);

/// Projection of c R' - Delta' onto the kernel, in a W-orthonormal basis.
struct QMatrix {
  int m = 0;
  Eigen::MatrixXd entries;
  /// Kernel eigenfunctions, one per column, W-orthonormal.
  Eigen::MatrixXd basis;
  /// ||Q_raw - Q_raw^T|| / ||Q_raw|| before symmetrization.
  double asymmetry = 0.0;
  std::vector<double> kernel_eigenvalues;
};

QMatrix q_operator(const MetricField& g, const SymTensorField& h, double c, double tau,
                   Scheme scheme = default_scheme, const EigenOptions& options = {});
/// As above with a precomputed kernel (throws EmptyKernel if it is empty).
QMatrix q_operator(const MetricField& g, const SymTensorField& h, double c,
                   const SpectralDecomposition& kernel, Scheme scheme = default_scheme);

/// Sorted eigenvalues of Q: the t-derivatives of the branches leaving 0.
std::vector<double> eigenvalue_derivatives(const MetricField& g, const SymTensorField& h, double c,
                                           double tau, Scheme scheme = default_scheme,
                                           const EigenOptions& options = {});
std::vector<double> eigenvalue_derivatives(const QMatrix& q);

/// h* = c psi (2 tf(nabla^2 psi) - psi tf(Ric)) + (2c - 1) tf(d psi (x) d psi),
/// tf the g-traceless part. Pairing any traceless h with h* gives
/// ((c R' - Delta') psi, psi). Throws DisallowedCoupling for c in {0, 1/2}.
SymTensorField kernel_breaking_tensor(const MetricField& g, const ScalarField& psi, double c,
                                      Scheme scheme = default_scheme);
SymTensorField kernel_breaking_tensor(const MetricField& g, const Curvature& curv,
                                      const ScalarField& psi, double c,
                                      Scheme scheme = default_scheme);

struct IdentityReport {
  /// ((c R' - Delta') psi, psi).
  double direct = 0.0;
  /// integral of <h, c psi (2 nabla^2 psi - psi Ric) + (2c - 1) d psi (x) d psi>.
  double full_form = 0.0;
  /// integral of <h, h*(psi)>.
  double traceless_form = 0.0;
  /// Pairwise |a - b| / max(|a|, |b|); 0 when both vanish.
  double residual_direct_full = 0.0;
  double residual_direct_traceless = 0.0;
  double residual_full_traceless = 0.0;
  double max_residual() const;
};

/// Evaluates the kernel-breaking pairing three ways. Throws NotTraceless
/// when max |tr_g h| > trace_tol * max |h|.
IdentityReport derivative_identity_check(const MetricField& g, const ScalarField& psi,
                                         const SymTensorField& h, double c,
                                         Scheme scheme = default_scheme,
                                         double trace_tol = 1e-10);

struct NodalReport {
  std::size_t nodal_cells = 0;
  std::size_t total_cells = 0;
  double min_gradient = 0.0;
  double median_gradient = 0.0;
  double threshold = 0.0;
  /// Fraction of nodal cells with |d psi|_g below `threshold`.
  double below_fraction = 0.0;
};

/// Nodal cells are grid cells whose corner values include both signs (or a
/// zero). Each is assigned |d psi|_g at its corner of smallest |psi|.
/// `threshold < 0` selects 0.1 max |d psi|_g. Throws ConstantField.
NodalReport nodal_diagnostics(const MetricField& g, const ScalarField& psi,
                              Scheme scheme = default_scheme, double threshold = -1.0);

struct BranchSample {
  double t = 0.0;
  std::vector<double> eigenvalues;
  /// Symmetrized-operator eigenvectors, aligned within degenerate clusters.
  Eigen::MatrixXd sym_vectors;
  /// labels[i] is the branch id of eigenvalues[i].
  std::vector<int> labels;
  /// Overlap with the matched vector at the previous sample (1 at the first).
  std::vector<double> overlaps;
  double kernel_tol = 0.0;
};

struct BranchTrace {
  std::vector<BranchSample> samples;
  /// Branch ids whose best overlap fell below 0.5 somewhere.
  std::vector<int> ambiguous;
  /// Value of one branch at every sample (NaN where it left the window).
  std::vector<double> branch(int id) const;
  bool is_ambiguous(int id) const;
};

struct TrackOptions {
  int window = 8;
  Scheme scheme = default_scheme;
  EigenOptions eigen;
  /// Ambiguity threshold for the best overlap.
  double min_overlap = 0.5;
};

/// Eigenpairs of Y_{g(t)} at every t, matched between neighbours by largest
/// eigenvector overlap (ties broken by eigenvalue proximity).
BranchTrace track_branch(const MetricCurve& curve, double c, const std::vector<double>& t_grid,
                         const TrackOptions& options = {});

struct KernelMetric {
  double t = 0.0;
  MetricField metric;
  /// Crossing eigenfunction, W-normalized.
  ScalarField psi;
  double eigenvalue = 0.0;
  SpectralDecomposition kernel;
  BranchTrace trace;
  int bisection_steps = 0;
};

struct SearchOptions {
  /// Coarse samples for the sign-change scan; empty picks 17 points over
  /// [0, 0.95 t_max].
  std::vector<double> t_grid;
  /// Bisection stops when the bracket is shorter than this.
  double tolerance = 1e-10;
  TrackOptions track;
  /// Kernel tolerance for the returned kernel; <= 0 picks the default.
  double tau = 0.0;
};

/// Bisects the first sign change of branch `branch_index` along the curve.
/// Throws NoSignChange, or BranchAmbiguity if the branch cannot be followed.
KernelMetric find_kernel_metric(const MetricCurve& curve, double c, int branch_index,
                                const SearchOptions& options = {});

struct BreakOptions {
  Scheme scheme = default_scheme;
  EigenOptions eigen;
  int levels = 20;
  /// Candidate steps evaluated concurrently (results do not depend on it).
  int threads = 1;
};

struct BreakStep {
  int multiplicity = 0;
  double t = 0.0;
  double hstar_norm = 0.0;
  /// Kernel eigenvalue derivative along the normalized step direction.
  std::vector<double> derivatives;
};

struct BreakResult {
  MetricField metric;
  /// Kernel multiplicity before each step and after the last one.
  std::vector<int> trace;
  std::vector<BreakStep> steps;
  double kernel_tol = 0.0;
};

/// Removes the kernel by steps along normalized h*. `tau <= 0` fixes the
/// tolerance from the first kernel solve. Throws DisallowedCoupling,
/// FirstOrderDegenerate or LineSearchFailure.
BreakResult break_kernel(const MetricField& g0, double c, double tau, double eps,
                         const BreakOptions& options = {});

} // namespace confspec

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "confspec/eigensolver.hpp"
#include "confspec/fields.hpp"
#include "confspec/geometry.hpp"

namespace confspec {

/// c_n = (n - 2) / (4 (n - 1)). Throws DimensionTooSmall for n < 3.
double coupling_constant(int n);

/// True for the couplings c = 0 and c = 1/2, for which the kernel-breaking
/// argument does not apply.
bool is_excluded_coupling(double c);

/// Discrete -Delta_g + c R_g acting in L^2(dV_g).
///
/// The pointwise operator L = -g^ij d_i d_j + g^ij Gamma^k_ij d_k + c R is
/// conjugated by the square root of the mass W = cell volume * sqrt(det g)
/// and symmetrized,
///     S = ( W^{1/2} L W^{-1/2} + (W^{1/2} L W^{-1/2})^T ) / 2,
/// so that S is exactly symmetric. Eigenvectors y of S map to W-orthonormal
/// eigenfunctions x = W^{-1/2} y of the weighted problem. The operator is
/// applied matrix-free; `apply` acts on y-vectors.
class OperatorPair : public SymmetricOperator {
public:
  OperatorPair(const MetricField& g, double c, const ScalarField& scalar_curvature,
               const ChristoffelField& gamma, Scheme scheme);

  const Grid& grid() const noexcept { return grid_; }
  Scheme scheme() const noexcept { return scheme_; }
  double coupling() const noexcept { return c_; }
  int dim() const noexcept { return grid_.dim(); }
  /// Set when c is 0 or 1/2.
  bool excluded_coupling() const noexcept { return excluded_; }

  const std::vector<double>& mass() const noexcept { return mass_; }
  const std::vector<double>& sqrt_mass() const noexcept { return sqrt_mass_; }
  /// c R at every node.
  const std::vector<double>& potential() const noexcept { return potential_; }

  std::size_t size() const override { return grid_.size(); }
  void apply(const Eigen::MatrixXd& y, Eigen::MatrixXd& out) const override;

  /// out = L f (unsymmetrized pointwise operator).
  void apply_pointwise(std::span<const double> f, std::span<double> out) const;
  /// out = L^T f.
  void apply_pointwise_transpose(std::span<const double> f, std::span<double> out) const;

  /// Estimate of ||A - A^T|| / ||A|| for A = W^{1/2} L W^{-1/2} from random probes;
  /// the antisymmetric part is pure discretization error.
  double antisymmetry_estimate(int probes = 4, std::uint64_t seed = 7) const;

  /// Flat-torus model (K + sigma)^{-1}, used to precondition eigensolves.
  const SymmetricOperator& preconditioner() const { return *preconditioner_; }

private:
  Grid grid_;
  Scheme scheme_;
  double c_;
  bool excluded_;
  std::shared_ptr<const Differentiator> diff_;
  std::vector<std::vector<double>> inv_metric_;  // [sym(i,j)][node] g^ij
  std::vector<std::vector<double>> drift_;       // [k][node] g^ij Gamma^k_ij
  std::vector<double> potential_;
  std::vector<double> mass_, sqrt_mass_;
  std::shared_ptr<const SymmetricOperator> preconditioner_;
};

/// Y_g-type operator -Delta_g + c R_g. Pass c = coupling_constant(n) for the
/// conformal Laplacian.
OperatorPair assemble(const MetricField& g, double c, Scheme scheme = default_scheme);
/// As assemble, with a prescribed scalar-curvature field in the potential.
OperatorPair assemble_with_potential(const MetricField& g, double c,
                                     const ScalarField& scalar_curvature,
                                     Scheme scheme = default_scheme);

struct SignCounts {
  int negative = 0;
  int zero = 0;
  int positive = 0;
  bool operator==(const SignCounts&) const = default;
};

/// Lowest part of the spectrum of an OperatorPair.
struct SpectralDecomposition {
  Grid grid;
  std::vector<double> eigenvalues;  ///< ascending
  Eigen::MatrixXd vectors;          ///< W-orthonormal eigenfunctions, one per column
  Eigen::MatrixXd sym_vectors;      ///< orthonormal eigenvectors of the symmetrized operator
  std::vector<double> residuals;    ///< ||S y - l y||
  double kernel_tol = 0.0;
  SignCounts counts;
  int iterations = 0;
  bool dense = false;

  std::size_t size() const { return eigenvalues.size(); }
  ScalarField eigenfunction(std::size_t i) const;
  /// Index ranges [first, last) of numerically degenerate clusters (gap < kernel_tol).
  std::vector<std::pair<std::size_t, std::size_t>> clusters() const;
  /// Restriction to eigenpairs with |lambda| < kernel_tol.
  SpectralDecomposition kernel_part() const;
};

/// tau = max(1e-8, kappa * h^p * scale), h = max_a 1/N_a the relative grid
/// spacing and p the scheme's nominal order.
double default_kernel_tolerance(const Grid& grid, Scheme scheme, double scale,
                                double kappa = 1.0);

/// k algebraically smallest eigenpairs. `kernel_tol <= 0` selects the default
/// tolerance with scale = largest computed |eigenvalue|.
SpectralDecomposition eig_lowest(const OperatorPair& op, int k, const EigenOptions& options = {},
                                 double kernel_tol = 0.0,
                                 const Eigen::MatrixXd* initial = nullptr);

/// Eigenpairs with |lambda| < tau; the eigen window grows until it brackets
/// tau. `tau <= 0` selects the default tolerance.
SpectralDecomposition kernel(const MetricField& g, double c, double tau,
                             Scheme scheme = default_scheme, const EigenOptions& options = {});
SpectralDecomposition kernel(const OperatorPair& op, double tau, const EigenOptions& options = {},
                             int initial_window = 8);

struct CountResult {
  int count = 0;
  /// False when the computed window never exceeded the threshold (TruncationWarning).
  bool bracketed = true;
  std::vector<double> eigenvalues;
};

/// Number of eigenvalues below s.
CountResult count_below(const OperatorPair& op, double s, const EigenOptions& options = {},
                        int initial_window = 8, int max_window = 512);
CountResult count_below(const MetricField& g, double c, double s, Scheme scheme = default_scheme,
                        const EigenOptions& options = {});

struct CovarianceReport {
  SignCounts before;
  SignCounts after;
  bool counts_agree = false;
  double kernel_tol = 0.0;
  std::vector<double> eigenvalues_before;
  std::vector<double> eigenvalues_after;
  /// ||L_hat (u^{-1} phi)|| / ||u^{-1} phi|| for each near-zero eigenfunction phi of Y_g.
  std::vector<double> kernel_residuals;
};

/// Compares spectra of Y_g and Y_{g_hat}, g_hat = u^{4/(n-2)} g.
CovarianceReport conformal_covariance_check(const MetricField& g, const ScalarField& u, int k,
                                            Scheme scheme = default_scheme,
                                            const EigenOptions& options = {},
                                            double tau = 0.0);

} // namespace confspec

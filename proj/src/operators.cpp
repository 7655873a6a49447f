#include "confspec/operators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "confspec/error.hpp"

namespace confspec {

double coupling_constant(int n) {
  if (n < 3) fail(ErrorKind::DimensionTooSmall, "coupling constant needs n >= 3");
  return (n - 2.0) / (4.0 * (n - 1.0));
}

bool is_excluded_coupling(double c) {
  return std::abs(c) < 1e-14 || std::abs(c - 0.5) < 1e-14;
}

namespace {

template <class LineOp>
void for_each_line(const Grid& grid, int axis, LineOp&& op) {
  const std::size_t stride = grid.stride(axis);
  const std::size_t block = stride * grid.resolution(axis);
  const std::size_t outer = grid.size() / block;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t inner = 0; inner < stride; ++inner) op(o * block + inner, stride);
}

/// Exact inverse of K + sigma, K = -sum_a gbar_a D2_a on the flat torus,
/// applied through the per-axis eigenbases of the circulant D2 matrices.
class FlatPreconditioner : public SymmetricOperator {
public:
  FlatPreconditioner(const Differentiator& d, std::vector<double> axis_scale, double sigma)
      : grid_(d.grid()) {
    const int dim = grid_.dim();
    std::vector<Eigen::VectorXd> mu(dim);
    for (int a = 0; a < dim; ++a) {
      const int n = grid_.resolution(a);
      const auto& w = d.second_weights(a);
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = w[((j - i) % n + n) % n];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
      basis_.push_back(es.eigenvectors());
      mu[a] = es.eigenvalues();
    }
    inv_denominator_.resize(grid_.size());
    for (std::size_t node = 0; node < grid_.size(); ++node) {
      double s = sigma;
      for (int a = 0; a < dim; ++a) s -= axis_scale[a] * mu[a][grid_.coordinate_index(node, a)];
      inv_denominator_[node] = 1.0 / s;
    }
  }

  std::size_t size() const override { return grid_.size(); }

  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const override {
    y.resize(x.rows(), x.cols());
    std::vector<double> v(grid_.size());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = x(static_cast<Eigen::Index>(i), c);
      for (int a = 0; a < grid_.dim(); ++a) transform(v, a, true);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] *= inv_denominator_[i];
      for (int a = grid_.dim() - 1; a >= 0; --a) transform(v, a, false);
      for (std::size_t i = 0; i < v.size(); ++i) y(static_cast<Eigen::Index>(i), c) = v[i];
    }
  }

private:
  void transform(std::vector<double>& v, int axis, bool forward) const {
    const int n = grid_.resolution(axis);
    const Eigen::MatrixXd& q = basis_[axis];
    Eigen::VectorXd line(n), out(n);
    for_each_line(grid_, axis, [&](std::size_t start, std::size_t stride) {
      for (int i = 0; i < n; ++i) line[i] = v[start + i * stride];
      if (forward)
        out.noalias() = q.transpose() * line;
      else
        out.noalias() = q * line;
      for (int i = 0; i < n; ++i) v[start + i * stride] = out[i];
    });
  }

  Grid grid_;
  std::vector<Eigen::MatrixXd> basis_;
  std::vector<double> inv_denominator_;
};

} // namespace

OperatorPair::OperatorPair(const MetricField& g, double c, const ScalarField& scalar_curvature,
                           const ChristoffelField& gamma, Scheme scheme)
    : grid_(g.grid()), scheme_(scheme), c_(c), excluded_(is_excluded_coupling(c)),
      diff_(std::make_shared<Differentiator>(g.grid(), scheme)) {
  require_same_grid(g.grid(), scalar_curvature.grid(), "assemble");
  if (!std::isfinite(c)) fail(ErrorKind::InvalidArgument, "coupling must be finite");
  const int n = grid_.dim();
  const std::size_t size = grid_.size();

  inv_metric_.assign(n * (n + 1) / 2, std::vector<double>(size));
  drift_.assign(n, std::vector<double>(size, 0.0));
  potential_.resize(size);
  mass_ = quadrature_weights(g);
  sqrt_mass_.resize(size);
  std::vector<double> axis_scale(n, 0.0);
  double max_potential = 0.0;
  for (std::size_t node = 0; node < size; ++node) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) inv_metric_[sym_index(i, j, n)][node] = g.inv(node, i, j);
    for (int k = 0; k < n; ++k) {
      double b = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b += g.inv(node, i, j) * gamma(node, k, i, j);
      drift_[k][node] = b;
    }
    for (int a = 0; a < n; ++a) axis_scale[a] += g.inv(node, a, a) / size;
    potential_[node] = c * scalar_curvature[node];
    max_potential = std::max(max_potential, std::abs(potential_[node]));
    sqrt_mass_[node] = std::sqrt(mass_[node]);
  }
  preconditioner_ =
      std::make_shared<FlatPreconditioner>(*diff_, axis_scale, std::max(1.0, max_potential));
}

void OperatorPair::apply_pointwise(std::span<const double> f, std::span<double> out) const {
  const int n = grid_.dim();
  const std::size_t size = grid_.size();
  std::vector<double> buf(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = potential_[i] * f[i];
  for (int a = 0; a < n; ++a) {
    diff_->second(f, buf, a);
    const auto& gaa = inv_metric_[sym_index(a, a, n)];
    for (std::size_t i = 0; i < size; ++i) out[i] -= gaa[i] * buf[i];
  }
  std::vector<std::vector<double>> df(n, std::vector<double>(size));
  for (int k = 0; k < n; ++k) {
    diff_->first(f, df[k], k);
    const auto& b = drift_[k];
    for (std::size_t i = 0; i < size; ++i) out[i] += b[i] * df[k][i];
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      diff_->first(df[b], buf, a);
      const auto& gab = inv_metric_[sym_index(a, b, n)];
      for (std::size_t i = 0; i < size; ++i) out[i] -= 2.0 * gab[i] * buf[i];
    }
}

void OperatorPair::apply_pointwise_transpose(std::span<const double> f,
                                             std::span<double> out) const {
  const int n = grid_.dim();
  const std::size_t size = grid_.size();
  std::vector<double> tmp(size), buf(size), buf2(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = potential_[i] * f[i];
  for (int a = 0; a < n; ++a) {
    const auto& gaa = inv_metric_[sym_index(a, a, n)];
    for (std::size_t i = 0; i < size; ++i) tmp[i] = gaa[i] * f[i];
    diff_->second(tmp, buf, a);
    for (std::size_t i = 0; i < size; ++i) out[i] -= buf[i];
  }
  for (int k = 0; k < n; ++k) {
    const auto& b = drift_[k];
    for (std::size_t i = 0; i < size; ++i) tmp[i] = b[i] * f[i];
    diff_->first(tmp, buf, k);
    for (std::size_t i = 0; i < size; ++i) out[i] -= buf[i];
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const auto& gab = inv_metric_[sym_index(a, b, n)];
      for (std::size_t i = 0; i < size; ++i) tmp[i] = gab[i] * f[i];
      diff_->first(tmp, buf, b);
      diff_->first(buf, buf2, a);
      for (std::size_t i = 0; i < size; ++i) out[i] -= 2.0 * buf2[i];
    }
}

void OperatorPair::apply(const Eigen::MatrixXd& y, Eigen::MatrixXd& out) const {
  const std::size_t size = grid_.size();
  out.resize(y.rows(), y.cols());
  std::vector<double> f(size), lf(size), ltf(size);
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    for (std::size_t i = 0; i < size; ++i) f[i] = y(static_cast<Eigen::Index>(i), c) / sqrt_mass_[i];
    apply_pointwise(f, lf);
    for (std::size_t i = 0; i < size; ++i) f[i] = y(static_cast<Eigen::Index>(i), c) * sqrt_mass_[i];
    apply_pointwise_transpose(f, ltf);
    for (std::size_t i = 0; i < size; ++i)
      out(static_cast<Eigen::Index>(i), c) = 0.5 * (sqrt_mass_[i] * lf[i] + ltf[i] / sqrt_mass_[i]);
  }
}

double OperatorPair::antisymmetry_estimate(int probes, std::uint64_t seed) const {
  const std::size_t size = grid_.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(size), f(size), a(size), at(size);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    for (double& x : v) x = normal(rng);
    for (std::size_t i = 0; i < size; ++i) f[i] = v[i] / sqrt_mass_[i];
    apply_pointwise(f, a);
    for (std::size_t i = 0; i < size; ++i) f[i] = v[i] * sqrt_mass_[i];
    apply_pointwise_transpose(f, at);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      const double ai = sqrt_mass_[i] * a[i];
      const double ati = at[i] / sqrt_mass_[i];
      num += (ai - ati) * (ai - ati);
      den += 0.25 * (ai + ati) * (ai + ati);
    }
    worst = std::max(worst, den > 0 ? std::sqrt(num / den) : 0.0);
  }
  return worst;
}

OperatorPair assemble(const MetricField& g, double c, Scheme scheme) {
  const Curvature curv = curvature(g, scheme);
  return OperatorPair(g, c, curv.scalar, curv.gamma, scheme);
}

OperatorPair assemble_with_potential(const MetricField& g, double c,
                                     const ScalarField& scalar_curvature, Scheme scheme) {
  return OperatorPair(g, c, scalar_curvature, christoffel(g, scheme), scheme);
}

ScalarField SpectralDecomposition::eigenfunction(std::size_t i) const {
  const auto col = vectors.col(static_cast<Eigen::Index>(i));
  return ScalarField(grid, std::vector<double>(col.data(), col.data() + col.size()));
}

std::vector<std::pair<std::size_t, std::size_t>> SpectralDecomposition::clusters() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= eigenvalues.size(); ++i) {
    if (i == eigenvalues.size() || eigenvalues[i] - eigenvalues[i - 1] >= kernel_tol) {
      out.emplace_back(start, i);
      start = i;
    }
  }
  return out;
}

namespace {

SignCounts sign_counts(const std::vector<double>& values, double tau) {
  SignCounts s;
  for (double v : values) {
    if (std::abs(v) < tau)
      ++s.zero;
    else if (v < 0)
      ++s.negative;
    else
      ++s.positive;
  }
  return s;
}

SpectralDecomposition select(const SpectralDecomposition& d, const std::vector<std::size_t>& idx) {
  SpectralDecomposition out{d.grid, {}, {}, {}, {}, d.kernel_tol, {}, d.iterations, d.dense};
  const Eigen::Index rows = d.vectors.rows();
  out.vectors.resize(rows, static_cast<Eigen::Index>(idx.size()));
  out.sym_vectors.resize(rows, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    out.eigenvalues.push_back(d.eigenvalues[idx[c]]);
    out.residuals.push_back(d.residuals[idx[c]]);
    out.vectors.col(static_cast<Eigen::Index>(c)) = d.vectors.col(static_cast<Eigen::Index>(idx[c]));
    out.sym_vectors.col(static_cast<Eigen::Index>(c)) =
        d.sym_vectors.col(static_cast<Eigen::Index>(idx[c]));
  }
  out.counts = sign_counts(out.eigenvalues, out.kernel_tol);
  return out;
}

} // namespace

SpectralDecomposition SpectralDecomposition::kernel_part() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    if (std::abs(eigenvalues[i]) < kernel_tol) idx.push_back(i);
  return select(*this, idx);
}

double default_kernel_tolerance(const Grid& grid, Scheme scheme, double scale, double kappa) {
  // Relative spacing, so the tolerance does not depend on the torus periods.
  double h = 0.0;
  for (int a = 0; a < grid.dim(); ++a) h = std::max(h, 1.0 / grid.resolution(a));
  return std::max(1e-8, kappa * std::pow(h, nominal_order(scheme)) * scale);
}

SpectralDecomposition eig_lowest(const OperatorPair& op, int k, const EigenOptions& options,
                                 double kernel_tol, const Eigen::MatrixXd* initial) {
  if (k < 1 || static_cast<std::size_t>(k) > op.size())
    fail(ErrorKind::InvalidArgument, "eig_lowest: k must lie in [1, node count]");
  const EigenResult r = lowest_eigenpairs(op, &op.preconditioner(), k, options, initial);

  SpectralDecomposition out{op.grid(), {}, {}, r.vectors, {}, 0.0, {}, r.iterations, r.dense};
  out.eigenvalues.assign(r.values.data(), r.values.data() + r.values.size());
  out.residuals.assign(r.residuals.data(), r.residuals.data() + r.residuals.size());
  out.vectors = r.vectors;
  const auto& sw = op.sqrt_mass();
  for (Eigen::Index i = 0; i < out.vectors.rows(); ++i) out.vectors.row(i) /= sw[i];
  double scale = 0.0;
  for (double v : out.eigenvalues) scale = std::max(scale, std::abs(v));
  out.kernel_tol = kernel_tol > 0 ? kernel_tol : default_kernel_tolerance(op.grid(), op.scheme(), scale);
  out.counts = sign_counts(out.eigenvalues, out.kernel_tol);
  return out;
}

SpectralDecomposition kernel(const OperatorPair& op, double tau, const EigenOptions& options,
                             int initial_window) {
  const int nodes = static_cast<int>(op.size());
  int k = std::min(std::max(1, initial_window), nodes);
  const Eigen::MatrixXd* warm = nullptr;
  SpectralDecomposition d = eig_lowest(op, k, options, tau);
  while (d.eigenvalues.back() < d.kernel_tol && k < nodes) {
    k = std::min(2 * k, nodes);
    warm = &d.sym_vectors;
    d = eig_lowest(op, k, options, tau, warm);
  }
  return d.kernel_part();
}

SpectralDecomposition kernel(const MetricField& g, double c, double tau, Scheme scheme,
                             const EigenOptions& options) {
  return kernel(assemble(g, c, scheme), tau, options);
}

CountResult count_below(const OperatorPair& op, double s, const EigenOptions& options,
                        int initial_window, int max_window) {
  const int nodes = static_cast<int>(op.size());
  const int cap = std::min(nodes, max_window);
  int k = std::min(std::max(1, initial_window), cap);
  SpectralDecomposition d = eig_lowest(op, k, options);
  while (d.eigenvalues.back() < s && k < cap) {
    k = std::min(2 * k, cap);
    const Eigen::MatrixXd warm = d.sym_vectors;
    d = eig_lowest(op, k, options, 0.0, &warm);
  }
  CountResult out;
  out.eigenvalues = d.eigenvalues;
  out.bracketed = d.eigenvalues.back() >= s || k == nodes;
  out.count = static_cast<int>(
      std::count_if(d.eigenvalues.begin(), d.eigenvalues.end(), [s](double v) { return v < s; }));
  return out;
}

CountResult count_below(const MetricField& g, double c, double s, Scheme scheme,
                        const EigenOptions& options) {
  return count_below(assemble(g, c, scheme), s, options);
}

CovarianceReport conformal_covariance_check(const MetricField& g, const ScalarField& u, int k,
                                            Scheme scheme, const EigenOptions& options,
                                            double tau) {
  const double c = coupling_constant(g.dim());
  const MetricField gh = conformal_rescale(g, u);
  const OperatorPair op = assemble(g, c, scheme);
  const OperatorPair oph = assemble(gh, c, scheme);
  SpectralDecomposition before = eig_lowest(op, k, options, tau);
  SpectralDecomposition after = eig_lowest(oph, k, options, tau);

  CovarianceReport rep;
  rep.kernel_tol = tau > 0 ? tau : std::max(before.kernel_tol, after.kernel_tol);
  rep.before = sign_counts(before.eigenvalues, rep.kernel_tol);
  rep.after = sign_counts(after.eigenvalues, rep.kernel_tol);
  rep.counts_agree = rep.before == rep.after;
  rep.eigenvalues_before = before.eigenvalues;
  rep.eigenvalues_after = after.eigenvalues;

  const std::size_t size = g.grid().size();
  const auto& wh = oph.mass();
  std::vector<double> w(size), lw(size);
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (std::abs(before.eigenvalues[i]) >= rep.kernel_tol) continue;
    for (std::size_t node = 0; node < size; ++node)
      w[node] = before.vectors(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(i)) / u[node];
    oph.apply_pointwise(w, lw);
    double num = 0.0, den = 0.0;
    for (std::size_t node = 0; node < size; ++node) {
      num += wh[node] * lw[node] * lw[node];
      den += wh[node] * w[node] * w[node];
    }
    rep.kernel_residuals.push_back(std::sqrt(num / den));
  }
  return rep;
}

} // namespace confspec

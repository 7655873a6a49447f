#include "confspec/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "confspec/error.hpp"

namespace confspec {

Eigen::MatrixXd materialize(const SymmetricOperator& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd out(n, n);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, 1);
  Eigen::MatrixXd col;
  for (Eigen::Index j = 0; j < n; ++j) {
    e(j, 0) = 1.0;
    a.apply(e, col);
    out.col(j) = col.col(0);
    e(j, 0) = 0.0;
  }
  return out;
}

EigenResult dense_lowest(const Eigen::MatrixXd& a, int k) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) fail(ErrorKind::ConvergenceFailure, "dense eigensolver failed");
  EigenResult r;
  r.values = es.eigenvalues().head(k);
  r.vectors = es.eigenvectors().leftCols(k);
  r.residuals = (sym * r.vectors - r.vectors * r.values.asDiagonal()).colwise().norm().transpose();
  r.dense = true;
  return r;
}

namespace {

/// Orthonormalizes the columns of z against the orthonormal columns of x and
/// among themselves; drops numerically dependent directions.
Eigen::MatrixXd orthonormalize_against(const Eigen::MatrixXd& x, Eigen::MatrixXd z) {
  for (int pass = 0; pass < 2; ++pass) {
    if (x.cols() > 0) z -= x * (x.transpose() * z);
    if (z.cols() == 0) return z;
    // SVQB
    Eigen::VectorXd scale = z.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j) scale[j] = scale[j] > 0 ? 1.0 / scale[j] : 0.0;
    z = z * scale.asDiagonal();
    const Eigen::MatrixXd gram = z.transpose() * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::VectorXd& d = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(d.maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < d.size(); ++j)
      if (d[j] > cutoff) keep.push_back(j);
    Eigen::MatrixXd basis(z.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      basis.col(static_cast<Eigen::Index>(c)) =
          z * es.eigenvectors().col(keep[c]) / std::sqrt(d[keep[c]]);
    z = std::move(basis);
  }
  return z;
}

} // namespace

EigenResult lobpcg(const SymmetricOperator& a, const SymmetricOperator* preconditioner, int k,
                   const EigenOptions& options, const Eigen::MatrixXd* initial) {
  const auto n = static_cast<Eigen::Index>(a.size());
  if (k < 1 || k > n) fail(ErrorKind::InvalidArgument, "eigensolver: k out of range");
  const int guard = options.guard >= 0 ? options.guard : std::max(4, k / 2);
  const auto m = static_cast<Eigen::Index>(std::min<Eigen::Index>(n, k + guard));
  if (3 * m >= n) {
    Eigen::MatrixXd dense = materialize(a);
    return dense_lowest(dense, k);
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);
  if (initial != nullptr) {
    const Eigen::Index c = std::min<Eigen::Index>(initial->cols(), m);
    x.leftCols(c) = initial->leftCols(c);
  }
  x = orthonormalize_against(Eigen::MatrixXd(n, 0), x);
  if (x.cols() < m) fail(ErrorKind::ConvergenceFailure, "eigensolver: degenerate start block");

  Eigen::MatrixXd ax;
  a.apply(x, ax);
  {
    Eigen::MatrixXd h = x.transpose() * ax;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    x = x * es.eigenvectors();
    ax = ax * es.eigenvectors();
  }
  Eigen::VectorXd theta = (x.transpose() * ax).diagonal();

  Eigen::MatrixXd p(n, 0), ap(n, 0);
  Eigen::VectorXd res(m);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (it > 0 && it % 25 == 0) a.apply(x, ax);  // limit drift of the updated products
    Eigen::MatrixXd r = ax - x * theta.asDiagonal();
    res = r.colwise().norm().transpose();

    bool done = true;
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < m; ++j) {
      const bool ok = res[j] <= options.tolerance * std::max(1.0, std::abs(theta[j]));
      if (!ok) {
        active.push_back(j);
        if (j < k) done = false;
      }
    }
    if (done) break;

    Eigen::MatrixXd ra(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c)
      ra.col(static_cast<Eigen::Index>(c)) = r.col(active[c]);
    Eigen::MatrixXd w;
    if (preconditioner != nullptr)
      preconditioner->apply(ra, w);
    else
      w = ra;

    Eigen::MatrixXd z(n, w.cols() + p.cols());
    z << w, p;
    z = orthonormalize_against(x, z);
    if (z.cols() == 0) break;
    Eigen::MatrixXd az;
    a.apply(z, az);

    Eigen::MatrixXd v(n, m + z.cols()), av(n, m + z.cols());
    v << x, z;
    av << ax, az;
    Eigen::MatrixXd h = v.transpose() * av;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    const Eigen::MatrixXd c = es.eigenvectors().leftCols(m);
    theta = es.eigenvalues().head(m);

    const Eigen::MatrixXd cz = c.bottomRows(z.cols());
    p = z * cz;
    ap = az * cz;
    x = v * c;
    ax = av * c;
  }

  a.apply(x, ax);
  Eigen::MatrixXd r = ax - x * theta.asDiagonal();
  res = r.colwise().norm().transpose();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < k; ++j)
    worst = std::max(worst, res[j] / std::max(1.0, std::abs(theta[j])));
  if (worst > 10.0 * options.tolerance) {
    std::ostringstream os;
    os << "LOBPCG did not converge: relative residual " << worst << " after " << it
       << " iterations";
    fail(ErrorKind::ConvergenceFailure, os.str());
  }

  EigenResult out;
  out.values = theta.head(k);
  out.vectors = x.leftCols(k);
  out.residuals = res.head(k);
  out.iterations = it;
  return out;
}

EigenResult lowest_eigenpairs(const SymmetricOperator& a, const SymmetricOperator* preconditioner,
                              int k, const EigenOptions& options, const Eigen::MatrixXd* initial) {
  const std::size_t n = a.size();
  if (options.dense && n > options.dense_limit)
    fail(ErrorKind::InvalidArgument, "dense eigensolve requested above the dense size limit");
  if (options.dense || n <= options.dense_auto) return dense_lowest(materialize(a), k);
  try {
    return lobpcg(a, preconditioner, k, options, initial);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ConvergenceFailure || n > options.dense_limit) throw;
    return dense_lowest(materialize(a), k);
  }
}

} // namespace confspec

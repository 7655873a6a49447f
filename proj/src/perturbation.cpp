#include "confspec/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "confspec/error.hpp"
#include "confspec/small_matrix.hpp"

namespace confspec {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

/// Pointwise eigenvalue range of g^{-1/2} h g^{-1/2}.
std::pair<double, double> relative_eigen_range(const MetricField& g, const SymTensorField& h) {
  require_same_grid(g.grid(), h.grid(), "relative eigenvalues");
  double lo = inf, hi = -inf;
  for (std::size_t node = 0; node < g.grid().size(); ++node) {
    const SmallMat gm = unpack_sym(g.tensor(), node);
    const SmallMat hm = unpack_sym(h, node);
    Eigen::LLT<SmallMat> llt(gm);
    const SmallMat l = llt.matrixL();
    SmallMat m = l.triangularView<Eigen::Lower>().solve(hm);
    m = l.triangularView<Eigen::Lower>().solve(m.transpose().eval()).eval();
    Eigen::SelfAdjointEigenSolver<SmallMat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  return {lo, hi};
}

double weighted_dot(const std::vector<double>& w, const double* a, const double* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
  return s;
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

ScalarField column_field(const Grid& grid, const Eigen::MatrixXd& m, Eigen::Index col) {
  const auto c = m.col(col);
  return ScalarField(grid, std::vector<double>(c.data(), c.data() + c.size()));
}

} // namespace

MetricCurve::MetricCurve(MetricField base, SymTensorField direction)
    : base_(std::move(base)), direction_(std::move(direction)) {
  const auto [lo, hi] = relative_eigen_range(base_, direction_);
  t_hi_ = lo < 0 ? -1.0 / lo : inf;
  t_lo_ = hi > 0 ? -1.0 / hi : -inf;
}

MetricCurve::MetricCurve(MetricField base, SymTensorField direction,
                         std::function<MetricField(double)> evaluator)
    : MetricCurve(std::move(base), std::move(direction)) {
  evaluator_ = std::move(evaluator);
}

MetricField MetricCurve::at(double t) const {
  if (t == 0.0) return base_;
  try {
    if (evaluator_) return evaluator_(t);
    if (t <= t_lo_ || t >= t_hi_) {
      std::ostringstream os;
      os << "t = " << t << " outside the positive-definite interval (" << t_lo_ << ", " << t_hi_
         << ")";
      fail(ErrorKind::SPDViolation, os.str());
    }
    return MetricField(base_.tensor() + t * direction_);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularMetric) fail(ErrorKind::SPDViolation, e.what());
    throw;
  }
}

double pointwise_norm(const MetricField& g, const SymTensorField& h) {
  const auto [lo, hi] = relative_eigen_range(g, h);
  return std::max(std::abs(lo), std::abs(hi));
}

ScalarField dot_scalar_curvature(const MetricField& g, const Curvature& curv,
                                 const SymTensorField& h, Scheme scheme) {
  require_same_grid(g.grid(), h.grid(), "dot_scalar_curvature");
  const ScalarField trh = trace(g, h);
  const ScalarField lap_trh = trace(g, hessian(g, curv.gamma, trh, scheme));
  return double_divergence(g, curv.gamma, h, scheme) - inner(g, h, curv.ricci) - lap_trh;
}

ScalarField dot_scalar_curvature(const MetricField& g, const SymTensorField& h, Scheme scheme) {
  return dot_scalar_curvature(g, curvature(g, scheme), h, scheme);
}

ScalarField dot_laplacian(const MetricField& g, const ChristoffelField& gamma,
                          const SymTensorField& h, const ScalarField& f, Scheme scheme) {
  require_same_grid(g.grid(), h.grid(), "dot_laplacian");
  require_same_grid(g.grid(), f.grid(), "dot_laplacian");
  const CovectorField df = gradient(f, scheme);
  const CovectorField v =
      divergence(g, gamma, h, scheme) + 0.5 * gradient(trace(g, h), scheme);
  return inner(g, v, df) - inner(g, h, hessian(g, gamma, f, scheme));
}

ScalarField dot_laplacian(const MetricField& g, const SymTensorField& h, const ScalarField& f,
                          Scheme scheme) {
  return dot_laplacian(g, christoffel(g, scheme), h, f, scheme);
}

QMatrix q_operator(const MetricField& g, const SymTensorField& h, double c,
                   const SpectralDecomposition& kern, Scheme scheme) {
  if (kern.size() == 0) fail(ErrorKind::EmptyKernel, "q_operator: kernel is empty");
  require_same_grid(g.grid(), h.grid(), "q_operator");
  const Curvature curv = curvature(g, scheme);
  const ScalarField rdot = dot_scalar_curvature(g, curv, h, scheme);
  const std::vector<double> w = quadrature_weights(g);
  const int m = static_cast<int>(kern.size());

  Eigen::MatrixXd ybasis(kern.vectors.rows(), m);
  for (int b = 0; b < m; ++b) {
    const ScalarField psi = column_field(g.grid(), kern.vectors, b);
    const ScalarField ldot = dot_laplacian(g, curv.gamma, h, psi, scheme);
    for (std::size_t i = 0; i < w.size(); ++i)
      ybasis(static_cast<Eigen::Index>(i), b) = c * rdot[i] * psi[i] - ldot[i];
  }
  Eigen::MatrixXd raw(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      raw(a, b) = weighted_dot(w, kern.vectors.col(a).data(), ybasis.col(b).data());

  QMatrix q;
  q.m = m;
  q.entries = 0.5 * (raw + raw.transpose());
  const double norm = raw.norm();
  q.asymmetry = norm > 0 ? (raw - raw.transpose()).norm() / norm : 0.0;
  q.basis = kern.vectors;
  q.kernel_eigenvalues = kern.eigenvalues;
  return q;
}

QMatrix q_operator(const MetricField& g, const SymTensorField& h, double c, double tau,
                   Scheme scheme, const EigenOptions& options) {
  return q_operator(g, h, c, kernel(g, c, tau, scheme, options), scheme);
}

std::vector<double> eigenvalue_derivatives(const QMatrix& q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.entries, Eigen::EigenvaluesOnly);
  const auto& v = es.eigenvalues();
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::vector<double> eigenvalue_derivatives(const MetricField& g, const SymTensorField& h, double c,
                                           double tau, Scheme scheme,
                                           const EigenOptions& options) {
  return eigenvalue_derivatives(q_operator(g, h, c, tau, scheme, options));
}

SymTensorField kernel_breaking_tensor(const MetricField& g, const Curvature& curv,
                                      const ScalarField& psi, double c, Scheme scheme) {
  if (is_excluded_coupling(c))
    fail(ErrorKind::DisallowedCoupling, "kernel-breaking tensor undefined for c = 0 or c = 1/2");
  require_same_grid(g.grid(), psi.grid(), "kernel_breaking_tensor");
  const CovectorField dpsi = gradient(psi, scheme);
  const SymTensorField hess = traceless(g, hessian(g, curv.gamma, psi, scheme));
  const SymTensorField ric = traceless(g, curv.ricci);
  const SymTensorField first = c * (psi * (2.0 * hess - psi * ric));
  return traceless(g, first + (2.0 * c - 1.0) * traceless(g, outer(dpsi, dpsi)));
}

SymTensorField kernel_breaking_tensor(const MetricField& g, const ScalarField& psi, double c,
                                      Scheme scheme) {
  return kernel_breaking_tensor(g, curvature(g, scheme), psi, c, scheme);
}

double IdentityReport::max_residual() const {
  return std::max({residual_direct_full, residual_direct_traceless, residual_full_traceless});
}

IdentityReport derivative_identity_check(const MetricField& g, const ScalarField& psi,
                                         const SymTensorField& h, double c, Scheme scheme,
                                         double trace_tol) {
  require_same_grid(g.grid(), h.grid(), "derivative_identity_check");
  const ScalarField trh = trace(g, h);
  if (trh.max_abs() > trace_tol * std::max(h.max_abs(), 1e-300) && h.max_abs() > 0) {
    std::ostringstream os;
    os << "direction is not traceless: max |tr h| = " << trh.max_abs();
    fail(ErrorKind::NotTraceless, os.str());
  }
  const Curvature curv = curvature(g, scheme);
  const ScalarField rdot = dot_scalar_curvature(g, curv, h, scheme);
  const ScalarField ldot = dot_laplacian(g, curv.gamma, h, psi, scheme);

  IdentityReport r;
  r.direct = l2_inner(g, c * pointwise_product(rdot, psi) - ldot, psi);

  const SymTensorField hess = hessian(g, curv.gamma, psi, scheme);
  const CovectorField dpsi = gradient(psi, scheme);
  const SymTensorField full = c * (psi * (2.0 * hess - psi * curv.ricci)) +
                              (2.0 * c - 1.0) * outer(dpsi, dpsi);
  r.full_form = l2_inner(g, h, full);
  r.traceless_form = l2_inner(g, h, kernel_breaking_tensor(g, curv, psi, c, scheme));

  r.residual_direct_full = relative_gap(r.direct, r.full_form);
  r.residual_direct_traceless = relative_gap(r.direct, r.traceless_form);
  r.residual_full_traceless = relative_gap(r.full_form, r.traceless_form);
  return r;
}

NodalReport nodal_diagnostics(const MetricField& g, const ScalarField& psi, Scheme scheme,
                              double threshold) {
  require_same_grid(g.grid(), psi.grid(), "nodal_diagnostics");
  const Grid& grid = g.grid();
  const auto [lo, hi] = std::minmax_element(psi.data().begin(), psi.data().end());
  if (*hi - *lo <= 1e-12 * std::max(std::abs(*lo), std::abs(*hi)))
    fail(ErrorKind::ConstantField, "nodal diagnostics need a non-constant function");

  const CovectorField dpsi = gradient(psi, scheme);
  const ScalarField grad2 = inner(g, dpsi, dpsi);
  std::vector<double> grad(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grad[i] = std::sqrt(std::max(0.0, grad2[i]));

  NodalReport r;
  r.threshold = threshold >= 0 ? threshold : 0.1 * *std::max_element(grad.begin(), grad.end());
  r.total_cells = grid.size();
  const int n = grid.dim();
  std::vector<double> samples;
  std::vector<std::size_t> corners(std::size_t{1} << n);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    for (std::size_t mask = 0; mask < corners.size(); ++mask) {
      std::size_t cnode = node;
      for (int a = 0; a < n; ++a)
        if (mask & (std::size_t{1} << a)) cnode = grid.shifted(cnode, a, 1);
      corners[mask] = cnode;
    }
    double vmin = inf, vmax = -inf;
    std::size_t closest = corners[0];
    for (std::size_t cn : corners) {
      vmin = std::min(vmin, psi[cn]);
      vmax = std::max(vmax, psi[cn]);
      if (std::abs(psi[cn]) < std::abs(psi[closest])) closest = cn;
    }
    if (vmin <= 0.0 && vmax >= 0.0) samples.push_back(grad[closest]);
  }
  r.nodal_cells = samples.size();
  if (samples.empty()) return r;
  std::sort(samples.begin(), samples.end());
  r.min_gradient = samples.front();
  const std::size_t mid = samples.size() / 2;
  r.median_gradient =
      samples.size() % 2 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
  const auto below = std::lower_bound(samples.begin(), samples.end(), r.threshold) - samples.begin();
  r.below_fraction = static_cast<double>(below) / samples.size();
  return r;
}

std::vector<double> BranchTrace::branch(int id) const {
  std::vector<double> out;
  for (const auto& s : samples) {
    const auto it = std::find(s.labels.begin(), s.labels.end(), id);
    out.push_back(it == s.labels.end() ? std::numeric_limits<double>::quiet_NaN()
                                       : s.eigenvalues[it - s.labels.begin()]);
  }
  return out;
}

bool BranchTrace::is_ambiguous(int id) const {
  return std::find(ambiguous.begin(), ambiguous.end(), id) != ambiguous.end();
}

namespace {

/// Rotates each numerically degenerate cluster of `y` to best match `prev`.
void align_clusters(Eigen::MatrixXd& y, const std::vector<double>& values, double tol,
                    const Eigen::MatrixXd& prev) {
  std::size_t start = 0;
  for (std::size_t i = 1; i <= values.size(); ++i) {
    if (i < values.size() && values[i] - values[i - 1] < tol) continue;
    const auto len = static_cast<Eigen::Index>(i - start);
    if (len > 1) {
      const auto s = static_cast<Eigen::Index>(start);
      const Eigen::MatrixXd m = y.middleCols(s, len).transpose() * prev;
      std::vector<Eigen::Index> order(m.cols());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return m.col(a).norm() > m.col(b).norm();
      });
      Eigen::MatrixXd sub(len, len);
      for (Eigen::Index j = 0; j < len; ++j) sub.col(j) = m.col(order[j]);
      // Keep the chosen previous vectors in their original order.
      std::vector<Eigen::Index> chosen(order.begin(), order.begin() + len);
      std::vector<Eigen::Index> pos(len);
      std::iota(pos.begin(), pos.end(), 0);
      std::sort(pos.begin(), pos.end(), [&](Eigen::Index a, Eigen::Index b) {
        return chosen[a] < chosen[b];
      });
      Eigen::MatrixXd ordered(len, len);
      for (Eigen::Index j = 0; j < len; ++j) ordered.col(j) = sub.col(pos[j]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(ordered, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
      y.middleCols(s, len) = (y.middleCols(s, len) * rot).eval();
    }
    start = i;
  }
}

BranchSample solve_sample(const MetricCurve& curve, double c, double t,
                          const TrackOptions& options, const Eigen::MatrixXd* warm) {
  const OperatorPair op = assemble(curve.at(t), c, options.scheme);
  const int k = std::min<int>(options.window, static_cast<int>(op.size()));
  const SpectralDecomposition d = eig_lowest(op, k, options.eigen, 0.0, warm);
  BranchSample s;
  s.t = t;
  s.eigenvalues = d.eigenvalues;
  s.sym_vectors = d.sym_vectors;
  s.kernel_tol = d.kernel_tol;
  return s;
}

} // namespace

BranchTrace track_branch(const MetricCurve& curve, double c, const std::vector<double>& t_grid,
                         const TrackOptions& options) {
  BranchTrace trace;
  int next_label = 0;
  for (double t : t_grid) {
    const BranchSample* prev = trace.samples.empty() ? nullptr : &trace.samples.back();
    BranchSample s = solve_sample(curve, c, t, options, prev ? &prev->sym_vectors : nullptr);
    const auto k = s.eigenvalues.size();
    s.labels.assign(k, -1);
    s.overlaps.assign(k, 1.0);
    if (!prev) {
      for (std::size_t i = 0; i < k; ++i) s.labels[i] = next_label++;
      trace.samples.push_back(std::move(s));
      continue;
    }
    align_clusters(s.sym_vectors, s.eigenvalues, s.kernel_tol, prev->sym_vectors);
    const Eigen::MatrixXd ov = (s.sym_vectors.transpose() * prev->sym_vectors).cwiseAbs();

    struct Pair {
      double overlap, distance;
      Eigen::Index i, j;
    };
    std::vector<Pair> pairs;
    for (Eigen::Index i = 0; i < ov.rows(); ++i)
      for (Eigen::Index j = 0; j < ov.cols(); ++j)
        pairs.push_back({ov(i, j), std::abs(s.eigenvalues[i] - prev->eigenvalues[j]), i, j});
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.overlap != b.overlap) return a.overlap > b.overlap;
      return a.distance < b.distance;
    });
    std::vector<bool> used_new(ov.rows(), false), used_prev(ov.cols(), false);
    for (const Pair& p : pairs) {
      if (used_new[p.i] || used_prev[p.j]) continue;
      used_new[p.i] = used_prev[p.j] = true;
      s.overlaps[p.i] = p.overlap;
      if (p.overlap >= options.min_overlap) {
        s.labels[p.i] = prev->labels[p.j];
      } else {
        if (!trace.is_ambiguous(prev->labels[p.j])) trace.ambiguous.push_back(prev->labels[p.j]);
        s.labels[p.i] = next_label++;
      }
    }
    for (std::size_t i = 0; i < k; ++i)
      if (s.labels[i] < 0) s.labels[i] = next_label++;
    trace.samples.push_back(std::move(s));
  }
  return trace;
}

KernelMetric find_kernel_metric(const MetricCurve& curve, double c, int branch_index,
                                const SearchOptions& options) {
  if (branch_index < 0) fail(ErrorKind::InvalidArgument, "branch index must be non-negative");
  TrackOptions track = options.track;
  track.window = std::max(track.window, branch_index + 4);

  std::vector<double> grid = options.t_grid;
  if (grid.empty()) {
    const double top = std::isfinite(curve.t_max()) ? 0.95 * curve.t_max() : 1.0;
    for (int i = 0; i <= 16; ++i) grid.push_back(top * i / 16.0);
  }
  BranchTrace trace = track_branch(curve, c, grid, track);
  const std::vector<double> values = trace.branch(branch_index);

  std::size_t hit = values.size();
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (std::isnan(values[i]) || std::isnan(values[i + 1])) break;
    if (values[i] == 0.0 || values[i] * values[i + 1] < 0.0) {
      hit = i;
      break;
    }
  }
  if (hit == values.size()) {
    if (trace.is_ambiguous(branch_index))
      fail(ErrorKind::BranchAmbiguity, "branch lost before a sign change was found");
    std::ostringstream os;
    os << "branch " << branch_index << " keeps its sign on t in [" << grid.front() << ", "
       << grid.back() << "]";
    fail(ErrorKind::NoSignChange, os.str());
  }

  auto column_of = [&](const BranchSample& s) {
    const auto it = std::find(s.labels.begin(), s.labels.end(), branch_index);
    return static_cast<Eigen::Index>(it - s.labels.begin());
  };
  BranchSample left = trace.samples[hit];
  BranchSample right = trace.samples[hit + 1];
  Eigen::VectorXd y_left = left.sym_vectors.col(column_of(left));
  double v_left = values[hit];
  double v_right = values[hit + 1];
  Eigen::VectorXd y_right = right.sym_vectors.col(column_of(right));
  double a = left.t, b = right.t;

  int steps = 0;
  while (v_left != 0.0 && std::abs(b - a) > options.tolerance) {
    const double mid = 0.5 * (a + b);
    const BranchSample s = solve_sample(curve, c, mid, track, &left.sym_vectors);
    const Eigen::VectorXd ov = (s.sym_vectors.transpose() * y_left).cwiseAbs();
    Eigen::Index j = 0;
    const double best = ov.maxCoeff(&j);
    if (best < track.min_overlap) {
      std::ostringstream os;
      os << "branch identification failed at t = " << mid << " (overlap " << best << ")";
      fail(ErrorKind::BranchAmbiguity, os.str());
    }
    ++steps;
    const double v = s.eigenvalues[j];
    if (v == 0.0 || (v < 0.0) == (v_left < 0.0)) {
      a = mid;
      v_left = v;
      y_left = s.sym_vectors.col(j);
      left = s;
    } else {
      b = mid;
      v_right = v;
      y_right = s.sym_vectors.col(j);
    }
  }

  const bool use_left = std::abs(v_left) <= std::abs(v_right);
  const double t_star = use_left ? a : b;
  MetricField metric = curve.at(t_star);
  const OperatorPair op = assemble(metric, c, track.scheme);
  KernelMetric out{t_star,
                   std::move(metric),
                   ScalarField(curve.base().grid()),
                   use_left ? v_left : v_right,
                   kernel(op, options.tau, track.eigen),
                   std::move(trace),
                   steps};
  const Eigen::VectorXd y = use_left ? y_left : y_right;
  const auto& sw = op.sqrt_mass();
  for (std::size_t i = 0; i < op.size(); ++i) out.psi[i] = y[static_cast<Eigen::Index>(i)] / sw[i];
  if (out.kernel.size() == 0) {
    std::ostringstream os;
    os << "bisection ended at |lambda| = " << std::abs(out.eigenvalue)
       << " above the kernel tolerance " << out.kernel.kernel_tol;
    fail(ErrorKind::ConvergenceFailure, os.str());
  }
  return out;
}

BreakResult break_kernel(const MetricField& g0, double c, double tau, double eps,
                         const BreakOptions& options) {
  if (is_excluded_coupling(c))
    fail(ErrorKind::DisallowedCoupling, "kernel breaking needs c different from 0 and 1/2");
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "break_kernel: eps must be positive");

  BreakResult result{g0, {}, {}, tau};
  SpectralDecomposition kern = kernel(assemble(g0, c, options.scheme), tau, options.eigen);
  if (result.kernel_tol <= 0.0) result.kernel_tol = kern.kernel_tol;

  while (true) {
    const int m = static_cast<int>(kern.size());
    result.trace.push_back(m);
    if (m == 0) return result;
    const MetricField& g = result.metric;

    const Curvature curv = curvature(g, options.scheme);
    SymTensorField best(g.grid());
    double best_norm = -1.0;
    for (int a = 0; a < m; ++a) {
      SymTensorField h =
          kernel_breaking_tensor(g, curv, kern.eigenfunction(static_cast<std::size_t>(a)), c,
                                 options.scheme);
      const double norm = l2_norm(g, h);
      if (norm > best_norm) {
        best_norm = norm;
        best = std::move(h);
      }
    }
    // h* is treated as zero when even the full step eps cannot move a kernel
    // eigenvalue past the tolerance at first order.
    const double sup = pointwise_norm(g, best);
    if (sup == 0.0 || eps * best_norm * best_norm / sup < result.kernel_tol) {
      std::ostringstream os;
      os << "kernel-breaking tensor vanishes to first order (||h*|| = " << best_norm
         << ", multiplicity " << m << ")";
      fail(ErrorKind::FirstOrderDegenerate, os.str());
    }
    const SymTensorField dir = (1.0 / sup) * best;
    const QMatrix q = q_operator(g, dir, c, kern, options.scheme);

    std::vector<double> candidates;
    for (int j = options.levels - 1; j >= 0; --j) {
      const double t = eps * std::ldexp(1.0, -j);
      candidates.push_back(t);
      candidates.push_back(-t);
    }
    const MetricCurve curve(g, dir);
    auto evaluate = [&](double t) -> std::optional<SpectralDecomposition> {
      try {
        return kernel(assemble(curve.at(t), c, options.scheme), result.kernel_tol,
                      options.eigen);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::SPDViolation || e.kind() == ErrorKind::SingularMetric)
          return std::nullopt;
        throw;
      }
    };

    std::optional<std::pair<double, SpectralDecomposition>> accepted;
    const std::size_t batch = static_cast<std::size_t>(std::max(1, options.threads));
    for (std::size_t start = 0; start < candidates.size() && !accepted; start += batch) {
      const std::size_t stop = std::min(candidates.size(), start + batch);
      std::vector<std::optional<SpectralDecomposition>> found(stop - start);
      if (batch == 1) {
        found[0] = evaluate(candidates[start]);
      } else {
        std::vector<std::future<std::optional<SpectralDecomposition>>> jobs;
        for (std::size_t i = start; i < stop; ++i)
          jobs.push_back(std::async(std::launch::async, evaluate, candidates[i]));
        for (std::size_t i = 0; i < jobs.size(); ++i) found[i] = jobs[i].get();
      }
      for (std::size_t i = 0; i < found.size(); ++i) {
        if (found[i] && static_cast<int>(found[i]->size()) < m) {
          accepted.emplace(candidates[start + i], std::move(*found[i]));
          break;
        }
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "multiplicity " << m << " did not drop for |t| <= " << eps << "; Q =";
      for (Eigen::Index i = 0; i < q.entries.rows(); ++i) {
        os << (i ? "; " : " [");
        for (Eigen::Index j = 0; j < q.entries.cols(); ++j) os << (j ? " " : "") << q.entries(i, j);
      }
      os << "]";
      fail(ErrorKind::LineSearchFailure, os.str());
    }
    result.steps.push_back({m, accepted->first, best_norm, eigenvalue_derivatives(q)});
    result.metric = curve.at(accepted->first);
    kern = std::move(accepted->second);
  }
}

} // namespace confspec

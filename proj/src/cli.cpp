#include "confspec/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "confspec/field_io.hpp"
#include "confspec/geometry.hpp"
#include "confspec/operators.hpp"
#include "confspec/perturbation.hpp"
#include "confspec/product.hpp"

namespace confspec::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::ConfigError:
  case ErrorKind::DisallowedCoupling: return bad_config;
  case ErrorKind::SingularMetric:
  case ErrorKind::SPDViolation:
  case ErrorKind::NonPositiveConformalFactor: return bad_metric;
  case ErrorKind::ConvergenceFailure:
  case ErrorKind::BranchAmbiguity: return no_convergence;
  case ErrorKind::EmptyKernel: return empty_kernel;
  case ErrorKind::FirstOrderDegenerate: return degenerate;
  case ErrorKind::LineSearchFailure: return line_search;
  case ErrorKind::NoSignChange: return no_sign_change;
  case ErrorKind::InvalidParameters:
  case ErrorKind::TruncationInadequate:
  case ErrorKind::EmptyAdmissibleSet:
  case ErrorKind::NonNegativeScalarCurvature: return product_error;
  default: return other_error;
  }
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }
std::string fmt(const std::string& v) { return v; }
std::string fmt(const char* v) { return v; }

/// CSV file with the provenance comment line and a header row.
class Csv {
public:
  Csv(const RunContext& ctx, const std::string& name, const std::vector<std::string>& columns)
      : path_(ctx.out / name), out_(path_, std::ios::binary) {
    if (!out_) fail(ErrorKind::InvalidArgument, "cannot write " + path_.string());
    out_ << "# confspec " << version << " config=" << hex(ctx.config.hash) << "\n";
    if (!columns.empty()) write(columns);
  }

  template <class... T>
  void row(const T&... cells) {
    write({fmt(cells)...});
  }

  void write(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  std::ostream& stream() { return out_; }

private:
  fs::path path_;
  std::ofstream out_;
};

std::string join(const std::vector<int>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

std::string scheme_name(Scheme s) {
  switch (s) {
  case Scheme::Spectral: return "spectral";
  case Scheme::FD4: return "fd4";
  case Scheme::FD2: return "fd2";
  }
  return "?";
}

struct Setup {
  Grid grid;
  MetricField g0;
  double c;
};

Setup setup(const ExperimentConfig& cfg) {
  Grid grid = cfg.require_grid().make();
  MetricField g0 = cfg.metric.build(grid);
  return {grid, g0, cfg.coupling_for(grid.dim())};
}

KernelMetric locate_fixture(const ExperimentConfig& cfg, const MetricField& g0, double c,
                            const FixtureSpec& f) {
  MetricCurve curve(g0, f.direction.build(g0));
  SearchOptions so;
  so.t_grid = f.scan;
  so.tolerance = f.tolerance;
  so.track.window = f.window;
  so.track.scheme = cfg.scheme;
  so.track.eigen = cfg.eigen.options(cfg.seed);
  so.tau = cfg.eigen.kernel_tol;
  return find_kernel_metric(curve, c, f.branch, so);
}

void write_fixture(const RunContext& ctx, const KernelMetric& km) {
  Csv csv(ctx, "fixture.csv", {"key", "value"});
  csv.row("t", km.t);
  csv.row("eigenvalue", km.eigenvalue);
  csv.row("multiplicity", km.kernel.size());
  csv.row("kernel_tol", km.kernel.kernel_tol);
  csv.row("bisection_steps", km.bisection_steps);
  save_field(ctx.out / "fixture_metric.csf", km.metric);
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

/// Forward-difference slopes of the branches leaving the kernel, picked by
/// their weight on the kernel subspace and paired with Q in sorted order.
std::vector<double> fd_slopes(const MetricCurve& curve, double c, const SpectralDecomposition& kern,
                              double dt, int window, Scheme scheme, const EigenOptions& eo) {
  const int m = static_cast<int>(kern.size());
  const SpectralDecomposition dec =
      eig_lowest(assemble(curve.at(dt), c, scheme), std::max(window, m + 2), eo, kern.kernel_tol);
  const Eigen::MatrixXd proj = kern.sym_vectors.transpose() * dec.sym_vectors;
  std::vector<int> idx(dec.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return proj.col(a).squaredNorm() > proj.col(b).squaredNorm();
  });
  std::vector<double> moved;
  for (int j = 0; j < m; ++j) moved.push_back(dec.eigenvalues[idx[j]]);
  moved = sorted(moved);
  const std::vector<double> base = sorted(kern.eigenvalues);
  std::vector<double> out;
  for (int j = 0; j < m; ++j) out.push_back((moved[j] - base[j]) / dt);
  return out;
}

void require_breakable(double c) {
  if (is_excluded_coupling(c))
    fail(ErrorKind::DisallowedCoupling,
         "kernel breaking requires c ≠ 0, c ≠ 1/2 (got c = " + fmt(c) + ")");
}

} // namespace

void cmd_spectrum(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const Setup s = setup(cfg);
  const OperatorPair op = assemble(s.g0, s.c, cfg.scheme);
  const EigenOptions eo = cfg.eigen.options(cfg.seed);
  const SpectralDecomposition dec = eig_lowest(op, cfg.eigen.k, eo, cfg.eigen.kernel_tol);

  {
    Csv csv(ctx, "spectrum.csv", {"index", "eigenvalue", "residual", "in_kernel"});
    for (std::size_t i = 0; i < dec.size(); ++i)
      csv.row(i, dec.eigenvalues[i], dec.residuals[i],
              std::abs(dec.eigenvalues[i]) < dec.kernel_tol);
  }
  {
    Csv csv(ctx, "summary.csv", {"key", "value"});
    csv.row("resolution", join(s.grid.resolution(), "x"));
    csv.row("scheme", scheme_name(cfg.scheme));
    csv.row("coupling", s.c);
    csv.row("volume", total_volume(s.g0));
    csv.row("kernel_tol", dec.kernel_tol);
    csv.row("negative", dec.counts.negative);
    csv.row("zero", dec.counts.zero);
    csv.row("positive", dec.counts.positive);
    csv.row("solver", dec.dense ? "dense" : "lobpcg");
    csv.row("iterations", dec.iterations);
    csv.row("antisymmetry", op.antisymmetry_estimate());
  }
  if (!cfg.spectrum.count_below.empty()) {
    Csv csv(ctx, "count_below.csv", {"threshold", "count", "bracketed"});
    for (double th : cfg.spectrum.count_below) {
      const CountResult r = count_below(op, th, eo, cfg.eigen.k);
      csv.row(th, r.count, r.bracketed);
      if (!r.bracketed)
        std::cerr << "warning: count below " << th << " is a lower bound (window exhausted)\n";
    }
  }
  if (cfg.spectrum.save_vectors) {
    fs::create_directories(ctx.out / "vectors");
    for (std::size_t i = 0; i < dec.size(); ++i)
      save_field(ctx.out / "vectors" / ("eigenfunction_" + std::to_string(i) + ".csf"),
                 dec.eigenfunction(i));
  }
  std::cout << "spectrum: " << dec.size() << " eigenvalues, lowest " << dec.eigenvalues.front()
            << ", counts (" << dec.counts.negative << ", " << dec.counts.zero << ", "
            << dec.counts.positive << ")\n";
}

void cmd_perturb(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const PerturbSection& p = cfg.perturb;
  const Setup s = setup(cfg);
  const EigenOptions eo = cfg.eigen.options(cfg.seed);

  std::optional<KernelMetric> km;
  if (p.fixture.enabled) {
    km = locate_fixture(cfg, s.g0, s.c, p.fixture);
    write_fixture(ctx, *km);
  }
  const MetricField& g = km ? km->metric : s.g0;
  const SymTensorField h = p.direction.build(g);
  const SpectralDecomposition kern =
      km ? km->kernel : kernel(assemble(g, s.c, cfg.scheme), cfg.eigen.kernel_tol, eo);
  const QMatrix q = q_operator(g, h, s.c, kern, cfg.scheme);
  const std::vector<double> qev = eigenvalue_derivatives(q);

  {
    Csv csv(ctx, "q_matrix.csv", {"row", "col", "value"});
    for (int i = 0; i < q.m; ++i)
      for (int j = 0; j < q.m; ++j) csv.row(i, j, q.entries(i, j));
  }
  {
    Csv csv(ctx, "derivatives.csv", {"index", "q_eigenvalue", "kernel_eigenvalue"});
    const std::vector<double> base = sorted(q.kernel_eigenvalues);
    for (std::size_t i = 0; i < qev.size(); ++i) csv.row(i, qev[i], base[i]);
  }
  {
    // The pairing identity holds for traceless directions; the trace part of
    // h is removed first.
    const SymTensorField h0 = traceless(g, h);
    Csv csv(ctx, "identity.csv",
            {"psi_index", "direct", "full_form", "traceless_form", "residual_direct_full",
             "residual_direct_traceless", "residual_full_traceless"});
    for (std::size_t a = 0; a < kern.size(); ++a) {
      const IdentityReport r =
          derivative_identity_check(g, kern.eigenfunction(a), h0, s.c, cfg.scheme);
      csv.row(a, r.direct, r.full_form, r.traceless_form, r.residual_direct_full,
              r.residual_direct_traceless, r.residual_full_traceless);
    }
  }

  const MetricCurve curve(g, h);
  {
    TrackOptions to;
    to.window = p.window;
    to.scheme = cfg.scheme;
    to.eigen = eo;
    const BranchTrace trace = track_branch(curve, s.c, p.t_grid, to);
    Csv csv(ctx, "branches.csv", {"t", "branch_id", "eigenvalue", "overlap"});
    for (const BranchSample& smp : trace.samples)
      for (std::size_t i = 0; i < smp.eigenvalues.size(); ++i)
        csv.row(smp.t, smp.labels[i], smp.eigenvalues[i], smp.overlaps[i]);
    for (int id : trace.ambiguous)
      std::cerr << "warning: branch " << id << " lost overlap along the t grid\n";
  }
  {
    Csv csv(ctx, "slopes.csv", {"dt", "index", "fd_slope", "q_eigenvalue", "error", "ratio"});
    std::vector<double> prev;
    for (double dt : p.slope_steps) {
      const std::vector<double> fd = fd_slopes(curve, s.c, kern, dt, p.window, cfg.scheme, eo);
      std::vector<double> err;
      for (std::size_t j = 0; j < fd.size(); ++j) {
        err.push_back(std::abs(fd[j] - qev[j]));
        const double ratio = prev.empty() || prev[j] == 0.0 ? std::nan("") : err[j] / prev[j];
        csv.row(dt, j, fd[j], qev[j], err[j], ratio);
      }
      prev = err;
    }
  }
  std::cout << "perturb: kernel multiplicity " << q.m << ", Q eigenvalues";
  for (double v : qev) std::cout << " " << v;
  std::cout << "\n";
}

void cmd_break_kernel(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const Setup s = setup(cfg);
  require_breakable(s.c);

  std::optional<KernelMetric> km;
  if (cfg.break_kernel.fixture.enabled) {
    km = locate_fixture(cfg, s.g0, s.c, cfg.break_kernel.fixture);
    write_fixture(ctx, *km);
  }
  BreakOptions bo;
  bo.scheme = cfg.scheme;
  bo.eigen = cfg.eigen.options(cfg.seed);
  bo.levels = cfg.break_kernel.levels;
  bo.threads = ctx.threads;
  const double tau = km ? km->kernel.kernel_tol : cfg.eigen.kernel_tol;
  const BreakResult r =
      break_kernel(km ? km->metric : s.g0, s.c, tau, cfg.break_kernel.eps, bo);

  {
    Csv csv(ctx, "trace.csv", {"step", "multiplicity"});
    for (std::size_t i = 0; i < r.trace.size(); ++i) csv.row(i, r.trace[i]);
  }
  {
    Csv csv(ctx, "steps.csv",
            {"step", "multiplicity", "t", "hstar_norm", "min_derivative", "max_derivative"});
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      const BreakStep& st = r.steps[i];
      const auto [lo, hi] = std::minmax_element(st.derivatives.begin(), st.derivatives.end());
      csv.row(i, st.multiplicity, st.t, st.hstar_norm, *lo, *hi);
    }
  }
  save_field(ctx.out / "final_metric.csf", r.metric);
  std::cout << "break-kernel: trace [" << join(r.trace, ", ") << "] at tolerance "
            << r.kernel_tol << "\n";
}

void cmd_product(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const ProductSection& p = cfg.product;
  const AbstractSpectrum base = sphere_spectrum(p.d, p.l_max);

  Csv sweep(ctx, "sweep.csv",
            {"k", "t", "negative_designated", "admissible", "printed_interval", "corrected_bound"});
  Csv summary(ctx, "product_summary.csv",
              {"k", "t", "scalar_curvature", "negative_count", "designated_modes",
               "first_admissible", "last_admissible", "negativity_bound", "closed_form_bound",
               "printed_disagreements", "corrected_violations", "rescale_factor",
               "rescaled_negative_count"});
  Csv rescaled(ctx, "rescaled.csv", {"k", "index", "eigenvalue"});

  for (int k : p.ks) {
    ProductSpec spec{base, buser_surrogate_spectrum(k, p.eps, p.genus, cfg.seed, p.tail_bound),
                     p.t, p.eps, k};
    const AdmissibleReport rep = admissible_t(spec, p.t_lo, p.t_hi, p.t_samples);
    for (const AdmissibleSample& smp : rep.samples)
      sweep.row(k, smp.t, smp.negative_designated, smp.admissible, smp.printed_interval,
                smp.corrected_bound);

    const std::vector<double> values = product_conformal_spectrum(spec);
    const double r_before = product_scalar_curvature(spec);
    const RescaledSpectrum rs = yamabe_rescale(values, r_before);
    summary.row(k, p.t, r_before, count_negative(values), spec.designated_modes().size(),
                rep.first_admissible, rep.last_admissible, rep.negativity_bound,
                rep.closed_form_bound, rep.printed_disagreements, rep.corrected_violations,
                rs.factor, count_negative(rs.eigenvalues));
    for (std::size_t i = 0; i < rs.eigenvalues.size(); ++i) rescaled.row(k, i, rs.eigenvalues[i]);
    std::cout << "product: k=" << k << " negative " << count_negative(values)
              << ", admissible t in [" << rep.first_admissible << ", " << rep.last_admissible
              << "], printed-interval disagreements " << rep.printed_disagreements << "\n";
  }

  FamilyOptions fo;
  fo.eps = p.eps;
  fo.genus = p.genus;
  fo.seed = cfg.seed;
  fo.t = p.t;
  fo.r0 = p.r0;
  fo.d0 = p.d0;
  fo.tail_bound = p.tail_bound;
  const std::vector<MetricRecord> family = surrogate_family(base, p.family, fo);
  {
    Csv csv(ctx, "family.csv",
            {"k", "volume", "injectivity_radius", "ricci_lower", "diameter", "negative_count"});
    for (const MetricRecord& r : family)
      csv.row(r.index, r.volume, r.injectivity_radius, r.ricci_lower, r.diameter,
              r.negative_count);
  }
  const PrecompactnessReport pr = check_precompactness(family, p.bounds);
  {
    Csv csv(ctx, "precompactness.csv",
            {"prefix_length", "max_volume", "min_injectivity", "a_squared", "max_diameter",
             "max_negative"});
    for (const PrefixBounds& b : pr.prefixes)
      csv.row(b.length, b.max_volume, b.min_injectivity, b.a_squared, b.max_diameter,
              b.max_negative);
  }
  {
    Csv csv(ctx, "precompactness_summary.csv", {"key", "value"});
    csv.row("volume_injectivity_ricci", pr.volume_injectivity_ricci);
    csv.row("diameter_ricci", pr.diameter_ricci);
    csv.row("injectivity_exponent", pr.injectivity_exponent);
    csv.row("diameter_log_slope", pr.diameter_log_slope);
    csv.row("injectivity_to_zero", pr.injectivity_to_zero);
    csv.row("diameter_unbounded", pr.diameter_unbounded);
    csv.row("negative_counts_unbounded", pr.negative_counts_unbounded);
    csv.row("consistent_with_noncompactness", pr.consistent_with_noncompactness);
  }
}

void cmd_curvature_check(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const Setup s = setup(cfg);
  const MetricField& g = s.g0;
  const Scheme sc = cfg.scheme;
  const int n = s.grid.dim();

  std::vector<FourierTerm> terms = cfg.curvature.psi;
  if (terms.empty()) {
    std::vector<int> k1(n, 0), k2(n, 0);
    k1[0] = 1;
    k2[0] = 1;
    k2[n > 1 ? 1 : 0] += 1;
    terms = {{k1, 0.0, 1.0}, {k2, 0.5, 0.0}};
  }
  const ScalarField psi = fourier_field(s.grid, terms, cfg.curvature.psi_constant);
  const Curvature curv = curvature(g, sc);

  {
    Csv csv(ctx, "scalar_curvature.csv", {});  // header comes from write_field_csv
    write_field_csv(csv.stream(), curv.scalar, 0);
  }
  save_field(ctx.out / "ricci.csf", curv.ricci);

  Csv csv(ctx, "residuals.csv", {"check", "residual", "reference", "relative"});
  auto emit = [&](const char* name, double residual, double reference) {
    csv.row(name, residual, reference, reference > 0.0 ? residual / reference : 0.0);
  };

  // Hessian of a square.
  {
    const SymTensorField lhs = hessian(g, curv.gamma, pointwise_product(psi, psi), sc);
    const CovectorField dpsi = gradient(psi, sc);
    const SymTensorField rhs =
        2.0 * (psi * hessian(g, curv.gamma, psi, sc) + outer(dpsi, dpsi));
    emit("hessian_identity", (lhs - rhs).max_abs(), lhs.max_abs());
  }
  // Hessian and double divergence are L2 adjoints.
  {
    const SymTensorField h = random_traceless(g, cfg.seed);
    const SymTensorField hess = hessian(g, curv.gamma, psi, sc);
    const double a = l2_inner(g, hess, h);
    const double b = l2_inner(g, psi, double_divergence(g, curv.gamma, h, sc));
    emit("hessian_adjoint", std::abs(a - b), l2_norm(g, hess) * l2_norm(g, h));
  }
  // Laplacian is symmetric.
  {
    const ScalarField phi = random_positive_field(s.grid, cfg.seed);
    const ScalarField lpsi = laplace_beltrami(g, psi, sc);
    const ScalarField lphi = laplace_beltrami(g, phi, sc);
    emit("laplacian_symmetry", std::abs(l2_inner(g, lpsi, phi) - l2_inner(g, psi, lphi)),
         l2_norm(g, lpsi) * l2_norm(g, phi));
  }
  // Contracted Bianchi identity: delta Ric + dR / 2 = 0.
  {
    const CovectorField div = divergence(g, curv.gamma, curv.ricci, sc);
    const CovectorField dr = gradient(curv.scalar, sc);
    emit("contracted_bianchi", (div + 0.5 * dr).max_abs(), std::max(div.max_abs(), dr.max_abs()));
  }
  std::cout << "curvature-check: max |R| = " << curv.scalar.max_abs() << "\n";
}

namespace {

void write_error(const fs::path& out, const std::string& command, const std::string& kind,
                 const std::string& message, int code) {
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream f(out / "error.json", std::ios::binary);
  if (!f) return;
  nlohmann::json j = {{"command", command}, {"kind", kind}, {"message", message},
                      {"exit_code", code}};
  f << j.dump(2) << "\n";
}

} // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Conformal Laplacian spectra and kernel-breaking experiments", "confspec"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  fs::path out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool dense = false;
  int threads = 1;
  app.add_option("--config", config_path, "JSON experiment configuration")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory")->envname("CONFSPEC_OUT");
  app.add_option("--seed", seed, "override the top-level seed");
  app.add_flag("--dense", dense, "force the dense eigensolver");
  app.add_option("--threads", threads, "concurrent candidate evaluations")
      ->envname("CONFSPEC_THREADS")
      ->check(CLI::Range(1, 256));
  app.add_option("--tol", tol, "kernel tolerance tau (0 selects the grid default)")
      ->check(CLI::NonNegativeNumber);

  using Command = void (*)(const RunContext&);
  const std::vector<std::pair<std::string, Command>> verbs = {
      {"spectrum", cmd_spectrum},
      {"perturb", cmd_perturb},
      {"break-kernel", cmd_break_kernel},
      {"product", cmd_product},
      {"curvature-check", cmd_curvature_check},
  };
  const std::vector<std::string> help = {
      "lowest eigenpairs, kernel and sign counts of the conformal Laplacian",
      "Q matrix, pairing identity, branch table and slope check along a direction",
      "remove the kernel by steps along the kernel-breaking tensor",
      "sphere times hyperbolic surface: admissible t, rescaled spectra, family report",
      "curvature fields and discrete identity residuals",
  };
  for (std::size_t i = 0; i < verbs.size(); ++i) app.add_subcommand(verbs[i].first, help[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_config;
  }

  std::string command;
  Command fn = nullptr;
  for (const auto& [name, f] : verbs)
    if (app.got_subcommand(name)) {
      command = name;
      fn = f;
    }

  try {
    Overrides ov;
    ov.seed = seed;
    ov.tol = tol;
    ov.dense = dense;
    RunContext ctx{load_config(config_path, ov), out, threads};
    fs::create_directories(out);
    fs::remove(out / "error.json");
    fn(ctx);
    return ok;
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    std::cerr << "confspec " << command << ": " << to_string(e.kind()) << ": " << e.what()
              << "\n";
    write_error(out, command, std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    std::cerr << "confspec " << command << ": unexpected error: " << e.what() << "\n";
    write_error(out, command, "Unexpected", e.what(), unexpected);
    return unexpected;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"confspec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace confspec::cli

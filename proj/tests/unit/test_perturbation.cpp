#include "doctest.h"

#include <cmath>
#include <limits>

#include "confspec/error.hpp"
#include "confspec/perturbation.hpp"
#include "confspec/recipes.hpp"
#include "oracles.hpp"

using namespace confspec;

namespace {

const std::vector<FourierTerm> phi_terms = {{{1, 0, 0}, 0.2, 0.0}, {{0, 1, 1}, 0.0, 0.1}};

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::InvalidArgument;
}

MetricField bumpy(const Grid& g, double amp = 0.2, std::uint64_t seed = 101) {
  const MetricField flat = MetricField::flat(g);
  return MetricField(flat.tensor() + amp * random_traceless(flat, seed, 1));
}

} // namespace

TEST_CASE("metric curve SPD interval") {
  const Grid g = Grid::cube(3, 4);
  const MetricField flat = MetricField::flat(g);
  const MetricCurve homothety(flat, flat.tensor());
  CHECK(homothety.spd_interval().first == doctest::Approx(-1.0));
  CHECK(std::isinf(homothety.spd_interval().second));
  CHECK(homothety.t_max() == doctest::Approx(1.0));
  CHECK(kind_of([&] { homothety.at(-1.5); }) == ErrorKind::SPDViolation);
  CHECK(homothety.at(1.0)(0, 0, 0) == doctest::Approx(2.0));

  const MetricCurve tl(flat, random_traceless(flat, 1));
  CHECK(tl.t_max() == doctest::Approx(1.0));  // random_traceless has pointwise norm 1
  CHECK(pointwise_norm(flat, random_traceless(flat, 1)) == doctest::Approx(1.0));

  const MetricCurve zero(flat, SymTensorField(g));
  CHECK(std::isinf(zero.t_max()));
}

TEST_CASE("scalar curvature variation matches a Richardson difference") {
  const Grid g = Grid::cube(3, 12);
  const MetricField m = bumpy(g);
  const SymTensorField h = random_traceless(m, 7, 1) + 0.3 * (fourier_field(g, {{{1, 0, 1}, 0.5, 0.2}}, 0.1) * m.tensor());
  const std::vector<double> fd = oracle::richardson(
      [&](double e) { return scalar_curvature(MetricField(m.tensor() + e * h)).data(); }, 1e-3);
  CHECK(oracle::max_diff(dot_scalar_curvature(m, h).values(), fd) < 1e-3);
}

TEST_CASE("Laplacian variation matches a Richardson difference") {
  const Grid g = Grid::cube(3, 12);
  const MetricField m = bumpy(g);
  const SymTensorField h = random_traceless(m, 8, 1) + 0.2 * m.tensor();
  const ScalarField f = fourier_field(g, {{{1, 1, 0}, 0.7, 0.3}});
  const std::vector<double> fd = oracle::richardson(
      [&](double e) { return laplace_beltrami(MetricField(m.tensor() + e * h), f).data(); }, 1e-3);
  CHECK(oracle::max_diff(dot_laplacian(m, h, f).values(), fd) < 1e-3);
}

TEST_CASE("homothety variations") {
  // R(s g) = R / s and Delta_{s g} = Delta / s.
  // The divergence of g vanishes only up to discretization error.
  double prev_r = 1.0, prev_l = 1.0;
  for (int n : {8, 16}) {
    const Grid g = Grid::cube(3, n);
    const MetricField m = conformal_fourier_metric(g, phi_terms);
    const ScalarField r = scalar_curvature(m);
    const double er = (dot_scalar_curvature(m, m.tensor()) + r).max_abs() / r.max_abs();
    const ScalarField f = fourier_field(g, {{{0, 1, 0}, 1.0, 0.0}});
    const ScalarField lf = laplace_beltrami(m, f);
    const double el = (dot_laplacian(m, m.tensor(), f) + lf).max_abs() / lf.max_abs();
    CHECK(er < 1e-2 * prev_r);
    CHECK(el < 1e-2 * prev_l);
    prev_r = er;
    prev_l = el;
  }
  CHECK(prev_r < 1e-7);
  CHECK(prev_l < 1e-7);
}

TEST_CASE("Q vanishes for h = 0 and for homotheties of a flat torus") {
  const Grid g = Grid::cube(3, 6);
  const MetricField flat = MetricField::flat(g);
  const double c = coupling_constant(3);
  const QMatrix q0 = q_operator(flat, SymTensorField(g), c, 0.0);
  CHECK(q0.m == 1);
  CHECK(q0.entries.norm() == 0.0);
  const QMatrix q1 = q_operator(flat, flat.tensor(), c, 0.0);
  CHECK(std::abs(q1.entries(0, 0)) < 1e-12);
}

TEST_CASE("Q on an empty kernel") {
  const Grid g = Grid::cube(3, 6);
  const MetricField m = bumpy(g, 0.3, 2);
  CHECK(kind_of([&] { q_operator(m, m.tensor(), 0.125, 1e-10); }) == ErrorKind::EmptyKernel);
}

TEST_CASE("kernel-breaking tensor") {
  const Grid g = Grid::cube(3, 8);
  const MetricField m = conformal_fourier_metric(g, phi_terms);
  const ScalarField psi = fourier_field(g, {{{1, 0, 0}, 0.0, 1.0}});
  CHECK(kind_of([&] { kernel_breaking_tensor(m, psi, 0.0); }) == ErrorKind::DisallowedCoupling);
  CHECK(kind_of([&] { kernel_breaking_tensor(m, psi, 0.5); }) == ErrorKind::DisallowedCoupling);
  const SymTensorField hs = kernel_breaking_tensor(m, psi, 0.125);
  CHECK(trace(m, hs).max_abs() < 1e-12 * hs.max_abs());
  // On a flat torus the constant kernel function gives h* = 0.
  const MetricField flat = MetricField::flat(g);
  CHECK(kernel_breaking_tensor(flat, ScalarField::constant(g, 1.0), 0.125).max_abs() < 1e-14);
}

TEST_CASE("the pairing identity holds for any test function") {
  const Grid g = Grid::cube(3, 16);
  const MetricField m = conformal_fourier_metric(g, phi_terms);
  const ScalarField psi = fourier_field(g, {{{1, 0, 0}, 0.0, 1.0}, {{1, 1, 0}, 0.5, 0.0}}, 0.3);
  const SymTensorField h = random_traceless(m, 11, 1);
  const IdentityReport r = derivative_identity_check(m, psi, h, 0.125);
  CHECK(r.max_residual() < 1e-8);
  CHECK(std::abs(r.direct) > 1e-3);

  const SymTensorField hs = kernel_breaking_tensor(m, psi, 0.125);
  const IdentityReport s = derivative_identity_check(m, psi, hs, 0.125);
  const double norm2 = std::pow(l2_norm(m, hs), 2);
  CHECK(std::abs(s.direct - norm2) < 1e-8 * norm2);

  CHECK(kind_of([&] { derivative_identity_check(m, psi, m.tensor(), 0.125); }) ==
        ErrorKind::NotTraceless);
}

TEST_CASE("nodal diagnostics") {
  const Grid g = Grid::cube(3, 12);
  const MetricField flat = MetricField::flat(g);
  const ScalarField psi = fourier_field(g, {{{1, 0, 0}, 0.0, 1.0}});
  const NodalReport r = nodal_diagnostics(flat, psi);
  CHECK(r.nodal_cells > 0);
  CHECK(r.below_fraction == 0.0);
  CHECK(r.min_gradient > 0.5 * r.median_gradient);
  CHECK(kind_of([&] { nodal_diagnostics(flat, ScalarField::constant(g, 2.0)); }) ==
        ErrorKind::ConstantField);
}

TEST_CASE("tracking a homothety follows lambda / (1 + t)") {
  const Grid g = Grid::cube(3, 6);
  const MetricField m = conformal_fourier_metric(g, phi_terms);
  const MetricCurve curve(m, m.tensor());
  const std::vector<double> ts{0.0, 0.1, 0.2, 0.4};
  TrackOptions to;
  to.window = 7;  // the lowest cluster plus one, avoiding a split cluster at the edge
  const BranchTrace tr = track_branch(curve, 0.125, ts, to);
  REQUIRE(tr.samples.size() == 4);
  const std::vector<double> b = tr.branch(tr.samples[0].labels[1]);
  for (std::size_t i = 0; i < ts.size(); ++i)
    CHECK(b[i] == doctest::Approx(b[0] / (1.0 + ts[i])).epsilon(1e-8));
  for (std::size_t i = 1; i < ts.size(); ++i)
    for (double o : tr.samples[i].overlaps) CHECK(o > 0.99);
}

TEST_CASE("no sign change along a short traceless segment") {
  const Grid g = Grid::cube(3, 6);
  const MetricField flat = MetricField::flat(g);
  const MetricCurve curve(flat, random_traceless(flat, 3));
  SearchOptions so;
  so.t_grid = {0.0, 0.05, 0.1};
  CHECK(kind_of([&] { find_kernel_metric(curve, 0.125, 1, so); }) == ErrorKind::NoSignChange);
}

TEST_CASE("break_kernel edge cases") {
  const Grid g = Grid::cube(3, 6);
  const MetricField flat = MetricField::flat(g);
  CHECK(kind_of([&] { break_kernel(flat, 0.125, 0.0, 0.05); }) == ErrorKind::FirstOrderDegenerate);
  CHECK(kind_of([&] { break_kernel(flat, 0.0, 0.0, 0.05); }) == ErrorKind::DisallowedCoupling);
  CHECK(kind_of([&] { break_kernel(flat, 0.5, 0.0, 0.05); }) == ErrorKind::DisallowedCoupling);
  const BreakResult r = break_kernel(bumpy(g, 0.3, 2), 0.125, 1e-8, 0.05);
  CHECK(r.trace == std::vector<int>{0});
  CHECK(r.steps.empty());
}

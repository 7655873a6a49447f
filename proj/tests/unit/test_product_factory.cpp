#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "confspec/error.hpp"
#include "confspec/product.hpp"

using namespace confspec;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::InvalidArgument;
}

AbstractSpectrum toy_fiber() {
  AbstractSpectrum f;
  f.dim = 2;
  f.scalar_curvature = -2.0;
  f.truncation_bound = 1.0;
  f.eigenvalues = {0.0, 0.26, 0.27, 0.28};
  return f;
}

} // namespace

TEST_CASE("spherical harmonic multiplicities") {
  for (int l = 0; l < 6; ++l) {
    CHECK(harmonic_multiplicity(2, l) == 2 * l + 1);
    CHECK(harmonic_multiplicity(3, l) == (l + 1) * (l + 1));
  }
  CHECK(harmonic_multiplicity(4, 2) == 14);
}

TEST_CASE("sphere spectrum") {
  const AbstractSpectrum s = sphere_spectrum(2, 3);
  CHECK(s.eigenvalues.size() == 16);
  CHECK(s.scalar_curvature == 2.0);
  CHECK(s.truncation_bound == 12.0);
  CHECK(std::count(s.eigenvalues.begin(), s.eigenvalues.end(), 6.0) == 5);
  CHECK(kind_of([] { sphere_spectrum(1, 3); }) == ErrorKind::InvalidParameters);
}

TEST_CASE("surrogate hyperbolic spectrum") {
  const AbstractSpectrum a = buser_surrogate_spectrum(3, 0.05, 2, 42);
  const AbstractSpectrum b = buser_surrogate_spectrum(3, 0.05, 2, 42);
  CHECK(a.eigenvalues == b.eigenvalues);
  a.validate();
  int small = 0;
  for (double v : a.eigenvalues) small += v > 0.25 && v < 0.3;
  CHECK(small == 3);
  CHECK(a.eigenvalues.front() == 0.0);
  CHECK(a.eigenvalues.back() <= 10.0);
  // Weyl law: about (genus - 1) * lambda eigenvalues below lambda.
  CHECK(a.eigenvalues.size() > 8);
  CHECK(a.eigenvalues.size() < 16);
  CHECK(kind_of([] { buser_surrogate_spectrum(1, 0.1, 2, 1); }) == ErrorKind::InvalidParameters);
  CHECK(kind_of([] { buser_surrogate_spectrum(1, 0.05, 1, 1); }) == ErrorKind::InvalidParameters);
}

TEST_CASE("product shift and truncation") {
  ProductSpec spec{sphere_spectrum(2, 3), toy_fiber(), 4.0, 0.05, 3};
  CHECK(product_scalar_curvature(spec) == doctest::Approx(-6.0));
  CHECK(product_shift(spec) == doctest::Approx(-1.0));
  CHECK_NOTHROW(check_truncation(spec));
  CHECK(count_negative(product_conformal_spectrum(spec)) == 1);
  // t * 1 + shift = t - (t - 1) / 3 > 0 always; the base bound fails once
  // 12 + shift <= 0, i.e. t >= 37.
  spec.t = 40.0;
  CHECK(kind_of([&] { check_truncation(spec); }) == ErrorKind::TruncationInadequate);
  spec.base = sphere_spectrum(2, 1);  // bound 2, fails for t >= 7
  spec.t = 8.0;
  CHECK(kind_of([&] { product_conformal_spectrum(spec); }) == ErrorKind::TruncationInadequate);
}

TEST_CASE("product spec validation") {
  ProductSpec spec{sphere_spectrum(2, 3), toy_fiber(), 4.0, 0.05, 4};
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::InvalidParameters);
  spec.k = 3;
  spec.fiber.scalar_curvature = -1.0;
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::InvalidParameters);
}

TEST_CASE("negativity threshold") {
  // d = 2, R_G = 2: the threshold crosses 1/4 + eps at the closed-form bound.
  CHECK(negativity_threshold(2, 2.0, 1.0) == doctest::Approx(0.0));
  CHECK(negativity_threshold(2, 2.0, 10.0) == doctest::Approx(0.3));
}

TEST_CASE("admissible t") {
  ProductSpec spec{sphere_spectrum(2, 3), toy_fiber(), 1.0, 0.05, 3};
  const AdmissibleReport r = admissible_t(spec, 1.0, 20.0, 20);
  CHECK(r.negativity_bound == 1.0);
  CHECK(r.closed_form_bound == doctest::Approx(10.0));
  CHECK_FALSE(r.samples.front().admissible);  // t = R_G / 2
  CHECK(r.samples.back().admissible);
  CHECK(r.corrected_violations == 0);
  CHECK(r.printed_disagreements > 0);
  // All three modes are negative once t lambda + (1 - t) / 3 < 0 for lambda = 0.28,
  // i.e. t > 6.25.
  CHECK(r.first_admissible == doctest::Approx(7.0));

  CHECK(kind_of([&] { admissible_t(spec, 0.5, 2.0, 10); }) == ErrorKind::EmptyAdmissibleSet);
  spec.eps = 0.09;
  CHECK(kind_of([&] { admissible_t(spec, 1.0, 20.0, 10); }) == ErrorKind::InvalidParameters);
}

TEST_CASE("Yamabe rescaling") {
  const RescaledSpectrum r = yamabe_rescale({-2.0, 0.0, 6.0}, -12.0);
  CHECK(r.factor == 12.0);
  CHECK(r.scalar_curvature == -1.0);
  CHECK(r.eigenvalues[0] == doctest::Approx(-1.0 / 6.0));
  CHECK(kind_of([] { yamabe_rescale({1.0}, 0.0); }) == ErrorKind::NonNegativeScalarCurvature);
  // The constant mode of the product carries c_n R; after rescaling it is -c_4 = -1/6.
  ProductSpec spec{sphere_spectrum(2, 3), buser_surrogate_spectrum(1, 0.05, 2, 3), 12.0, 0.05, 1};
  const RescaledSpectrum p =
      yamabe_rescale(product_conformal_spectrum(spec), product_scalar_curvature(spec));
  CHECK(p.eigenvalues.front() == doctest::Approx(-1.0 / 6.0));
}

TEST_CASE("precompactness report") {
  std::vector<MetricRecord> bounded;
  for (int k = 1; k <= 8; k *= 2) bounded.push_back({k, 10.0, 0.5, -1.0, 3.0, 2});
  const PrecompactnessReport a = check_precompactness(bounded, {20.0, 0.1, 2.0, 5.0});
  CHECK(a.volume_injectivity_ricci);
  CHECK(a.diameter_ricci);
  CHECK_FALSE(a.consistent_with_noncompactness);
  CHECK(a.prefixes.size() == 4);

  const std::vector<MetricRecord> fam =
      surrogate_family(sphere_spectrum(2, 3), {1, 2, 4, 8, 16, 32}, {0.05, 2, 5, 12.0, 1.0, 1.0, 10.0});
  const PrecompactnessReport b = check_precompactness(fam, {1e6, 0.05, 10.0, 50.0});
  CHECK_FALSE(b.volume_injectivity_ricci);
  CHECK(b.injectivity_exponent == doctest::Approx(-1.0));
  CHECK(b.consistent_with_noncompactness);
  for (const MetricRecord& r : fam) CHECK(r.negative_count >= r.index);
  CHECK(b.prefixes.back().min_injectivity < b.prefixes.front().min_injectivity / 10.0);
}

TEST_CASE("spectrum CSV round trip") {
  const AbstractSpectrum s = buser_surrogate_spectrum(2, 0.05, 3, 9);
  std::stringstream ss;
  write_spectrum_csv(ss, s);
  const AbstractSpectrum t = read_spectrum_csv(ss);
  CHECK(t.eigenvalues == s.eigenvalues);
  CHECK(t.dim == 2);
  CHECK(t.scalar_curvature == -2.0);
  CHECK(t.truncation_bound == s.truncation_bound);

  std::stringstream bad("# dim=2\neigenvalue\n0\nabc\n");
  CHECK(kind_of([&] { read_spectrum_csv(bad); }) == ErrorKind::FormatError);
  std::stringstream missing("eigenvalue\n0\n");
  CHECK(kind_of([&] { read_spectrum_csv(missing); }) == ErrorKind::FormatError);
}

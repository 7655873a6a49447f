#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace confspec {

/// Truncated Laplace spectrum of a closed manifold.
struct AbstractSpectrum {
  std::vector<double> eigenvalues;  ///< ascending, starts at 0, multiplicities repeated
  int dim = 0;
  double scalar_curvature = 0.0;    ///< constant R of the model metric
  double truncation_bound = 0.0;    ///< every omitted eigenvalue exceeds this

  /// Throws InvalidParameters unless the invariants above hold.
  void validate() const;
};

/// Round unit sphere S^d: l(l + d - 1) with the dimension of degree-l
/// harmonics as multiplicity, l <= l_max.
AbstractSpectrum sphere_spectrum(int d, int l_max);

/// Multiplicity of degree-l spherical harmonics on S^d.
long long harmonic_multiplicity(int d, int l);

/// Synthetic spectrum of a closed hyperbolic surface of genus gamma with
/// k small eigenvalues in (1/4, 1/4 + eps) and a Weyl-law tail
/// (count ~ (gamma - 1) lambda) above 1/4 + eps up to `bound`.
AbstractSpectrum buser_surrogate_spectrum(int k, double eps, int genus, std::uint64_t seed,
                                          double bound = 10.0);

/// Product of a positively curved base and a hyperbolic surface, with the
/// surface metric scaled by 1/t.
struct ProductSpec {
  AbstractSpectrum base;
  AbstractSpectrum fiber;
  double t = 1.0;
  double eps = 0.05;
  int k = 1;

  void validate() const;
  int total_dim() const { return base.dim + 2; }
  /// Fiber eigenvalues in (1/4, 1/4 + eps).
  std::vector<double> designated_modes() const;
};

/// R_G - 2t.
double product_scalar_curvature(const ProductSpec& spec);
/// d (R_G - 2t) / (4 (d + 1)), the constant term of Y on the product.
double product_shift(const ProductSpec& spec);

/// Throws TruncationInadequate when an omitted product eigenvalue could be
/// below zero, i.e. unless Lambda_base + shift > 0 and t Lambda_fiber + shift > 0.
void check_truncation(const ProductSpec& spec);

/// All mu_i + t lambda_j + shift, ascending.
std::vector<double> product_conformal_spectrum(const ProductSpec& spec);

int count_negative(const std::vector<double>& values);

struct AdmissibleSample {
  double t = 0.0;
  int negative_designated = 0;
  bool admissible = false;        ///< direct evaluation
  bool printed_interval = false;  ///< R_G/2 < t < R_G d / (d - 1 - 4 eps (d + 1)) as printed
  bool corrected_bound = false;   ///< t > R_G d / (d - 1 - 4 eps (d + 1))
};

struct AdmissibleReport {
  std::vector<AdmissibleSample> samples;
  double negativity_bound = 0.0;   ///< R_G / 2
  double closed_form_bound = 0.0;  ///< R_G d / (d - 1 - 4 eps (d + 1))
  /// Smallest and largest admissible sample.
  double first_admissible = 0.0;
  double last_admissible = 0.0;
  /// Samples where the printed interval and direct evaluation disagree.
  int printed_disagreements = 0;
  /// Samples above the corrected bound that are not admissible (should be 0).
  int corrected_violations = 0;
};

/// Direct per-t negativity of t lambda + shift over the designated fiber
/// modes, on `samples` equally spaced t in [t_lo, t_hi]. `spec.t` is ignored.
/// Throws InvalidParameters if eps >= (d - 1) / (4 (d + 1)), EmptyAdmissibleSet
/// if no sample is admissible.
AdmissibleReport admissible_t(const ProductSpec& spec, double t_lo, double t_hi, int samples);

/// Largest fiber eigenvalue that is negative after the shift:
/// d (2t - R_G) / (4 t (d + 1)).
double negativity_threshold(int d, double scalar_curvature_base, double t);

struct RescaledSpectrum {
  std::vector<double> eigenvalues;
  double scalar_curvature = -1.0;
  double factor = 1.0;  ///< metric scale factor -R_before
};

/// Scales the metric by -R_before so that R = -1; eigenvalues divide by the
/// factor. Throws NonNegativeScalarCurvature for R_before >= 0.
RescaledSpectrum yamabe_rescale(const std::vector<double>& eigenvalues, double r_before);

/// Geometric data of one metric in a sequence.
struct MetricRecord {
  int index = 0;
  double volume = 0.0;
  double injectivity_radius = 0.0;
  double ricci_lower = 0.0;  ///< Ric >= ricci_lower * g
  double diameter = 0.0;
  int negative_count = 0;
};

/// Uniform constants: Vol <= V, inj >= r, Ric >= -a^2, diam <= D.
struct BoundTuple {
  double volume = 0.0;
  double injectivity = 0.0;
  double a_squared = 0.0;
  double diameter = 0.0;
};

struct PrefixBounds {
  int length = 0;
  double max_volume = 0.0;
  double min_injectivity = 0.0;
  double a_squared = 0.0;  ///< smallest a^2 with Ric >= -a^2
  double max_diameter = 0.0;
  int max_negative = 0;
};

struct PrecompactnessReport {
  /// Verdicts for the declared tuple over the whole sequence.
  bool volume_injectivity_ricci = false;
  bool diameter_ricci = false;
  /// Tightest constants over every prefix.
  std::vector<PrefixBounds> prefixes;
  /// Least-squares slope of log inj against log index.
  double injectivity_exponent = 0.0;
  /// Least-squares slope of diam against log index.
  double diameter_log_slope = 0.0;
  bool injectivity_to_zero = false;
  bool diameter_unbounded = false;
  bool negative_counts_unbounded = false;
  /// Negative counts grow while neither condition can hold uniformly.
  bool consistent_with_noncompactness = false;
};

PrecompactnessReport check_precompactness(const std::vector<MetricRecord>& records,
                                          const BoundTuple& bounds);

struct FamilyOptions {
  double eps = 0.05;
  int genus = 2;
  std::uint64_t seed = 1;
  double t = 12.0;
  /// inj(h_k) = r0 / k.
  double r0 = 1.0;
  /// Fiber diameter away from the collar.
  double d0 = 1.0;
  double tail_bound = 10.0;
};

/// Metadata of the Yamabe-rescaled products S^d x (Sigma, h_k / t) for each k,
/// with surrogate fibers and declared injectivity radii r0 / k. Each record's
/// negative_count comes from product_conformal_spectrum.
std::vector<MetricRecord> surrogate_family(const AbstractSpectrum& base, const std::vector<int>& ks,
                                           const FamilyOptions& options = {});

/// CSV with "# dim=", "# scalar_curvature=", "# truncation_bound=" comment
/// lines and an "eigenvalue" column.
void write_spectrum_csv(std::ostream& out, const AbstractSpectrum& s);
AbstractSpectrum read_spectrum_csv(std::istream& in);
void save_spectrum_csv(const std::string& path, const AbstractSpectrum& s);
AbstractSpectrum load_spectrum_csv(const std::string& path);

} // namespace confspec

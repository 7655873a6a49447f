#include "confspec/product.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "confspec/error.hpp"

namespace confspec {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

double sphere_volume(int d) {
  // |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

} // namespace

void AbstractSpectrum::validate() const {
  if (dim < 1) fail(ErrorKind::InvalidParameters, "spectrum dimension must be positive");
  if (eigenvalues.empty() || eigenvalues.front() != 0.0)
    fail(ErrorKind::InvalidParameters, "spectrum must start with the eigenvalue 0");
  if (!std::is_sorted(eigenvalues.begin(), eigenvalues.end()))
    fail(ErrorKind::InvalidParameters, "spectrum must be ascending");
  if (eigenvalues.back() > truncation_bound)
    fail(ErrorKind::InvalidParameters, "spectrum entry above its truncation bound");
  for (double v : eigenvalues)
    if (!std::isfinite(v)) fail(ErrorKind::InvalidParameters, "non-finite eigenvalue");
}

long long harmonic_multiplicity(int d, int l) {
  if (l == 0) return 1;
  // dim H_l(S^d) = C(l+d, d) - C(l+d-2, d)
  return std::llround(binomial(l + d, d) - binomial(l + d - 2, d));
}

AbstractSpectrum sphere_spectrum(int d, int l_max) {
  if (d < 2) fail(ErrorKind::InvalidParameters, "sphere_spectrum needs d >= 2");
  if (l_max < 0) fail(ErrorKind::InvalidParameters, "l_max must be non-negative");
  AbstractSpectrum s;
  s.dim = d;
  s.scalar_curvature = d * (d - 1.0);
  s.truncation_bound = l_max * (l_max + d - 1.0);
  for (int l = 0; l <= l_max; ++l) {
    const double v = l * (l + d - 1.0);
    s.eigenvalues.insert(s.eigenvalues.end(), harmonic_multiplicity(d, l), v);
  }
  return s;
}

AbstractSpectrum buser_surrogate_spectrum(int k, double eps, int genus, std::uint64_t seed,
                                          double bound) {
  if (genus < 2) fail(ErrorKind::InvalidParameters, "genus must be at least 2");
  if (!(eps > 0.0 && eps < 1.0 / 12.0))
    fail(ErrorKind::InvalidParameters, "eps must lie in (0, 1/12)");
  if (k < 1) fail(ErrorKind::InvalidParameters, "k must be at least 1");
  const double top = 0.25 + eps;
  if (!(bound > top)) fail(ErrorKind::InvalidParameters, "truncation bound must exceed 1/4 + eps");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> small(0.25, top);
  std::uniform_real_distribution<double> jitter(-0.4, 0.4);
  AbstractSpectrum s;
  s.dim = 2;
  s.scalar_curvature = -2.0;
  s.truncation_bound = bound;
  s.eigenvalues.push_back(0.0);
  for (int i = 0; i < k; ++i) {
    double v = small(rng);
    while (v <= 0.25) v = small(rng);
    s.eigenvalues.push_back(v);
  }
  // Weyl law in 2D: N(lambda) ~ area lambda / (4 pi), area = 4 pi (genus - 1).
  const double spacing = 1.0 / (genus - 1.0);
  for (long long j = 1;; ++j) {
    const double v = (j + jitter(rng)) * spacing;
    if (j * spacing - 0.4 * spacing > bound) break;
    if (v > top && v <= bound) s.eigenvalues.push_back(v);
  }
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
  return s;
}

void ProductSpec::validate() const {
  base.validate();
  fiber.validate();
  if (base.dim < 2) fail(ErrorKind::InvalidParameters, "base dimension must be at least 2");
  if (!(base.scalar_curvature > 0.0))
    fail(ErrorKind::InvalidParameters, "base scalar curvature must be positive");
  if (fiber.dim != 2 || fiber.scalar_curvature != -2.0)
    fail(ErrorKind::InvalidParameters, "fiber must be a hyperbolic surface (dim 2, R = -2)");
  if (!(t > 0.0)) fail(ErrorKind::InvalidParameters, "t must be positive");
  if (!(eps > 0.0)) fail(ErrorKind::InvalidParameters, "eps must be positive");
  if (k < 1) fail(ErrorKind::InvalidParameters, "k must be at least 1");
  if (static_cast<int>(designated_modes().size()) < k)
    fail(ErrorKind::InvalidParameters, "fiber has fewer than k eigenvalues in (1/4, 1/4 + eps)");
}

std::vector<double> ProductSpec::designated_modes() const {
  std::vector<double> out;
  for (double v : fiber.eigenvalues)
    if (v > 0.25 && v < 0.25 + eps) out.push_back(v);
  return out;
}

double product_scalar_curvature(const ProductSpec& spec) {
  return spec.base.scalar_curvature - 2.0 * spec.t;
}

double product_shift(const ProductSpec& spec) {
  const double d = spec.base.dim;
  return d * product_scalar_curvature(spec) / (4.0 * (d + 1.0));
}

void check_truncation(const ProductSpec& spec) {
  const double shift = product_shift(spec);
  const double margin = 1e-12 * std::max(1.0, std::abs(shift));
  const double base_floor = spec.base.truncation_bound + shift;
  const double fiber_floor = spec.t * spec.fiber.truncation_bound + shift;
  if (base_floor <= margin || fiber_floor <= margin) {
    std::ostringstream os;
    os << "omitted product eigenvalues may be negative: base bound " << spec.base.truncation_bound
       << ", t * fiber bound " << spec.t * spec.fiber.truncation_bound << ", shift " << shift;
    fail(ErrorKind::TruncationInadequate, os.str());
  }
}

std::vector<double> product_conformal_spectrum(const ProductSpec& spec) {
  spec.validate();
  check_truncation(spec);
  const double shift = product_shift(spec);
  std::vector<double> out;
  out.reserve(spec.base.eigenvalues.size() * spec.fiber.eigenvalues.size());
  for (double mu : spec.base.eigenvalues)
    for (double lambda : spec.fiber.eigenvalues) out.push_back(mu + spec.t * lambda + shift);
  std::sort(out.begin(), out.end());
  return out;
}

int count_negative(const std::vector<double>& values) {
  return static_cast<int>(std::count_if(values.begin(), values.end(), [](double v) { return v < 0; }));
}

double negativity_threshold(int d, double scalar_curvature_base, double t) {
  return d * (2.0 * t - scalar_curvature_base) / (4.0 * t * (d + 1.0));
}

AdmissibleReport admissible_t(const ProductSpec& spec, double t_lo, double t_hi, int samples) {
  const int d = spec.base.dim;
  if (!(spec.eps < (d - 1.0) / (4.0 * (d + 1.0))))
    fail(ErrorKind::InvalidParameters, "eps must be below (d - 1) / (4 (d + 1))");
  if (!(t_lo > 0.0 && t_hi >= t_lo) || samples < 1)
    fail(ErrorKind::InvalidParameters, "invalid t search range");
  ProductSpec probe = spec;
  probe.t = t_lo;
  probe.validate();

  const double rg = spec.base.scalar_curvature;
  AdmissibleReport rep;
  rep.negativity_bound = rg / 2.0;
  rep.closed_form_bound = rg * d / (d - 1.0 - 4.0 * spec.eps * (d + 1.0));
  const std::vector<double> modes = spec.designated_modes();
  bool any = false;
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? t_lo : t_lo + (t_hi - t_lo) * i / (samples - 1.0);
    probe.t = t;
    const double shift = product_shift(probe);
    AdmissibleSample s;
    s.t = t;
    for (double lambda : modes)
      if (t * lambda + shift < 0.0) ++s.negative_designated;
    s.admissible = s.negative_designated >= spec.k;
    s.printed_interval = t > rep.negativity_bound && t < rep.closed_form_bound;
    s.corrected_bound = t > rep.closed_form_bound;
    if (s.printed_interval != s.admissible) ++rep.printed_disagreements;
    if (s.corrected_bound && !s.admissible) ++rep.corrected_violations;
    if (s.admissible) {
      if (!any) rep.first_admissible = t;
      rep.last_admissible = t;
      any = true;
    }
    rep.samples.push_back(s);
  }
  if (!any) {
    std::ostringstream os;
    os << "no admissible t in [" << t_lo << ", " << t_hi << "]";
    fail(ErrorKind::EmptyAdmissibleSet, os.str());
  }
  return rep;
}

RescaledSpectrum yamabe_rescale(const std::vector<double>& eigenvalues, double r_before) {
  if (!(r_before < 0.0))
    fail(ErrorKind::NonNegativeScalarCurvature, "Yamabe rescaling needs negative scalar curvature");
  RescaledSpectrum out;
  out.factor = -r_before;
  out.eigenvalues.reserve(eigenvalues.size());
  for (double v : eigenvalues) out.eigenvalues.push_back(v / out.factor);
  return out;
}

PrecompactnessReport check_precompactness(const std::vector<MetricRecord>& records,
                                          const BoundTuple& bounds) {
  PrecompactnessReport rep;
  rep.volume_injectivity_ricci = true;
  rep.diameter_ricci = true;
  PrefixBounds cur;
  cur.min_injectivity = std::numeric_limits<double>::infinity();
  for (const MetricRecord& r : records) {
    const bool ricci_ok = r.ricci_lower >= -bounds.a_squared;
    if (!(r.volume <= bounds.volume && r.injectivity_radius >= bounds.injectivity && ricci_ok))
      rep.volume_injectivity_ricci = false;
    if (!(r.diameter <= bounds.diameter && ricci_ok)) rep.diameter_ricci = false;

    ++cur.length;
    cur.max_volume = std::max(cur.max_volume, r.volume);
    cur.min_injectivity = std::min(cur.min_injectivity, r.injectivity_radius);
    cur.a_squared = std::max(cur.a_squared, -r.ricci_lower);
    cur.max_diameter = std::max(cur.max_diameter, r.diameter);
    cur.max_negative = std::max(cur.max_negative, r.negative_count);
    rep.prefixes.push_back(cur);
  }

  std::vector<double> logk, loginj, diam, counts;
  for (const MetricRecord& r : records) {
    if (r.index <= 0 || r.injectivity_radius <= 0) continue;
    logk.push_back(std::log(static_cast<double>(r.index)));
    loginj.push_back(std::log(r.injectivity_radius));
    diam.push_back(r.diameter);
    counts.push_back(r.negative_count);
  }
  rep.injectivity_exponent = slope(logk, loginj);
  rep.diameter_log_slope = slope(logk, diam);
  rep.injectivity_to_zero = logk.size() >= 2 && rep.injectivity_exponent < -0.5;
  rep.diameter_unbounded = logk.size() >= 2 && rep.diameter_log_slope > 0.5;
  rep.negative_counts_unbounded =
      logk.size() >= 2 && slope(logk, counts) > 0.5 && counts.back() > counts.front();
  rep.consistent_with_noncompactness =
      rep.negative_counts_unbounded && rep.injectivity_to_zero && rep.diameter_unbounded;
  return rep;
}

std::vector<MetricRecord> surrogate_family(const AbstractSpectrum& base, const std::vector<int>& ks,
                                           const FamilyOptions& o) {
  base.validate();
  const double t = o.t;
  const double s = 2.0 * t - base.scalar_curvature;  // Yamabe scale factor
  if (!(s > 0.0))
    fail(ErrorKind::NonNegativeScalarCurvature, "family needs t > R_G / 2");
  const int d = base.dim;
  const double base_scale = std::sqrt(s);        // length factor on the base
  const double fiber_scale = std::sqrt(s / t);   // length factor on the fiber
  const double fiber_area = 4.0 * std::numbers::pi * (o.genus - 1.0);
  const double volume =
      sphere_volume(d) * std::pow(s, 0.5 * d) * fiber_area * (s / t);
  // Ric of G is (d - 1) G and Ric of h_k / t is -t (h_k / t); scaling the
  // metric by s divides both bounds by s.
  const double ricci_lower = std::min((d - 1.0) / s, -t / s);
  const double base_diam = std::numbers::pi * base_scale;

  std::vector<MetricRecord> out;
  for (int k : ks) {
    ProductSpec spec{base, buser_surrogate_spectrum(k, o.eps, o.genus, o.seed + k, o.tail_bound),
                     t, o.eps, k};
    MetricRecord r;
    r.index = k;
    r.volume = volume;
    const double inj_fiber = o.r0 / k;
    r.injectivity_radius = std::min(inj_fiber * fiber_scale, std::numbers::pi * base_scale);
    r.ricci_lower = ricci_lower;
    const double fiber_diam = (o.d0 + 2.0 * std::asinh(1.0 / std::sinh(inj_fiber))) * fiber_scale;
    r.diameter = std::hypot(base_diam, fiber_diam);
    r.negative_count = count_negative(product_conformal_spectrum(spec));
    out.push_back(r);
  }
  return out;
}

void write_spectrum_csv(std::ostream& out, const AbstractSpectrum& s) {
  out << "# dim=" << s.dim << "\n";
  out << "# scalar_curvature=" << fmt(s.scalar_curvature) << "\n";
  out << "# truncation_bound=" << fmt(s.truncation_bound) << "\n";
  out << "eigenvalue\n";
  for (double v : s.eigenvalues) out << fmt(v) << "\n";
}

AbstractSpectrum read_spectrum_csv(std::istream& in) {
  AbstractSpectrum s;
  bool have_dim = false, have_r = false, have_bound = false, have_header = false;
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::FormatError, "spectrum CSV line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      try {
        if (key == "dim") {
          s.dim = std::stoi(value);
          have_dim = true;
        } else if (key == "scalar_curvature") {
          s.scalar_curvature = std::stod(value);
          have_r = true;
        } else if (key == "truncation_bound") {
          s.truncation_bound = std::stod(value);
          have_bound = true;
        }
      } catch (const std::exception&) {
        bad("bad value for " + key);
      }
      continue;
    }
    if (!have_header) {
      if (line != "eigenvalue") bad("expected header 'eigenvalue'");
      have_header = true;
      continue;
    }
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      bad("not a number");
    }
    if (used != line.size()) bad("trailing characters");
    s.eigenvalues.push_back(v);
  }
  if (!have_dim || !have_r || !have_bound || !have_header)
    fail(ErrorKind::FormatError, "spectrum CSV lacks dim, scalar_curvature, truncation_bound or header");
  s.validate();
  return s;
}

void save_spectrum_csv(const std::string& path, const AbstractSpectrum& s) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::FormatError, "cannot write " + path);
  write_spectrum_csv(f, s);
}

AbstractSpectrum load_spectrum_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::FormatError, "cannot read " + path);
  return read_spectrum_csv(f);
}

} // namespace confspec

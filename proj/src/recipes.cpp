#include "confspec/recipes.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "confspec/error.hpp"
#include "confspec/geometry.hpp"
#include "confspec/perturbation.hpp"

namespace confspec {

namespace {

double phase(const Grid& grid, std::size_t node, const std::vector<int>& k) {
  double p = 0.0;
  for (int a = 0; a < grid.dim(); ++a)
    p += 2.0 * std::numbers::pi * k[a] * grid.coordinate(node, a) / grid.period(a);
  return p;
}

/// All integer vectors with 0 < |k|_inf <= max_mode, lexicographic.
std::vector<std::vector<int>> modes(int dim, int max_mode) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(dim, -max_mode);
  while (true) {
    bool zero = true;
    for (int x : k) zero = zero && x == 0;
    if (!zero) out.push_back(k);
    int i = dim - 1;
    while (i >= 0 && k[i] == max_mode) k[i--] = -max_mode;
    if (i < 0) break;
    ++k[i];
  }
  return out;
}

double squared_norm(const std::vector<int>& k) {
  double s = 0.0;
  for (int x : k) s += x * x;
  return s;
}

} // namespace

ScalarField fourier_field(const Grid& grid, const std::vector<FourierTerm>& terms,
                          double constant) {
  for (const auto& t : terms)
    if (static_cast<int>(t.k.size()) != grid.dim())
      fail(ErrorKind::InvalidArgument, "Fourier mode has the wrong dimension");
  ScalarField f(grid);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    double v = constant;
    for (const auto& t : terms) {
      const double p = phase(grid, node, t.k);
      v += t.cos_coeff * std::cos(p) + t.sin_coeff * std::sin(p);
    }
    f[node] = v;
  }
  return f;
}

MetricField conformal_fourier_metric(const Grid& grid, const std::vector<FourierTerm>& terms,
                                     double constant) {
  const ScalarField phi = fourier_field(grid, terms, constant);
  SymTensorField g(grid);
  for (std::size_t node = 0; node < grid.size(); ++node)
    for (int i = 0; i < grid.dim(); ++i) g(node, i, i) = std::exp(2.0 * phi[node]);
  return MetricField(std::move(g));
}

SymTensorField random_traceless(const MetricField& g0, std::uint64_t seed, int max_mode) {
  if (max_mode < 1) fail(ErrorKind::InvalidArgument, "max_mode must be at least 1");
  const Grid& grid = g0.grid();
  const int n = grid.dim();
  const int nc = grid.component_count_sym();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  SymTensorField h(grid);
  for (const auto& k : modes(n, max_mode)) {
    const double amp = 1.0 / squared_norm(k);
    std::vector<double> a(nc), b(nc);
    for (int c = 0; c < nc; ++c) {
      a[c] = amp * normal(rng);
      b[c] = amp * normal(rng);
    }
    for (std::size_t node = 0; node < grid.size(); ++node) {
      const double p = phase(grid, node, k);
      const double cp = std::cos(p), sp = std::sin(p);
      for (int c = 0; c < nc; ++c) h.at(node, c) += a[c] * cp + b[c] * sp;
    }
  }
  h = traceless(g0, h);

  const double sup = pointwise_norm(g0, h);
  return (1.0 / sup) * h;
}

ScalarField random_positive_field(const Grid& grid, std::uint64_t seed, double amplitude,
                                  int max_mode) {
  if (!(amplitude >= 0.0 && amplitude < 1.0))
    fail(ErrorKind::InvalidArgument, "amplitude must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<FourierTerm> terms;
  for (const auto& k : modes(grid.dim(), max_mode)) terms.push_back({k, normal(rng), normal(rng)});
  ScalarField s = fourier_field(grid, terms);
  const double sup = s.max_abs();
  for (std::size_t i = 0; i < grid.size(); ++i) s[i] = 1.0 + amplitude * s[i] / sup;
  return s;
}

} // namespace confspec

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "confspec/eigensolver.hpp"
#include "confspec/fields.hpp"
#include "confspec/product.hpp"
#include "confspec/recipes.hpp"
#include "confspec/stencil.hpp"

namespace confspec {

struct GridSpec {
  std::vector<int> resolution;
  std::vector<double> period;
  Grid make() const { return Grid(resolution, period); }
};

struct MetricRecipe {
  enum class Kind { Flat, ConstantConformal, ConformalFourier, RandomTraceless };
  Kind kind = Kind::Flat;
  /// Flat: g = scale * delta. ConstantConformal: g = factor^2 * delta.
  double scale = 1.0;
  double factor = 1.0;
  /// ConformalFourier: g = exp(2 phi) delta.
  double constant = 0.0;
  std::vector<FourierTerm> terms;
  /// RandomTraceless: g = scale * delta + t * random_traceless(seed, max_mode).
  std::uint64_t seed = 1;
  int max_mode = 2;
  double t = 0.0;

  MetricField build(const Grid& grid) const;
};

struct DirectionRecipe {
  enum class Kind { Zero, Homothety, RandomTraceless };
  Kind kind = Kind::RandomTraceless;
  std::uint64_t seed = 1;
  int max_mode = 2;
  double scale = 1.0;

  /// Zero, scale * g, or scale * random_traceless(g, seed, max_mode).
  SymTensorField build(const MetricField& g) const;
};

struct EigenSettings {
  int k = 8;
  double tolerance = 1e-9;
  int max_iterations = 600;
  /// Kernel tolerance; 0 selects the grid-dependent default.
  double kernel_tol = 0.0;
  bool dense = false;

  EigenOptions options(std::uint64_t seed) const;
};

/// Kernel-bearing metric found along base + t * direction.
struct FixtureSpec {
  bool enabled = false;
  DirectionRecipe direction;
  int branch = 1;
  double tolerance = 1e-10;
  std::vector<double> scan;  ///< empty: default scan
  int window = 8;
};

struct SpectrumSection {
  std::vector<double> count_below;
  bool save_vectors = false;
};

struct PerturbSection {
  DirectionRecipe direction;
  FixtureSpec fixture;
  std::vector<double> t_grid{0.0, 0.05, 0.1, 0.15, 0.2};
  int window = 6;
  std::vector<double> slope_steps{1e-3, 5e-4, 2.5e-4, 1.25e-4};
};

struct BreakSection {
  double eps = 0.05;
  int levels = 20;
  FixtureSpec fixture;
};

struct ProductSection {
  int d = 2;
  int l_max = 3;
  double eps = 0.05;
  int genus = 2;
  std::vector<int> ks{1, 3, 10};
  double tail_bound = 10.0;
  double t = 12.0;
  double t_lo = 0.5;
  double t_hi = 30.0;
  int t_samples = 60;
  std::vector<int> family{1, 2, 4, 8, 16, 32};
  double r0 = 1.0;
  double d0 = 1.0;
  BoundTuple bounds{1e6, 0.05, 10.0, 50.0};
};

struct CurvatureSection {
  /// Test function for the identity residuals.
  std::vector<FourierTerm> psi;
  double psi_constant = 0.0;
};

struct ExperimentConfig {
  std::optional<GridSpec> grid;
  Scheme scheme = Scheme::Spectral;
  MetricRecipe metric;
  /// nullopt: conformal coupling of the grid dimension.
  std::optional<double> coupling;
  EigenSettings eigen;
  std::uint64_t seed = 0x5eed5eedULL;

  SpectrumSection spectrum;
  PerturbSection perturb;
  BreakSection break_kernel;
  ProductSection product;
  CurvatureSection curvature;

  /// Canonical JSON dump after overrides, and its FNV-1a 64-bit hash.
  std::string canonical;
  std::uint64_t hash = 0;

  const GridSpec& require_grid() const;
  double coupling_for(int dim) const;
};

/// Command-line overrides applied before validation and hashing.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool dense = false;
};

/// Parses a JSON configuration. Unknown keys and out-of-range values throw
/// ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& text, const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const Overrides& overrides = {});

std::uint64_t fnv1a64(const std::string& data);

} // namespace confspec

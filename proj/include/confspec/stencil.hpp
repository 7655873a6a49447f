#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confspec/grid.hpp"

namespace confspec {

/// Periodic differentiation scheme used for every spatial derivative.
enum class Scheme {
  Spectral,  ///< Fourier (periodic sinc) differentiation along grid lines.
  FD4,       ///< 4th-order central differences.
  FD2,       ///< 2nd-order central differences.
};

Scheme parse_scheme(std::string_view name);
std::string_view to_string(Scheme s);

/// Nominal accuracy order used by tolerance formulas (4 for spectral).
int nominal_order(Scheme s);

/// Circulant 1D derivative operators along each grid axis.
///
/// Along one axis, (D f)_j = sum_m w[m] f_{j+m} with periodic wrap. First
/// derivative weights are antisymmetric (w[N-m] = -w[m]), second derivative
/// weights symmetric, and both annihilate constants exactly.
class Differentiator {
public:
  Differentiator(const Grid& grid, Scheme scheme);

  const Grid& grid() const noexcept { return grid_; }
  Scheme scheme() const noexcept { return scheme_; }

  /// out = d/dx_axis in. `in` and `out` must not alias.
  void first(std::span<const double> in, std::span<double> out, int axis) const;
  /// out = d^2/dx_axis^2 in. `in` and `out` must not alias.
  void second(std::span<const double> in, std::span<double> out, int axis) const;

  std::vector<double> first(std::span<const double> in, int axis) const;
  std::vector<double> second(std::span<const double> in, int axis) const;
  /// Mixed derivative d_a d_b; uses the second-derivative stencil when a == b.
  std::vector<double> mixed(std::span<const double> in, int a, int b) const;

  /// Full circulant weights w[0..N-1] of the first / second derivative.
  const std::vector<double>& first_weights(int axis) const { return w1_[axis]; }
  const std::vector<double>& second_weights(int axis) const { return w2_[axis]; }

private:
  struct Tap {
    int offset;
    double weight;
  };

  Grid grid_;
  Scheme scheme_;
  std::vector<std::vector<double>> w1_, w2_;
  std::vector<std::vector<Tap>> taps1_, taps2_;  // nonzero taps, offset in [1, N)
};

} // namespace confspec

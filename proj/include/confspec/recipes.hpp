#pragma once

#include <cstdint>
#include <vector>

#include "confspec/fields.hpp"

namespace confspec {

/// One real Fourier mode a cos(2 pi k.x / L) + b sin(2 pi k.x / L).
struct FourierTerm {
  std::vector<int> k;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

ScalarField fourier_field(const Grid& grid, const std::vector<FourierTerm>& terms,
                          double constant = 0.0);

/// e^{2 phi} times the Euclidean metric, phi given by Fourier terms.
MetricField conformal_fourier_metric(const Grid& grid, const std::vector<FourierTerm>& terms,
                                     double constant = 0.0);

/// Smooth traceless direction from seeded normal coefficients on the modes
/// 0 < |k|_inf <= max_mode, amplitude 1/|k|^2. The g0-traceless part is
/// normalized so that the largest pointwise eigenvalue of g0^{-1/2} h g0^{-1/2}
/// has modulus 1.
SymTensorField random_traceless(const MetricField& g0, std::uint64_t seed, int max_mode = 2);

/// 1 + amplitude * s with s a seeded smooth field scaled to max |s| = 1.
ScalarField random_positive_field(const Grid& grid, std::uint64_t seed, double amplitude = 0.3,
                                  int max_mode = 1);

} // namespace confspec

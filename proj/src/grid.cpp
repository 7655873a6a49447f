#include "confspec/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confspec/error.hpp"

namespace confspec {

Grid::Grid(std::vector<int> resolution, std::vector<double> period)
    : resolution_(std::move(resolution)), period_(std::move(period)) {
  if (resolution_.size() != period_.size())
    fail(ErrorKind::InvalidArgument, "grid: resolution and period lengths differ");
  if (resolution_.empty() || static_cast<int>(resolution_.size()) > max_dim)
    fail(ErrorKind::InvalidArgument,
         "grid: dimension must be in [1, " + std::to_string(max_dim) + "]");
  for (int n : resolution_)
    if (n < 4) fail(ErrorKind::InvalidArgument, "grid: every resolution must be >= 4");
  for (double l : period_)
    if (!(l > 0.0) || !std::isfinite(l))
      fail(ErrorKind::InvalidArgument, "grid: every period must be positive and finite");

  const int n = dim();
  stride_.assign(n, 1);
  for (int a = n - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * resolution_[a + 1];
  size_ = stride_[0] * resolution_[0];
  for (int a = 0; a < n; ++a) cell_volume_ *= spacing(a);
}

Grid Grid::cube(int dim, int n, double period) {
  return Grid(std::vector<int>(dim, n), std::vector<double>(dim, period));
}

double Grid::max_spacing() const {
  double h = 0.0;
  for (int a = 0; a < dim(); ++a) h = std::max(h, spacing(a));
  return h;
}

double Grid::total_volume() const {
  double v = 1.0;
  for (double l : period_) v *= l;
  return v;
}

std::size_t Grid::shifted(std::size_t node, int axis, int shift) const {
  const int n = resolution_[axis];
  const int i = coordinate_index(node, axis);
  int j = (i + shift) % n;
  if (j < 0) j += n;
  return node + (static_cast<std::ptrdiff_t>(j) - i) * static_cast<std::ptrdiff_t>(stride_[axis]);
}

} // namespace confspec

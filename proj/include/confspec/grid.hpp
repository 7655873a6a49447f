#pragma once

#include <cstddef>
#include <vector>

namespace confspec {

/// Uniform periodic grid on the flat torus T^n = prod_i [0, L_i).
///
/// Nodes are numbered row-major with axis 0 varying slowest. Node i along
/// axis a sits at coordinate i * L_a / N_a.
class Grid {
public:
  static constexpr int max_dim = 8;

  Grid(std::vector<int> resolution, std::vector<double> period);

  /// Cubic grid with `n` points per axis on the unit torus of dimension `dim`.
  static Grid cube(int dim, int n, double period = 1.0);

  int dim() const noexcept { return static_cast<int>(resolution_.size()); }
  const std::vector<int>& resolution() const noexcept { return resolution_; }
  const std::vector<double>& period() const noexcept { return period_; }
  int resolution(int axis) const { return resolution_[axis]; }
  double period(int axis) const { return period_[axis]; }
  double spacing(int axis) const { return period_[axis] / resolution_[axis]; }
  double max_spacing() const;
  std::size_t stride(int axis) const { return stride_[axis]; }
  std::size_t size() const noexcept { return size_; }

  /// Quadrature weight of one cell, i.e. the product of spacings.
  double cell_volume() const noexcept { return cell_volume_; }
  double total_volume() const;

  int component_count_sym() const { return dim() * (dim() + 1) / 2; }

  /// Index of node reached from `node` by moving `shift` steps along `axis`
  /// (periodic wrap).
  std::size_t shifted(std::size_t node, int axis, int shift) const;

  int coordinate_index(std::size_t node, int axis) const {
    return static_cast<int>((node / stride_[axis]) % resolution_[axis]);
  }
  double coordinate(std::size_t node, int axis) const {
    return coordinate_index(node, axis) * spacing(axis);
  }

  bool operator==(const Grid& other) const {
    return resolution_ == other.resolution_ && period_ == other.period_;
  }

private:
  std::vector<int> resolution_;
  std::vector<double> period_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  double cell_volume_ = 1.0;
};

/// Storage index of the (i, j) component of a symmetric tensor in
/// upper-triangular row-major order: (0,0), (0,1), ..., (0,n-1), (1,1), ...
inline int sym_index(int i, int j, int n) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i * n - i * (i - 1) / 2 + (j - i);
}

} // namespace confspec

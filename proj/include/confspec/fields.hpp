#pragma once

#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "confspec/grid.hpp"

namespace confspec {

/// Grid-sampled data with a fixed number of components per node, stored
/// node-major (all components of node 0, then node 1, ...).
class FieldData {
public:
  FieldData(Grid grid, int components);
  FieldData(Grid grid, int components, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  int components() const noexcept { return components_; }
  std::size_t size() const noexcept { return grid_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double at(std::size_t node, int comp) const {
    return values_[node * components_ + comp];
  }
  double& at(std::size_t node, int comp) {
    return values_[node * components_ + comp];
  }

  /// Copy of one component as a node-indexed array.
  std::vector<double> component(int comp) const;
  void set_component(int comp, std::span<const double> v);

  double max_abs() const;
  bool all_finite() const;

protected:
  Grid grid_;
  int components_;
  std::vector<double> values_;
};

class ScalarField : public FieldData {
public:
  explicit ScalarField(Grid grid) : FieldData(std::move(grid), 1) {}
  ScalarField(Grid grid, std::vector<double> values);

  /// Samples `f(x)` at every node; `x` has `grid.dim()` coordinates.
  static ScalarField sample(const Grid& grid,
                            const std::function<double(std::span<const double>)>& f);
  static ScalarField constant(const Grid& grid, double value);

  double operator[](std::size_t node) const { return values_[node]; }
  double& operator[](std::size_t node) { return values_[node]; }
};

/// Lower-index 1-form: n components per node.
class CovectorField : public FieldData {
public:
  explicit CovectorField(Grid grid);
  CovectorField(Grid grid, std::vector<double> values);

  double operator()(std::size_t node, int i) const { return at(node, i); }
  double& operator()(std::size_t node, int i) { return at(node, i); }
};

/// Lower-index symmetric 2-tensor with n(n+1)/2 stored components per node
/// (see sym_index for the ordering).
class SymTensorField : public FieldData {
public:
  explicit SymTensorField(Grid grid);
  SymTensorField(Grid grid, std::vector<double> values);

  /// Identity tensor delta_ij scaled by `scale` at every node.
  static SymTensorField identity(const Grid& grid, double scale = 1.0);

  double operator()(std::size_t node, int i, int j) const {
    return at(node, sym_index(i, j, grid_.dim()));
  }
  double& operator()(std::size_t node, int i, int j) {
    return at(node, sym_index(i, j, grid_.dim()));
  }
};

/// Symmetric positive-definite metric tensor field. Validated on
/// construction; inverse and volume density are cached.
class MetricField {
public:
  /// Throws SingularMetric if some node is not positive definite (smallest
  /// eigenvalue <= 1e-12 times the largest).
  explicit MetricField(SymTensorField tensor);

  static MetricField flat(const Grid& grid, double scale = 1.0);

  const Grid& grid() const noexcept { return tensor_.grid(); }
  int dim() const noexcept { return tensor_.grid().dim(); }
  const SymTensorField& tensor() const noexcept { return tensor_; }
  const SymTensorField& inverse() const noexcept { return inverse_; }
  const std::vector<double>& sqrt_det() const noexcept { return sqrt_det_; }

  double operator()(std::size_t node, int i, int j) const { return tensor_(node, i, j); }
  double inv(std::size_t node, int i, int j) const { return inverse_(node, i, j); }

private:
  SymTensorField tensor_;
  SymTensorField inverse_;
  std::vector<double> sqrt_det_;
};

/// Christoffel symbols Gamma^k_ij, n^3 values per node, index k*n*n + i*n + j.
class ChristoffelField : public FieldData {
public:
  explicit ChristoffelField(Grid grid);

  double operator()(std::size_t node, int k, int i, int j) const {
    const int n = grid_.dim();
    return at(node, (k * n + i) * n + j);
  }
  double& operator()(std::size_t node, int k, int i, int j) {
    const int n = grid_.dim();
    return at(node, (k * n + i) * n + j);
  }
};

void require_same_grid(const Grid& a, const Grid& b, const char* where);

// Pointwise linear algebra on fields of identical type and grid.
template <class F>
  requires std::derived_from<F, FieldData>
F operator+(const F& a, const F& b) {
  require_same_grid(a.grid(), b.grid(), "operator+");
  F out = a;
  auto o = out.values();
  auto v = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += v[i];
  return out;
}

template <class F>
  requires std::derived_from<F, FieldData>
F operator-(const F& a, const F& b) {
  require_same_grid(a.grid(), b.grid(), "operator-");
  F out = a;
  auto o = out.values();
  auto v = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= v[i];
  return out;
}

template <class F>
  requires std::derived_from<F, FieldData>
F operator*(double s, const F& a) {
  F out = a;
  for (double& x : out.values()) x *= s;
  return out;
}

/// Pointwise product of a scalar field with any field.
template <class F>
  requires std::derived_from<F, FieldData>
F operator*(const ScalarField& s, const F& a) {
  require_same_grid(s.grid(), a.grid(), "operator*");
  F out = a;
  const int c = a.components();
  for (std::size_t node = 0; node < a.size(); ++node)
    for (int k = 0; k < c; ++k) out.at(node, k) *= s[node];
  return out;
}

ScalarField pointwise_product(const ScalarField& a, const ScalarField& b);

} // namespace confspec

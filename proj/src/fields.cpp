#include "confspec/fields.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "confspec/error.hpp"
#include "confspec/small_matrix.hpp"

namespace confspec {

FieldData::FieldData(Grid grid, int components)
    : grid_(std::move(grid)), components_(components),
      values_(grid_.size() * static_cast<std::size_t>(components), 0.0) {}

FieldData::FieldData(Grid grid, int components, std::vector<double> values)
    : grid_(std::move(grid)), components_(components), values_(std::move(values)) {
  if (values_.size() != grid_.size() * static_cast<std::size_t>(components_))
    fail(ErrorKind::InvalidArgument, "field: value count does not match grid");
  if (!all_finite()) fail(ErrorKind::InvalidArgument, "field: non-finite value");
}

std::vector<double> FieldData::component(int comp) const {
  std::vector<double> out(size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = at(n, comp);
  return out;
}

void FieldData::set_component(int comp, std::span<const double> v) {
  for (std::size_t n = 0; n < size(); ++n) at(n, comp) = v[n];
}

double FieldData::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool FieldData::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : FieldData(std::move(grid), 1, std::move(values)) {}

ScalarField ScalarField::sample(const Grid& grid,
                                const std::function<double(std::span<const double>)>& f) {
  ScalarField out(grid);
  std::vector<double> x(grid.dim());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    for (int a = 0; a < grid.dim(); ++a) x[a] = grid.coordinate(n, a);
    out[n] = f(x);
  }
  if (!out.all_finite()) fail(ErrorKind::InvalidArgument, "field: sampled non-finite value");
  return out;
}

ScalarField ScalarField::constant(const Grid& grid, double value) {
  return ScalarField(grid, std::vector<double>(grid.size(), value));
}

CovectorField::CovectorField(Grid grid) : FieldData(grid, grid.dim()) {}
CovectorField::CovectorField(Grid grid, std::vector<double> values)
    : FieldData(grid, grid.dim(), std::move(values)) {}

SymTensorField::SymTensorField(Grid grid) : FieldData(grid, grid.component_count_sym()) {}
SymTensorField::SymTensorField(Grid grid, std::vector<double> values)
    : FieldData(grid, grid.component_count_sym(), std::move(values)) {}

SymTensorField SymTensorField::identity(const Grid& grid, double scale) {
  SymTensorField out(grid);
  for (std::size_t n = 0; n < grid.size(); ++n)
    for (int i = 0; i < grid.dim(); ++i) out(n, i, i) = scale;
  return out;
}

MetricField::MetricField(SymTensorField tensor)
    : tensor_(std::move(tensor)), inverse_(tensor_.grid()), sqrt_det_(tensor_.size()) {
  for (std::size_t node = 0; node < tensor_.size(); ++node) {
    const SmallMat g = unpack_sym(tensor_, node);
    Eigen::SelfAdjointEigenSolver<SmallMat> es(g);
    const auto& ev = es.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.cwiseAbs().maxCoeff();
    if (!(lo > 1e-12 * hi) || !std::isfinite(lo)) {
      std::ostringstream os;
      os << "metric is not positive definite at node " << node << " (smallest eigenvalue "
         << lo << ", largest " << hi << ")";
      fail(ErrorKind::SingularMetric, os.str());
    }
    const Eigen::PartialPivLU<SmallMat> lu(g);
    sqrt_det_[node] = std::sqrt(lu.determinant());
    pack_sym(inverse_, node, lu.inverse());
  }
}

MetricField MetricField::flat(const Grid& grid, double scale) {
  return MetricField(SymTensorField::identity(grid, scale));
}

ChristoffelField::ChristoffelField(Grid grid)
    : FieldData(grid, grid.dim() * grid.dim() * grid.dim()) {}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) fail(ErrorKind::GridMismatch, std::string(where) + ": fields live on different grids");
}

ScalarField pointwise_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "pointwise_product");
  ScalarField out = a;
  for (std::size_t n = 0; n < a.size(); ++n) out[n] *= b[n];
  return out;
}

} // namespace confspec

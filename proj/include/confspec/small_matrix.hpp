#pragma once

#include <Eigen/Dense>

#include "confspec/fields.hpp"

namespace confspec {

/// Per-node n x n matrix, stack allocated (n <= Grid::max_dim).
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                               Grid::max_dim, Grid::max_dim>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, Grid::max_dim, 1>;

inline SmallMat unpack_sym(const SymTensorField& t, std::size_t node) {
  const int n = t.grid().dim();
  SmallMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = t(node, i, j);
  return m;
}

inline void pack_sym(SymTensorField& t, std::size_t node, const SmallMat& m) {
  const int n = t.grid().dim();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) t(node, i, j) = 0.5 * (m(i, j) + m(j, i));
}

} // namespace confspec

#include "confspec/geometry.hpp"

#include <cmath>
#include <numeric>

#include "confspec/error.hpp"
#include "confspec/small_matrix.hpp"

namespace confspec {

namespace {

/// First derivatives of every stored component: out[axis][comp][node].
std::vector<std::vector<std::vector<double>>> component_gradients(const FieldData& f,
                                                                  const Differentiator& d) {
  const int n = f.grid().dim();
  std::vector<std::vector<std::vector<double>>> out(n);
  for (int comp = 0; comp < f.components(); ++comp) {
    const auto c = f.component(comp);
    for (int a = 0; a < n; ++a) out[a].push_back(d.first(c, a));
  }
  return out;
}

} // namespace

ChristoffelField christoffel(const MetricField& g, Scheme scheme) {
  const Grid& grid = g.grid();
  const int n = grid.dim();
  const Differentiator d(grid, scheme);
  const auto dg = component_gradients(g.tensor(), d);  // dg[l][sym(i,j)] = d_l g_ij

  ChristoffelField gamma(grid);
  std::vector<double> first_kind(n * n * n);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    // Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double v = 0.5 * (dg[i][sym_index(j, l, n)][node] +
                                   dg[j][sym_index(i, l, n)][node] -
                                   dg[l][sym_index(i, j, n)][node]);
          first_kind[(l * n + i) * n + j] = first_kind[(l * n + j) * n + i] = v;
        }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += g.inv(node, k, l) * first_kind[(l * n + i) * n + j];
          gamma(node, k, i, j) = gamma(node, k, j, i) = s;
        }
  }
  return gamma;
}

SymTensorField ricci(const MetricField& g, Scheme scheme) {
  return ricci(g, christoffel(g, scheme), scheme);
}

SymTensorField ricci(const MetricField& g, const ChristoffelField& gamma, Scheme scheme) {
  const Grid& grid = g.grid();
  const int n = grid.dim();
  const Differentiator d(grid, scheme);
  const std::size_t size = grid.size();

  SymTensorField ric(grid);
  std::vector<double> buf(size);

  // d_k Gamma^k_ij
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::vector<double> acc(size, 0.0);
      for (int k = 0; k < n; ++k) {
        for (std::size_t node = 0; node < size; ++node) buf[node] = gamma(node, k, i, j);
        const auto dk = d.first(buf, k);
        for (std::size_t node = 0; node < size; ++node) acc[node] += dk[node];
      }
      for (std::size_t node = 0; node < size; ++node) ric(node, i, j) = acc[node];
    }

  // - d_j V_i with V_i = Gamma^k_ik, symmetrized
  std::vector<std::vector<double>> contracted(n, std::vector<double>(size, 0.0));
  for (int i = 0; i < n; ++i)
    for (std::size_t node = 0; node < size; ++node) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += gamma(node, k, i, k);
      contracted[i][node] = s;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const auto a = d.first(contracted[i], j);
      const auto b = d.first(contracted[j], i);
      for (std::size_t node = 0; node < size; ++node)
        ric(node, i, j) -= 0.5 * (a[node] + b[node]);
    }

  // quadratic terms
  for (std::size_t node = 0; node < size; ++node)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double q = 0.0;
        for (int l = 0; l < n; ++l) {
          q += contracted[l][node] * gamma(node, l, i, j);
          for (int k = 0; k < n; ++k) q -= gamma(node, k, j, l) * gamma(node, l, i, k);
        }
        ric(node, i, j) += q;
      }
  return ric;
}

ScalarField scalar_curvature(const MetricField& g, Scheme scheme) {
  return trace(g, ricci(g, scheme));
}

Curvature curvature(const MetricField& g, Scheme scheme) {
  ChristoffelField gamma = christoffel(g, scheme);
  SymTensorField ric = ricci(g, gamma, scheme);
  ScalarField r = trace(g, ric);
  return {std::move(gamma), std::move(ric), std::move(r)};
}

CovectorField gradient(const ScalarField& f, Scheme scheme) {
  const Grid& grid = f.grid();
  const Differentiator d(grid, scheme);
  CovectorField out(grid);
  for (int a = 0; a < grid.dim(); ++a) out.set_component(a, d.first(f.values(), a));
  return out;
}

SymTensorField hessian(const MetricField& g, const ScalarField& f, Scheme scheme) {
  return hessian(g, christoffel(g, scheme), f, scheme);
}

SymTensorField hessian(const MetricField& g, const ChristoffelField& gamma,
                       const ScalarField& f, Scheme scheme) {
  require_same_grid(g.grid(), f.grid(), "hessian");
  const Grid& grid = g.grid();
  const int n = grid.dim();
  const Differentiator d(grid, scheme);
  std::vector<std::vector<double>> df(n);
  for (int a = 0; a < n; ++a) df[a] = d.first(f.values(), a);

  SymTensorField h(grid);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const auto dij = (i == j) ? d.second(f.values(), i) : d.first(df[j], i);
      for (std::size_t node = 0; node < grid.size(); ++node) {
        double v = dij[node];
        for (int k = 0; k < n; ++k) v -= gamma(node, k, i, j) * df[k][node];
        h(node, i, j) = v;
      }
    }
  return h;
}

ScalarField laplace_beltrami(const MetricField& g, const ScalarField& f, Scheme scheme) {
  return trace(g, hessian(g, f, scheme));
}

SymTensorField sym_covariant_derivative(const MetricField& g, const CovectorField& a,
                                        Scheme scheme) {
  require_same_grid(g.grid(), a.grid(), "sym_covariant_derivative");
  const Grid& grid = g.grid();
  const int n = grid.dim();
  const Differentiator d(grid, scheme);
  const ChristoffelField gamma = christoffel(g, scheme);
  const auto da = component_gradients(a, d);  // da[i][j] = d_i a_j

  SymTensorField out(grid);
  for (std::size_t node = 0; node < grid.size(); ++node)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double v = 0.5 * (da[i][j][node] + da[j][i][node]);
        for (int k = 0; k < n; ++k) v -= gamma(node, k, i, j) * a(node, k);
        out(node, i, j) = v;
      }
  return out;
}

ScalarField divergence(const MetricField& g, const CovectorField& a, Scheme scheme) {
  require_same_grid(g.grid(), a.grid(), "divergence");
  const Grid& grid = g.grid();
  const int n = grid.dim();
  const Differentiator d(grid, scheme);
  const auto& sg = g.sqrt_det();
  ScalarField out(grid);
  std::vector<double> flux(grid.size());
  for (int i = 0; i < n; ++i) {
    for (std::size_t node = 0; node < grid.size(); ++node) {
      double up = 0.0;
      for (int j = 0; j < n; ++j) up += g.inv(node, i, j) * a(node, j);
      flux[node] = sg[node] * up;
    }
    const auto di = d.first(flux, i);
    for (std::size_t node = 0; node < grid.size(); ++node) out[node] -= di[node];
  }
  for (std::size_t node = 0; node < grid.size(); ++node) out[node] /= sg[node];
  return out;
}

CovectorField divergence(const MetricField& g, const SymTensorField& t, Scheme scheme) {
  return divergence(g, christoffel(g, scheme), t, scheme);
}

CovectorField divergence(const MetricField& g, const ChristoffelField& gamma,
                         const SymTensorField& t, Scheme scheme) {
  require_same_grid(g.grid(), t.grid(), "divergence");
  const Grid& grid = g.grid();
  const int n = grid.dim();
  const std::size_t size = grid.size();
  const Differentiator d(grid, scheme);
  const auto& sg = g.sqrt_det();

  // T^{ij} = g^{ia} g^{jb} T_ab
  SymTensorField up(grid);
  for (std::size_t node = 0; node < size; ++node)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) s += g.inv(node, i, a) * g.inv(node, j, b) * t(node, a, b);
        up(node, i, j) = s;
      }

  // V^j = -(1/sqrt g) d_i (sqrt g T^{ij}) - Gamma^j_ab T^{ab}
  std::vector<std::vector<double>> v(n, std::vector<double>(size, 0.0));
  std::vector<double> flux(size);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      for (std::size_t node = 0; node < size; ++node) flux[node] = sg[node] * up(node, i, j);
      const auto di = d.first(flux, i);
      for (std::size_t node = 0; node < size; ++node) v[j][node] -= di[node];
    }
    for (std::size_t node = 0; node < size; ++node) {
      double c = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) c += gamma(node, j, a, b) * up(node, a, b);
      v[j][node] = v[j][node] / sg[node] - c;
    }
  }

  CovectorField out(grid);
  for (std::size_t node = 0; node < size; ++node)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += g(node, k, j) * v[j][node];
      out(node, k) = s;
    }
  return out;
}

ScalarField double_divergence(const MetricField& g, const SymTensorField& h, Scheme scheme) {
  return double_divergence(g, christoffel(g, scheme), h, scheme);
}

ScalarField double_divergence(const MetricField& g, const ChristoffelField& gamma,
                              const SymTensorField& h, Scheme scheme) {
  return divergence(g, divergence(g, gamma, h, scheme), scheme);
}

ScalarField trace(const MetricField& g, const SymTensorField& h) {
  require_same_grid(g.grid(), h.grid(), "trace");
  const int n = g.dim();
  ScalarField out(g.grid());
  for (std::size_t node = 0; node < out.size(); ++node) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      s += g.inv(node, i, i) * h(node, i, i);
      for (int j = i + 1; j < n; ++j) s += 2.0 * g.inv(node, i, j) * h(node, i, j);
    }
    out[node] = s;
  }
  return out;
}

ScalarField inner(const MetricField& g, const SymTensorField& a, const SymTensorField& b) {
  require_same_grid(g.grid(), a.grid(), "inner");
  require_same_grid(a.grid(), b.grid(), "inner");
  const int n = g.dim();
  ScalarField out(g.grid());
  SmallMat ga(n, n), gb(n, n);
  for (std::size_t node = 0; node < out.size(); ++node) {
    // tr(g^-1 A g^-1 B)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double sa = 0.0, sb = 0.0;
        for (int k = 0; k < n; ++k) {
          sa += g.inv(node, i, k) * a(node, k, j);
          sb += g.inv(node, i, k) * b(node, k, j);
        }
        ga(i, j) = sa;
        gb(i, j) = sb;
      }
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += ga(i, j) * gb(j, i);
    out[node] = s;
  }
  return out;
}

ScalarField inner(const MetricField& g, const CovectorField& a, const CovectorField& b) {
  require_same_grid(g.grid(), a.grid(), "inner");
  require_same_grid(a.grid(), b.grid(), "inner");
  const int n = g.dim();
  ScalarField out(g.grid());
  for (std::size_t node = 0; node < out.size(); ++node) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += g.inv(node, i, j) * a(node, i) * b(node, j);
    out[node] = s;
  }
  return out;
}

SymTensorField traceless(const MetricField& g, const SymTensorField& v) {
  const ScalarField tr = trace(g, v);
  const int n = g.dim();
  SymTensorField out = v;
  for (std::size_t node = 0; node < out.size(); ++node)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) out(node, i, j) -= tr[node] / n * g(node, i, j);
  return out;
}

SymTensorField outer(const CovectorField& a, const CovectorField& b) {
  require_same_grid(a.grid(), b.grid(), "outer");
  const int n = a.grid().dim();
  SymTensorField out(a.grid());
  for (std::size_t node = 0; node < out.size(); ++node)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        out(node, i, j) = 0.5 * (a(node, i) * b(node, j) + a(node, j) * b(node, i));
  return out;
}

ScalarField volume_element(const MetricField& g) {
  return ScalarField(g.grid(), g.sqrt_det());
}

std::vector<double> quadrature_weights(const MetricField& g) {
  std::vector<double> w = g.sqrt_det();
  const double cell = g.grid().cell_volume();
  for (double& x : w) x *= cell;
  return w;
}

double total_volume(const MetricField& g) {
  const auto w = quadrature_weights(g);
  return std::accumulate(w.begin(), w.end(), 0.0);
}

double l2_inner(const MetricField& g, const ScalarField& a, const ScalarField& b) {
  require_same_grid(g.grid(), a.grid(), "l2_inner");
  require_same_grid(a.grid(), b.grid(), "l2_inner");
  const auto& sg = g.sqrt_det();
  double s = 0.0;
  for (std::size_t node = 0; node < a.size(); ++node) s += a[node] * b[node] * sg[node];
  return s * g.grid().cell_volume();
}

double l2_inner(const MetricField& g, const SymTensorField& a, const SymTensorField& b) {
  return l2_inner(g, inner(g, a, b), ScalarField::constant(g.grid(), 1.0));
}

double l2_inner(const MetricField& g, const CovectorField& a, const CovectorField& b) {
  return l2_inner(g, inner(g, a, b), ScalarField::constant(g.grid(), 1.0));
}

double l2_norm(const MetricField& g, const ScalarField& a) { return std::sqrt(l2_inner(g, a, a)); }
double l2_norm(const MetricField& g, const SymTensorField& a) {
  return std::sqrt(std::max(0.0, l2_inner(g, a, a)));
}

MetricField conformal_rescale(const MetricField& g, const ScalarField& u) {
  require_same_grid(g.grid(), u.grid(), "conformal_rescale");
  const int n = g.dim();
  if (n < 3) fail(ErrorKind::DimensionTooSmall, "conformal_rescale needs n >= 3");
  const double p = 4.0 / (n - 2);
  SymTensorField out = g.tensor();
  for (std::size_t node = 0; node < u.size(); ++node) {
    if (!(u[node] > 0.0))
      fail(ErrorKind::NonPositiveConformalFactor, "conformal factor must be positive everywhere");
    const double s = std::pow(u[node], p);
    for (int c = 0; c < out.components(); ++c) out.at(node, c) *= s;
  }
  return MetricField(std::move(out));
}

} // namespace confspec

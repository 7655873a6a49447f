#pragma once

#include "confspec/fields.hpp"
#include "confspec/stencil.hpp"

namespace confspec {

inline constexpr Scheme default_scheme = Scheme::Spectral;

/// Levi-Civita connection, Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).
ChristoffelField christoffel(const MetricField& g, Scheme scheme = default_scheme);

/// Ricci tensor R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik.
SymTensorField ricci(const MetricField& g, Scheme scheme = default_scheme);
SymTensorField ricci(const MetricField& g, const ChristoffelField& gamma,
                     Scheme scheme = default_scheme);

ScalarField scalar_curvature(const MetricField& g, Scheme scheme = default_scheme);

struct Curvature {
  ChristoffelField gamma;
  SymTensorField ricci;
  ScalarField scalar;
};

Curvature curvature(const MetricField& g, Scheme scheme = default_scheme);

/// Exterior derivative of a function, (df)_i = d_i f.
CovectorField gradient(const ScalarField& f, Scheme scheme = default_scheme);

/// Covariant Hessian (nabla^2 f)_ij = d_i d_j f - Gamma^k_ij d_k f.
SymTensorField hessian(const MetricField& g, const ScalarField& f,
                       Scheme scheme = default_scheme);
SymTensorField hessian(const MetricField& g, const ChristoffelField& gamma,
                       const ScalarField& f, Scheme scheme = default_scheme);

/// Analyst's Laplacian (so -Delta >= 0), computed as tr_g of the Hessian.
ScalarField laplace_beltrami(const MetricField& g, const ScalarField& f,
                             Scheme scheme = default_scheme);

/// Symmetrized covariant derivative of a 1-form, (nabla_i a_j + nabla_j a_i)/2.
SymTensorField sym_covariant_derivative(const MetricField& g, const CovectorField& a,
                                        Scheme scheme = default_scheme);

// The divergences below are assembled as the exact discrete L2(dV_g) adjoints
// of the gradient and of the covariant derivative, so that
// (nabla a, b) = (a, delta b) holds to round-off on the grid.

/// delta a = -div a for a 1-form.
ScalarField divergence(const MetricField& g, const CovectorField& a,
                       Scheme scheme = default_scheme);
/// (delta T)_k = -nabla^i T_ik for a symmetric 2-tensor.
CovectorField divergence(const MetricField& g, const SymTensorField& t,
                         Scheme scheme = default_scheme);
CovectorField divergence(const MetricField& g, const ChristoffelField& gamma,
                         const SymTensorField& t, Scheme scheme = default_scheme);
/// delta^2 h = delta(delta h), the formal adjoint of the Hessian.
ScalarField double_divergence(const MetricField& g, const SymTensorField& h,
                              Scheme scheme = default_scheme);
ScalarField double_divergence(const MetricField& g, const ChristoffelField& gamma,
                              const SymTensorField& h, Scheme scheme = default_scheme);

ScalarField trace(const MetricField& g, const SymTensorField& h);
/// <A, B>_g = A^ij B_ij.
ScalarField inner(const MetricField& g, const SymTensorField& a, const SymTensorField& b);
ScalarField inner(const MetricField& g, const CovectorField& a, const CovectorField& b);
/// V - (1/n) tr_g(V) g.
SymTensorField traceless(const MetricField& g, const SymTensorField& v);
/// Symmetrized tensor product (a (x) b + b (x) a)/2.
SymTensorField outer(const CovectorField& a, const CovectorField& b);

ScalarField volume_element(const MetricField& g);
/// Quadrature weights: cell volume times sqrt(det g), one per node.
std::vector<double> quadrature_weights(const MetricField& g);
double total_volume(const MetricField& g);
double l2_inner(const MetricField& g, const ScalarField& a, const ScalarField& b);
double l2_inner(const MetricField& g, const SymTensorField& a, const SymTensorField& b);
double l2_inner(const MetricField& g, const CovectorField& a, const CovectorField& b);
double l2_norm(const MetricField& g, const ScalarField& a);
double l2_norm(const MetricField& g, const SymTensorField& a);

/// g_hat = u^{4/(n-2)} g. Throws NonPositiveConformalFactor unless u > 0.
MetricField conformal_rescale(const MetricField& g, const ScalarField& u);

} // namespace confspec

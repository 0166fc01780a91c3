#pragma once

#include <Eigen/Dense>
#include <span>

namespace rlab::quadrature {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Gauss-Legendre rule on [-1, 1]. Exact for polynomials of degree <= 2n-1.
struct GaussLegendre {
  Vec nodes;    // strictly increasing
  Vec weights;  // positive, sum to 2
};

GaussLegendre gauss_legendre(int n);

/// Barycentric weights for Lagrange interpolation through `nodes`.
Vec barycentric_weights(const Vec& nodes);

/// Spectral first-derivative matrix at the nodes (exact on polynomials of
/// degree < n).
Mat differentiation_matrix(const Vec& nodes, const Vec& bary);

/// Evaluates the degree n-1 interpolant of `values` at `x`.
double interpolate(const Vec& nodes, const Vec& bary, const Vec& values,
                   double x);

/// Matrix mapping nodal values to values of the interpolant at `targets`.
Mat interpolation_matrix(const Vec& nodes, const Vec& bary, const Vec& targets);

/// Legendre polynomials P_0..P_kmax evaluated at x.
Vec legendre_values(int kmax, double x);

/// Nodal values -> Legendre coefficients on the Gauss grid (exact for
/// interpolants of degree <= n-1).
Mat legendre_analysis(const GaussLegendre& rule);

/// Matrix mapping nodal values f_j to F(x_i) = int_{-1}^{x_i} p(s) ds where p
/// is the interpolant of f. Exact for polynomial f of degree <= n-1.
Mat integration_matrix(const GaussLegendre& rule);

}  // namespace rlab::quadrature

#pragma once

// Spectra of L = -Delta + g^{ij} u_i d_j on Fourier-mode-m functions and of
// d-bar^* d-bar on mode-m (1,0) vector fields V = F(xi) e^{i m angle} d_w.
//
// Both problems are discretized by Rayleigh-Ritz on nodal values of a smooth
// G with F = P(xi) G, where P carries the pole behaviour of the mode
// ((1 - x^2)^{|m|/2} for functions on CP1, (1-x)^a (1+x)^b for vector fields
// with the T^{1,0} line-bundle shift). Mass matrices are diagonal (Gauss
// quadrature), so each problem becomes a dense symmetric eigenproblem after
// conjugation by the square-root mass.

#include <limits>
#include <optional>
#include <vector>

#include "ricci_lab/geometry.hpp"

namespace rlab {

/// Mode-m operator in symmetric form: L ~ diag(1/s) A diag(s) with s = sqrt_mass.
struct WeightedOperator {
  int mode = 0;
  Mat symmetric;
  Vec sqrt_mass;
  Vec pole_factor;  // F = pole_factor * G
};

WeightedOperator assemble_weighted_laplacian(const MetricState& state, const Field& u, int mode);

/// Eigenpairs of one mode. Columns of `profiles` are F at the nodes,
/// normalized by int |F|^2 e^{-u} dv = 1.
struct ModeEigensystem {
  int mode = 0;
  Vec eigenvalues;  // ascending
  Mat profiles;
};

ModeEigensystem mode_eigensystem(const MetricState& state, const Field& u, int mode);

struct ModeSpectrum {
  int mode = 0;
  std::vector<double> eigenvalues;
};

struct BandEntry {
  int mode = 0;
  int index = 0;
  double value = 0.0;
};

struct SpectrumReport {
  std::vector<ModeSpectrum> modes;
  std::vector<BandEntry> band;  // eigenvalue-one band
  double band_tol = 0.0;
  double band_width = 0.0;  // max |value - 1| over the band
  double lambda = std::numeric_limits<double>::quiet_NaN();
  int lambda_mode = 0;
  int lambda_index = 0;
  double min_eigenvalue = 0.0;
  double smallest_nonzero = 0.0;
  double mu = std::numeric_limits<double>::quiet_NaN();
  double mu_tilde = std::numeric_limits<double>::quiet_NaN();
  int kernel_dim = 0;        // vector fields, weight dv
  int kernel_dim_tilde = 0;  // vector fields, weight e^{-u} dv
};

/// Merged function spectrum over |m| <= m_max (clamped to what the backend
/// supports). Throws kBand when the eigenvalue-one band does not have
/// multiplicity dim h0.
SpectrumReport function_spectrum(const MetricState& state, const Field& u, int m_max, int k_per_mode = 12);

struct VectorFieldSpectrum {
  int kernel_dim = 0;
  double smallest_positive = std::numeric_limits<double>::quiet_NaN();
  int mode_of_min = 0;
  std::vector<ModeSpectrum> modes;
};

/// Spectrum of d-bar^* d-bar on T^{1,0} with weight dv (mu) or e^{-u} dv
/// (mu tilde). Throws kMismatch when the kernel is not dim h0.
VectorFieldSpectrum vector_field_spectrum(const MetricState& state, const Field& u, Weight weight, int m_max);

/// function_spectrum plus mu and mu tilde.
SpectrumReport spectrum_report(const MetricState& state, const Field& u, int m_max, int k_per_mode = 12);

/// (1,0) vector field as Fourier components of its d_w coefficient.
struct VectorField {
  std::vector<Field> components;
};

/// Complex gradient grad f = g^{ij} d_j f d_i.
VectorField gradient_field(const MetricState& state, const Field& f);

/// <V, W> = (1/V) int g(V, conj W) weight dv.
std::complex<double> inner_product(const MetricState& state, const VectorField& v, const VectorField& w,
                                   Weight weight, const Field* u = nullptr, const Field* theta = nullptr);

/// Holomorphic basis field of the backend as a VectorField.
VectorField basis_field(const MetricState& state, int index);

struct Projection {
  VectorField projection;
  VectorField residual;
  std::vector<std::complex<double>> coefficients;
  double cross = 0.0;  // |<projection, residual>|
};

/// Orthogonal projection onto h0 under the chosen weighted inner product.
Projection project_h0(const VectorField& v, const MetricState& state, Weight weight, const Field* u = nullptr,
                      const Field* theta = nullptr);

struct Decomposition {
  Vec band;    // component in the eigenvalue-one band
  Vec higher;  // remainder (eigenvalues > 1)
  double reconstruction_error = 0.0;
};

/// Splits a mode-0 function with zero e^{-u} mean into its eigenvalue-one
/// band part and the rest, orthogonally in L^2(e^{-u} dv).
Decomposition decompose_against_eigenbasis(const MetricState& state, const Field& u, const Vec& centered);

/// Convenience: decomposes u - a.
Decomposition decompose_against_eigenbasis(const Field& u, const MetricState& state);

struct BochnerCheck {
  double lhs = 0.0;  // (lambda - 1) int |grad psi|^2 e^{-u}
  double rhs = 0.0;  // int |d-bar grad psi|^2 e^{-u}
  double relative_residual = 0.0;
};

/// Checks the Bochner identity on the lambda-eigenfunction.
BochnerCheck bochner_check(const MetricState& state, const Field& u, const SpectrumReport& report);

}  // namespace rlab

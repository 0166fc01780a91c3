#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ricci_lab/geometry.hpp"

namespace rlab {

struct SupNorms {
  double u = 0.0;
  double grad_u = 0.0;
  double lap_u = 0.0;
  double w = 0.0;
  double grad_w = 0.0;
  double lap_w = 0.0;
  double grad_theta = 0.0;
  double lap_theta = 0.0;
};

/// Ricci potential u, optional holomorphy potential theta and w = u + theta,
/// all normalized: (1/V) int e^{-u} dv = 1, (1/V) int e^{theta} dv = 1.
struct PotentialSet {
  Field u;
  std::optional<Field> theta;
  std::optional<Field> w;
  double x_strength = 0.0;
  double a = 0.0;
  std::optional<double> a_x;
  double osc_u = 0.0;
  double osc_w = 0.0;
  SupNorms sup;
};

struct DiagnosticsRecord {
  double t = 0.0;
  double Y = 0.0;
  double Z = 0.0;
  double a = 0.0;
  std::optional<double> a_x;
  double Y_w = 0.0;  // w-analogues; equal to Y, Z when theta is absent
  double Z_w = 0.0;
  double osc_u = 0.0;
  double osc_w = 0.0;
  double sup_u_minus_a = 0.0;
  double sup_w_minus_ax = 0.0;
  SupNorms sup;
  double poincare_ratio = 0.0;
  bool ratio_degenerate = false;
  double poincare_ratio_w = 0.0;
  bool ratio_w_degenerate = false;
};

/// Solves Delta f = rhs with int f dv = 0 (bordered system: the constant
/// kernel is removed by a constraint row). Throws kSolvability when rhs has
/// nonzero mean, kSingular when the bordered matrix is numerically singular.
Vec solve_weighted_poisson(const MetricState& state, const Vec& rhs, double* residual = nullptr);

/// Shifts u by the unique constant with (1/V) int e^{-u} dv = 1.
Vec normalize_ricci_potential(const MetricState& state, const Vec& u);

/// Delta u = n - s, normalized.
Field solve_ricci_potential(const MetricState& state, double* residual = nullptr);

/// theta with d-bar theta = g(X, .) for X = c * (fiber generator), normalized
/// by (1/V) int e^{theta} dv = 1.
Field solve_holomorphy_potential(const MetricState& state, double c);

struct Averages {
  double a = 0.0;
  std::optional<double> a_x;
};

/// a = (1/V) int u e^{-u} dv, a_X = (1/V) int (u + theta) e^{-u} dv. Rejects
/// inputs that are not normalized.
Averages compute_averages(const MetricState& state, const Field& u, const Field* theta = nullptr);

PotentialSet compute_potentials(const MetricState& state, double x_strength);

DiagnosticsRecord diagnostics(const MetricState& state, const PotentialSet& pots);

struct PerelmanReport {
  double max_u = 0.0;
  double max_grad_u = 0.0;
  double max_lap_u = 0.0;
  double max_w = 0.0;
  double max_grad_w = 0.0;
  double max_lap_w = 0.0;
  double max_grad_theta = 0.0;
  double max_lap_theta = 0.0;
  bool bounded = true;            // all maxima <= threshold
  std::optional<std::size_t> nonfinite_at;  // first record with a NaN/inf norm
  bool tail_nonincreasing = true;  // max(sup_u, sup_grad_u, sup_lap_u) over the trailing half
  bool pass() const { return bounded && !nonfinite_at; }
};

PerelmanReport perelman_monitor(std::span<const DiagnosticsRecord> records, double threshold);

}  // namespace rlab

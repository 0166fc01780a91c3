#pragma once

#include <complex>
#include <limits>
#include <optional>

#include "ricci_lab/geometry.hpp"
#include "ricci_lab/potentials.hpp"
#include "ricci_lab/spectral.hpp"

namespace rlab {

/// F(X) = int X(u) dv for the basis field X_index. Charged fields (mode != 0)
/// integrate to zero against the invariant u.
std::complex<double> futaki(const MetricState& state, const Field& u, int x_index);

/// F_X(Y) = int Y(w) e^theta dv with w = u + theta.
std::complex<double> modified_futaki(const MetricState& state, const Field& u, const Field& theta, int y_index);

/// F_{cX}(X) for the symmetric generator X (basis index 0).
double soliton_function(const MetricState& state, const Field& u, double c);

struct SolitonCoefficient {
  double c = 0.0;
  double residual = 0.0;  // F_{cX}(X) at c
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  bool monotone = false;  // sampled on the initial bracket
};

/// Bisection on c -> F_{cX}(X) to |F| <= tol. Throws kBracket when the
/// interval holds no sign change.
SolitonCoefficient soliton_coefficient(const MetricState& state, double lo = -2.0, double hi = 2.0,
                                       double tol = 1e-10);

/// Fixed point of the modified flow with strength c: the round metric on CP1
/// (c = 0 only), the closed-form momentum profile on F1.
MetricState soliton_state(const GridPtr& grid, double c);

/// delta / (1 + e^osc + delta e^osc). Throws kInvalidArgument on negative input.
double delta_prime(double delta, double osc);

struct ConditionTolerances {
  double poincare = 1e-6;  // nonzero eigenvalues >= 1 - tol
  double ratio = 1e-6;
  double relative = 1e-6;  // eigenvalue comparisons, scaled by the larger side
  double projection = 1e-10;
  double averages = 1e-12;
  double bochner = 1e-6;
  double futaki = 1e-8;  // times V
  double band_gradient = 1e-10;
};

struct ConditionReport {
  double t = 0.0;
  double strict_poincare_ratio = std::numeric_limits<double>::quiet_NaN();
  double delta_measured = std::numeric_limits<double>::quiet_NaN();  // ratio - 1
  bool ratio_degenerate = false;
  double strict_poincare_ratio_w = std::numeric_limits<double>::quiet_NaN();
  bool ratio_w_degenerate = false;
  double lambda = 0.0;
  double mu = 0.0;
  double mu_tilde = 0.0;
  double osc_u = 0.0;
  double osc_w = 0.0;
  double delta_prime = 0.0;    // from (lambda - 1, osc u)
  double delta_prime_w = 0.0;  // from (lambda - 1, osc w)

  // Every margin is >= 0 when the inequality holds exactly.
  double margin_poincare = 0.0;       // smallest nonzero eigenvalue - 1
  double margin_ratio = 0.0;          // ratio - (1 + delta')
  double margin_lambda_bound = 0.0;   // lambda - (1 + e^{-osc u} mu)
  double margin_sandwich = 0.0;       // min(mu~ - e^{-osc} mu, e^{osc} mu - mu~)
  double margin_projection = 0.0;     // <V,V>_0 - <pi_u grad u, pi_u grad u>_0
  double margin_averages = 0.0;       // min(-a, -a_X, a - a(0), a_X - a_X(0))
  double margin_ratio_w = 0.0;        // ratio_w - (1 + delta'_w)
  double margin_band_gradient = 0.0;  // e^{osc w} |grad w_+|^2 - |grad w_0|^2 in d rho
  double bochner_residual = 0.0;
  double pi0_grad_u = 0.0;  // |pi_0(grad u)|_0

  double futaki = 0.0;           // F(X_0)
  double modified_futaki = 0.0;  // F_X(X_0); equals futaki when theta is absent

  // Hypotheses of the ratio estimates.
  bool futaki_vanishes = true;
  bool modified_futaki_vanishes = true;

  bool pass_poincare = true;
  bool pass_ratio = true;  // true (not applicable) when F does not vanish
  bool pass_lambda_bound = true;
  bool pass_sandwich = true;
  bool pass_projection = true;  // not applicable unless F vanishes
  bool pass_averages = true;
  bool pass_ratio_w = true;         // not applicable unless F_X vanishes
  bool pass_band_gradient = true;   // likewise
  bool pass_bochner = true;

  /// All inequality flags (the vanishing hypotheses are reported separately).
  bool inequalities_pass() const;
};

/// Averages at t = 0, for the monotonicity side of the average bounds.
struct InitialAverages {
  double a = 0.0;
  std::optional<double> a_x;
};

/// Evaluates every closed-form condition at one state. `spectrum` must come
/// from spectrum_report at the same state. Throws kInvalidArgument when
/// the spectrum lacks lambda or mu.
ConditionReport check_conditions(const MetricState& state, const PotentialSet& pots, const SpectrumReport& spectrum,
                                 std::optional<InitialAverages> initial = std::nullopt,
                                 const ConditionTolerances& tol = {});

}  // namespace rlab

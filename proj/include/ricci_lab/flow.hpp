#pragma once

// Kähler-Ricci flow and its X-modified version in potential form:
//   CP1:  d phi/dt = u - a        (or w - a_X)
//   F1:   d psi/dt = -(u - a)/2   (symplectic potential; stored as psi'')
// a / a_X are frozen at the start of each step.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ricci_lab/error.hpp"
#include "ricci_lab/geometry.hpp"
#include "ricci_lab/potentials.hpp"
#include "ricci_lab/spectral.hpp"

namespace rlab {

enum class StepperKind { kSemiImplicit, kExplicitRk4 };

struct FlowConfig {
  Backend backend = Backend::cp1();
  int n = 64;
  MetricDescriptor initial = MetricDescriptor::canonical();
  std::optional<Vec> initial_potential;  // overrides `initial` when set
  double x_strength = 0.0;               // c; 0 => plain KRF
  double t_end = 20.0;
  double dt = 0.01;
  StepperKind stepper = StepperKind::kSemiImplicit;
  double cfl_safety = 0.5;
  int sample_stride = 10;
  int spectrum_stride = 0;  // every k-th sample gets a SpectrumReport; 0 = none
  int m_max = 2;

  void validate() const;
};

struct FlowRecord {
  double t = 0.0;
  std::uint64_t hash = 0;
  Vec phi;
  DiagnosticsRecord diag;
  std::optional<SpectrumReport> spectrum;
};

enum class FlowStatus { kCompleted, kAborted };

struct FlowTrace {
  FlowConfig config;
  GridPtr grid;
  std::vector<FlowRecord> records;
  FlowStatus status = FlowStatus::kCompleted;
  std::string message;
  long steps = 0;
  double dt_used = 0.0;

  MetricState state(std::size_t i) const;
};

/// Thrown by run_flow when a step fails; carries the partial trace, whose
/// last record is the last good state.
class FlowAborted : public Error {
 public:
  FlowAborted(ErrorCode code, const std::string& what, std::shared_ptr<FlowTrace> partial)
      : Error(code, what), partial_(std::move(partial)) {}
  const FlowTrace& partial() const { return *partial_; }

 private:
  std::shared_ptr<FlowTrace> partial_;
};

/// Right-hand side d(potential)/dt at `state` with a / a_X frozen from pots.
Vec flow_velocity(const MetricState& state, double a_frozen, double c);

/// Linearization of flow_velocity used by the W-method.
Mat flow_jacobian(const MetricState& state, double c);

/// One step. Throws kPositivity when an intermediate or final state is not a
/// metric.
MetricState step(const MetricState& state, const PotentialSet& pots, double c, double dt,
                 StepperKind stepper = StepperKind::kSemiImplicit);

/// Stable RK4 step from the spectral radius of the flow Jacobian.
double explicit_step_size(const MetricState& state, double c, double cfl_safety);

FlowTrace run_flow(const FlowConfig& config);

enum class DecayQuantity { kY, kSupUMinusA, kZ };

struct DecayFit {
  double gamma = 0.0;
  double B = 0.0;
  double r2 = 0.0;
  int samples = 0;
  double t_first = 0.0;
  double t_last = 0.0;
};

/// Least squares log q = log B - gamma t over the trailing half of the
/// samples preceding the first one below max(floor, 100 * min q). Throws kNoDecay with fewer
/// than 10 usable samples or gamma <= 0.
DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> q, double floor);
DecayFit fit_decay_rate(const FlowTrace& trace, DecayQuantity quantity);

struct ScalingFit {
  double A = 0.0;
  double max_ratio_tail = 0.0;  // sup |u - a| / Y^e over the second half
  int samples = 0;
  bool holds = false;
};

/// sup |u - a| <= A Y^exponent: A fitted on the first half of the usable
/// samples, checked on the second half.
ScalingFit fit_sup_scaling(const FlowTrace& trace, double exponent, double floor = 1e-22);

struct RateCheck {
  double max_deviation = 0.0;
  double max_step = 0.0;
  double max_excess = 0.0;  // max over intervals of deviation - |Z jump| - 1e-8
  bool consistent = true;   // max_excess <= 0
};

/// Finite-difference da/dt between samples against the trapezoid mean of Z;
/// each interval may deviate by the variation of Z across it (first-order
/// consistency) plus 1e-8.
RateCheck check_average_rate(const FlowTrace& trace);

/// Sample-wise Richardson combination (2^p fine - coarse) / (2^p - 1) of two
/// traces run with dt and dt/2, for separating time from space error.
FlowTrace richardson_in_time(const FlowTrace& coarse, const FlowTrace& fine, int order = 2);

struct ReparamResult {
  double max_deviation = 0.0;
  int sign = 1;       // orientation of the real flow of X that matched
  std::string group;  // description for reports
};

/// Pulls back each KRF sample by the flow of Re(c X) at the sample time and
/// compares conformal profiles with the MKRF sample.
ReparamResult reparametrize_compare(const FlowTrace& krf, const FlowTrace& mkrf, double c);

}  // namespace rlab

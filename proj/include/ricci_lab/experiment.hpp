#pragma once

// Config-driven runs: INI in, trace.csv / summary.json / curves.svg out.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ricci_lab/flow.hpp"
#include "ricci_lab/invariants.hpp"

namespace rlab {

struct CheckOptions {
  bool fixed_point = false;
  double fixed_point_tol = 1e-8;
  bool poincare_z = true;  // Z >= -tol V
  double z_tol = 1e-10;
  bool averages = true;  // a, a_X nondecreasing and within [a(0), upper]
  double averages_step_tol = 1e-10;
  double averages_upper = 1e-12;
  bool rate = false;
  bool convergence = false;
  double convergence_tol = 1e-6;
  bool decay = false;
  double r2_min = 0.99;
  bool scaling = false;
  bool conditions = true;
  double condition_tol = 1e-6;
  double bochner_tol = 1e-6;
  bool perelman = false;
  double perelman_threshold = 1e3;
  bool require_modified_futaki_vanishing = false;
  double futaki_tol = 1e-8;
};

struct SpectralOptions {
  int samples = 10;  // states that get a spectrum and a ConditionReport
  int m_max = 2;
  int k_per_mode = 12;
};

struct OutputOptions {
  std::string dir = "out";
  std::string name;  // defaults to the config file stem
  bool svg = false;
};

struct ExperimentConfig {
  FlowConfig flow;
  std::string initial = "canonical";  // canonical | perturbed | soliton
  bool soliton_strength = false;      // x_strength = soliton
  SpectralOptions spectral;
  CheckOptions checks;
  OutputOptions output;

  void validate() const;
};

struct ConfigOverrides {
  std::optional<int> grid_size;
  std::optional<double> t_end;
  std::optional<double> seed_perturbation;
  std::optional<std::string> backend;
};

/// Throws kConfig on syntax errors, unknown sections or keys, bad values.
ExperimentConfig parse_config(const std::string& text, const std::string& name = "config");
/// Throws kIo when unreadable.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides);

/// RICCI_LAB_OUT (when set) replaces output.dir as the root.
std::filesystem::path output_directory(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct SampledState {
  std::size_t record = 0;
  SpectrumReport spectrum;
  ConditionReport conditions;
};

struct ExperimentResult {
  ExperimentConfig config;
  FlowTrace trace;
  double x_strength = 0.0;
  std::vector<SampledState> samples;
  std::vector<double> futaki;  // per record
  std::vector<double> modified_futaki;
  std::optional<DecayFit> decay;
  std::optional<ScalingFit> scaling;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// Resolves the initial state and c (soliton keys) and the flow config.
FlowConfig resolve_flow(const ExperimentConfig& config, double* x_strength = nullptr);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Spectrum of the resolved initial state.
SpectrumReport initial_spectrum(const ExperimentConfig& config);

inline constexpr const char* kTraceHeader =
    "t,Y,Z,a,aX,osc_u,osc_w,sup_u,sup_grad_u,sup_lap_u,lambda,mu,mu_tilde,ratio,margin_33,margin_sandwich,futaki,"
    "mod_futaki";

std::string trace_csv(const ExperimentResult& result);
std::string summary_json(const ExperimentResult& result);
std::string curves_svg(const ExperimentResult& result);

/// Writes trace.csv, summary.json and (when enabled) curves.svg. Throws
/// kInvalidArgument on an empty trace, kIo when the directory is unwritable.
void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir);

struct TraceSummary {
  std::size_t rows = 0;
  bool t_monotone = true;
  double t_last = 0.0;
  double final_Y = 0.0;
  double min_Z = 0.0;
  double a_min = 0.0;
  double a_max = 0.0;
  std::optional<DecayFit> fit;
  std::string fit_error;
};

/// Reads a trace.csv back. Throws kIo / kConfig on unreadable or malformed input.
TraceSummary summarize_trace(const std::filesystem::path& csv);

}  // namespace rlab

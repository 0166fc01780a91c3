#include "ricci_lab/ricci_lab.h"

#include <cmath>
#include <exception>
#include <memory>
#include <string>

#include "ricci_lab/experiment.hpp"

struct rl_metric {
  rlab::MetricState state;
};

struct rl_spectrum {
  rlab::SpectrumReport report;
};

struct rl_experiment {
  rlab::ExperimentConfig config;
  std::string output_dir;
  std::unique_ptr<rlab::ExperimentResult> result;
};

namespace {

thread_local std::string g_last_error;

rl_status set_error(rl_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F>
rl_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return RL_OK;
  } catch (const rlab::Error& e) {
    return set_error(static_cast<rl_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(RL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(RL_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) rlab::fail(rlab::ErrorCode::kInvalidArgument, what);
}

}  // namespace

extern "C" {

const char* rl_last_error(void) { return g_last_error.c_str(); }

const char* rl_version(void) { return "0.1.0"; }

const char* rl_status_name(rl_status status) {
  switch (status) {
    case RL_OK: return "ok";
    case RL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RL_ERR_POSITIVITY: return "positivity";
    case RL_ERR_SOLVABILITY: return "solvability";
    case RL_ERR_SINGULAR: return "singular";
    case RL_ERR_BAND: return "band";
    case RL_ERR_BRACKET: return "bracket";
    case RL_ERR_NO_DECAY: return "no decay";
    case RL_ERR_NON_FINITE: return "non-finite";
    case RL_ERR_MISMATCH: return "mismatch";
    case RL_ERR_CONFIG: return "config";
    case RL_ERR_IO: return "io";
    case RL_ERR_UNSUPPORTED: return "unsupported";
    case RL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

rl_status rl_metric_create(const char* backend, int grid_size, double amplitude, int mode, rl_metric** out) {
  return guard([&] {
    require(backend && out, "rl_metric_create: null argument");
    *out = nullptr;
    const auto grid = rlab::make_grid(rlab::backend_from_name(backend), grid_size);
    const auto desc = amplitude == 0.0 ? rlab::MetricDescriptor::canonical()
                                       : rlab::MetricDescriptor::perturbed(amplitude, mode);
    *out = new rl_metric{rlab::initial_metric(grid, desc)};
  });
}

void rl_metric_destroy(rl_metric* metric) { delete metric; }

rl_status rl_metric_volume(const rl_metric* metric, double* out) {
  return guard([&] {
    require(metric && out, "rl_metric_volume: null argument");
    *out = rlab::volume(metric->state);
  });
}

rl_status rl_metric_futaki(const rl_metric* metric, double c, double* futaki, double* modified) {
  return guard([&] {
    require(metric, "rl_metric_futaki: null metric");
    const rlab::Field u = rlab::solve_ricci_potential(metric->state);
    if (futaki) *futaki = rlab::futaki(metric->state, u, 0).real();
    if (modified) *modified = rlab::soliton_function(metric->state, u, c);
  });
}

rl_status rl_metric_spectrum(const rl_metric* metric, int m_max, rl_spectrum** out) {
  return guard([&] {
    require(metric && out, "rl_metric_spectrum: null argument");
    *out = nullptr;
    const rlab::Field u = rlab::solve_ricci_potential(metric->state);
    *out = new rl_spectrum{rlab::spectrum_report(metric->state, u, m_max)};
  });
}

void rl_spectrum_destroy(rl_spectrum* spectrum) { delete spectrum; }

rl_status rl_spectrum_summary(const rl_spectrum* s, double* lambda, double* mu, double* mu_tilde,
                              int* band_multiplicity, int* kernel_dim) {
  return guard([&] {
    require(s, "rl_spectrum_summary: null spectrum");
    if (lambda) *lambda = s->report.lambda;
    if (mu) *mu = s->report.mu;
    if (mu_tilde) *mu_tilde = s->report.mu_tilde;
    if (band_multiplicity) *band_multiplicity = static_cast<int>(s->report.band.size());
    if (kernel_dim) *kernel_dim = s->report.kernel_dim;
  });
}

size_t rl_spectrum_mode_count(const rl_spectrum* s) { return s ? s->report.modes.size() : 0; }

rl_status rl_spectrum_mode(const rl_spectrum* s, size_t i, int* mode, size_t* count) {
  return guard([&] {
    require(s && i < s->report.modes.size(), "rl_spectrum_mode: index out of range");
    if (mode) *mode = s->report.modes[i].mode;
    if (count) *count = s->report.modes[i].eigenvalues.size();
  });
}

rl_status rl_spectrum_eigenvalue(const rl_spectrum* s, size_t i, size_t k, double* value) {
  return guard([&] {
    require(s && value && i < s->report.modes.size() && k < s->report.modes[i].eigenvalues.size(),
            "rl_spectrum_eigenvalue: index out of range");
    *value = s->report.modes[i].eigenvalues[k];
  });
}

rl_status rl_soliton_coefficient(const char* backend, int grid_size, double lo, double hi, double* c) {
  return guard([&] {
    require(backend && c, "rl_soliton_coefficient: null argument");
    const auto grid = rlab::make_grid(rlab::backend_from_name(backend), grid_size);
    *c = rlab::soliton_coefficient(rlab::initial_metric(grid, rlab::MetricDescriptor::canonical()), lo, hi).c;
  });
}

rl_status rl_delta_prime(double delta, double osc, double* out) {
  return guard([&] {
    require(out, "rl_delta_prime: null output");
    *out = rlab::delta_prime(delta, osc);
  });
}

void rl_overrides_init(rl_overrides* o) {
  if (!o) return;
  o->grid_size = 0;
  o->t_end = NAN;
  o->seed_perturbation = NAN;
  o->backend = nullptr;
}

rl_status rl_experiment_load(const char* config_path, const rl_overrides* o, rl_experiment** out) {
  return guard([&] {
    require(config_path && out, "rl_experiment_load: null argument");
    *out = nullptr;
    auto e = std::make_unique<rl_experiment>();
    e->config = rlab::load_config(config_path);
    if (o) {
      rlab::ConfigOverrides ov;
      if (o->grid_size > 0) ov.grid_size = o->grid_size;
      if (!std::isnan(o->t_end)) ov.t_end = o->t_end;
      if (!std::isnan(o->seed_perturbation)) ov.seed_perturbation = o->seed_perturbation;
      if (o->backend) ov.backend = o->backend;
      rlab::apply_overrides(e->config, ov);
    }
    e->output_dir = rlab::output_directory(e->config).string();
    *out = e.release();
  });
}

void rl_experiment_destroy(rl_experiment* e) { delete e; }

rl_status rl_experiment_run(rl_experiment* e) {
  return guard([&] {
    require(e, "rl_experiment_run: null experiment");
    e->result = std::make_unique<rlab::ExperimentResult>(rlab::run_experiment(e->config));
  });
}

rl_status rl_experiment_write(const rl_experiment* e, const char* out_dir) {
  return guard([&] {
    require(e, "rl_experiment_write: null experiment");
    require(e->result != nullptr, "rl_experiment_write: experiment has not run");
    rlab::emit_report(*e->result, out_dir ? std::filesystem::path(out_dir) : std::filesystem::path(e->output_dir));
  });
}

const char* rl_experiment_output_dir(const rl_experiment* e) { return e ? e->output_dir.c_str() : ""; }

const char* rl_experiment_name(const rl_experiment* e) { return e ? e->config.output.name.c_str() : ""; }

rl_status rl_experiment_initial_spectrum(const rl_experiment* e, rl_spectrum** out) {
  return guard([&] {
    require(e && out, "rl_experiment_initial_spectrum: null argument");
    *out = nullptr;
    *out = new rl_spectrum{rlab::initial_spectrum(e->config)};
  });
}

size_t rl_experiment_check_count(const rl_experiment* e) {
  return e && e->result ? e->result->checks.size() : 0;
}

rl_status rl_experiment_check(const rl_experiment* e, size_t i, const char** name, int* passed, const char** detail) {
  return guard([&] {
    require(e && e->result && i < e->result->checks.size(), "rl_experiment_check: index out of range");
    const auto& c = e->result->checks[i];
    if (name) *name = c.name.c_str();
    if (passed) *passed = c.passed ? 1 : 0;
    if (detail) *detail = c.detail.c_str();
  });
}

int rl_experiment_passed(const rl_experiment* e) { return e && e->result && e->result->passed() ? 1 : 0; }

rl_status rl_trace_summarize(const char* csv_path, rl_trace_summary* out) {
  return guard([&] {
    require(csv_path && out, "rl_trace_summarize: null argument");
    const rlab::TraceSummary s = rlab::summarize_trace(csv_path);
    *out = rl_trace_summary{};
    out->rows = s.rows;
    out->t_monotone = s.t_monotone ? 1 : 0;
    out->t_last = s.t_last;
    out->final_Y = s.final_Y;
    out->min_Z = s.min_Z;
    out->a_min = s.a_min;
    out->a_max = s.a_max;
    out->has_fit = s.fit ? 1 : 0;
    if (s.fit) {
      out->gamma = s.fit->gamma;
      out->B = s.fit->B;
      out->r2 = s.fit->r2;
    }
  });
}

}  // extern "C"

#ifndef RICCI_LAB_H
#define RICCI_LAB_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(RLAB_BUILDING_LIBRARY)
#    define RLAB_API __declspec(dllexport)
#  else
#    define RLAB_API __declspec(dllimport)
#  endif
#else
#  define RLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
  RL_OK = 0,
  RL_ERR_INVALID_ARGUMENT = 1,
  RL_ERR_POSITIVITY = 2,
  RL_ERR_SOLVABILITY = 3,
  RL_ERR_SINGULAR = 4,
  RL_ERR_BAND = 5,
  RL_ERR_BRACKET = 6,
  RL_ERR_NO_DECAY = 7,
  RL_ERR_NON_FINITE = 8,
  RL_ERR_MISMATCH = 9,
  RL_ERR_CONFIG = 10,
  RL_ERR_IO = 11,
  RL_ERR_UNSUPPORTED = 12,
  RL_ERR_INTERNAL = 99
} rl_status;

typedef struct rl_metric rl_metric;
typedef struct rl_spectrum rl_spectrum;
typedef struct rl_experiment rl_experiment;

/* Message of the last failure on the calling thread ("" if none). */
RLAB_API const char* rl_last_error(void);
RLAB_API const char* rl_version(void);
RLAB_API const char* rl_status_name(rl_status status);

/* Metrics. backend: "CP1" or "F1". amplitude 0 gives the canonical metric. */
RLAB_API rl_status rl_metric_create(const char* backend, int grid_size, double amplitude, int mode, rl_metric** out);
RLAB_API void rl_metric_destroy(rl_metric* metric);
RLAB_API rl_status rl_metric_volume(const rl_metric* metric, double* out);
/* Futaki invariant of the symmetric field and F_{cX}(X). */
RLAB_API rl_status rl_metric_futaki(const rl_metric* metric, double c, double* futaki, double* modified);
RLAB_API rl_status rl_metric_spectrum(const rl_metric* metric, int m_max, rl_spectrum** out);

/* Spectra. */
RLAB_API void rl_spectrum_destroy(rl_spectrum* spectrum);
RLAB_API rl_status rl_spectrum_summary(const rl_spectrum* spectrum, double* lambda, double* mu, double* mu_tilde,
                                       int* band_multiplicity, int* kernel_dim);
RLAB_API size_t rl_spectrum_mode_count(const rl_spectrum* spectrum);
/* Mode number and eigenvalue count of the i-th mode block. */
RLAB_API rl_status rl_spectrum_mode(const rl_spectrum* spectrum, size_t i, int* mode, size_t* count);
RLAB_API rl_status rl_spectrum_eigenvalue(const rl_spectrum* spectrum, size_t i, size_t k, double* value);

RLAB_API rl_status rl_soliton_coefficient(const char* backend, int grid_size, double lo, double hi, double* c);
RLAB_API rl_status rl_delta_prime(double delta, double osc, double* out);

/* Experiments. Overrides: grid_size <= 0, NaN doubles and NULL strings mean
 * "keep the config value". */
typedef struct rl_overrides {
  int grid_size;
  double t_end;
  double seed_perturbation;
  const char* backend;
} rl_overrides;

RLAB_API void rl_overrides_init(rl_overrides* overrides);
RLAB_API rl_status rl_experiment_load(const char* config_path, const rl_overrides* overrides, rl_experiment** out);
RLAB_API void rl_experiment_destroy(rl_experiment* experiment);
/* Runs flow, spectra and checks. */
RLAB_API rl_status rl_experiment_run(rl_experiment* experiment);
/* Writes trace.csv, summary.json (and curves.svg). out_dir NULL: configured
 * directory, with RICCI_LAB_OUT as root when set. */
RLAB_API rl_status rl_experiment_write(const rl_experiment* experiment, const char* out_dir);
RLAB_API const char* rl_experiment_output_dir(const rl_experiment* experiment);
RLAB_API const char* rl_experiment_name(const rl_experiment* experiment);
/* Spectrum of the initial state (does not need rl_experiment_run). */
RLAB_API rl_status rl_experiment_initial_spectrum(const rl_experiment* experiment, rl_spectrum** out);
RLAB_API size_t rl_experiment_check_count(const rl_experiment* experiment);
RLAB_API rl_status rl_experiment_check(const rl_experiment* experiment, size_t i, const char** name, int* passed,
                                       const char** detail);
/* 1 when every enabled check passed, 0 otherwise (or before a run). */
RLAB_API int rl_experiment_passed(const rl_experiment* experiment);

/* Reading a trace.csv back. */
typedef struct rl_trace_summary {
  size_t rows;
  int t_monotone;
  double t_last;
  double final_Y;
  double min_Z;
  double a_min;
  double a_max;
  int has_fit;
  double gamma;
  double B;
  double r2;
} rl_trace_summary;

RLAB_API rl_status rl_trace_summarize(const char* csv_path, rl_trace_summary* out);

#ifdef __cplusplus
}
#endif

#endif

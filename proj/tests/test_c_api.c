/* Exercises the C API from C, and the CLI exit codes. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/wait.h>

#include "ricci_lab/ricci_lab.h"

static int failures = 0;

#define EXPECT(cond)                                                 \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: FAILED %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                    \
    }                                                                \
  } while (0)

static int run(const char* args) {
  char cmd[2048];
  snprintf(cmd, sizeof cmd, "\"%s\" %s >/dev/null 2>&1", RLAB_CLI, args);
  const int rc = system(cmd);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

static void metric_and_spectrum(void) {
  rl_metric* m = NULL;
  EXPECT(rl_metric_create("CP1", 48, 0.0, 2, &m) == RL_OK);
  double v = 0.0;
  EXPECT(rl_metric_volume(m, &v) == RL_OK);
  EXPECT(fabs(v - 4.0 * M_PI) <= 1e-12 * v);

  double f = 1.0, fx = 0.0;
  EXPECT(rl_metric_futaki(m, 0.5, &f, &fx) == RL_OK);
  EXPECT(fabs(f) <= 1e-12);
  EXPECT(fabs(fx - 2.06029936052927866663716158699) <= 1e-9);

  rl_spectrum* s = NULL;
  EXPECT(rl_metric_spectrum(m, 2, &s) == RL_OK);
  double lambda = 0.0, mu = 0.0, mu_tilde = 0.0;
  int band = 0, kernel = 0;
  EXPECT(rl_spectrum_summary(s, &lambda, &mu, &mu_tilde, &band, &kernel) == RL_OK);
  EXPECT(fabs(lambda - 3.0) <= 1e-8);
  EXPECT(band == 3);
  EXPECT(kernel == 3);
  EXPECT(rl_spectrum_mode_count(s) == 5);
  double ev = 0.0;
  EXPECT(rl_spectrum_eigenvalue(s, 99, 0, &ev) == RL_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(rl_last_error()) > 0);
  rl_spectrum_destroy(s);
  rl_metric_destroy(m);

  EXPECT(rl_metric_create("CP1", 48, 10.0, 2, &m) == RL_ERR_POSITIVITY);
  EXPECT(m == NULL);
  EXPECT(rl_metric_create("nowhere", 48, 0.0, 2, &m) == RL_ERR_INVALID_ARGUMENT);
  EXPECT(rl_metric_create(NULL, 48, 0.0, 2, &m) == RL_ERR_INVALID_ARGUMENT);
}

static void scalars(void) {
  double d = 0.0;
  EXPECT(rl_delta_prime(1.0, 0.0, &d) == RL_OK);
  EXPECT(fabs(d - 1.0 / 3.0) <= 1e-15);
  EXPECT(rl_delta_prime(-1.0, 0.0, &d) == RL_ERR_INVALID_ARGUMENT);

  double c = 0.0;
  EXPECT(rl_soliton_coefficient("F1", 32, -2.0, 2.0, &c) == RL_OK);
  EXPECT(fabs(c + 0.527619519896962824848607) <= 1e-6);
  EXPECT(rl_soliton_coefficient("F1", 32, 0.0, 2.0, &c) == RL_ERR_BRACKET);

  EXPECT(strcmp(rl_status_name(RL_ERR_CONFIG), "config") == 0);
  EXPECT(strlen(rl_version()) > 0);
}

static void experiment(void) {
  rl_overrides o;
  rl_overrides_init(&o);
  o.grid_size = 32;
  o.t_end = 1.0;
  rl_experiment* e = NULL;
  EXPECT(rl_experiment_load(RLAB_CONFIGS "/perturbed_cp1.ini", &o, &e) == RL_OK);
  EXPECT(rl_experiment_check_count(e) == 0);
  EXPECT(rl_experiment_write(e, "/tmp/rlab_c_api") == RL_ERR_INVALID_ARGUMENT);
  EXPECT(rl_experiment_run(e) == RL_OK);
  EXPECT(rl_experiment_check_count(e) > 0);
  const char* name = NULL;
  const char* detail = NULL;
  int ok = -1;
  EXPECT(rl_experiment_check(e, 0, &name, &ok, &detail) == RL_OK);
  EXPECT(strcmp(name, "flow_completed") == 0);
  EXPECT(ok == 1);
  EXPECT(rl_experiment_write(e, "/tmp/rlab_c_api") == RL_OK);
  rl_experiment_destroy(e);

  rl_trace_summary s;
  EXPECT(rl_trace_summarize("/tmp/rlab_c_api/trace.csv", &s) == RL_OK);
  EXPECT(s.rows > 0);
  EXPECT(s.t_monotone == 1);
  EXPECT(fabs(s.t_last - 1.0) <= 1e-12);
  EXPECT(rl_trace_summarize("/tmp/rlab_c_api/none.csv", &s) == RL_ERR_IO);

  EXPECT(rl_experiment_load("/nonexistent.ini", NULL, &e) == RL_ERR_IO);
  EXPECT(e == NULL);
}

static void cli(void) {
  EXPECT(run("check --out /tmp/rlab_cli " RLAB_CONFIGS "/round_cp1.ini --grid-size 48 --t-end 1") == 0);
  EXPECT(run("check --out /tmp/rlab_cli " RLAB_CONFIGS "/negative_modified_cp1.ini") == 1);
  EXPECT(run("report /tmp/rlab_cli/round_cp1/trace.csv") == 0);
  EXPECT(run("report /tmp/rlab_cli/missing.csv") == 2);
  EXPECT(run("spectrum " RLAB_CONFIGS "/round_cp1.ini --grid-size 32") == 0);
  EXPECT(run("flow --backend CP9 " RLAB_CONFIGS "/round_cp1.ini") == 2);
  EXPECT(run("frobnicate") == 2);
}

int main(void) {
  metric_and_spectrum();
  scalars();
  experiment();
  cli();
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("c api: all checks passed\n");
  return 0;
}

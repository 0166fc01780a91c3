#include <atomic>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ricci_lab/ricci_lab.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitError = 2;

struct Options {
  std::vector<std::string> configs;
  std::string trace;
  std::string out;
  int grid_size = 0;
  double t_end = NAN;
  double seed_perturbation = NAN;
  std::string backend;
  int jobs = 1;
  int m_max = -1;
};

struct Outcome {
  int code = kExitError;
  std::string text;
};

rl_overrides overrides(const Options& o) {
  rl_overrides ov;
  rl_overrides_init(&ov);
  ov.grid_size = o.grid_size;
  ov.t_end = o.t_end;
  ov.seed_perturbation = o.seed_perturbation;
  ov.backend = o.backend.empty() ? nullptr : o.backend.c_str();
  return ov;
}

std::string error_line(const std::string& what, rl_status s) {
  return what + ": " + rl_status_name(s) + " error: " + rl_last_error() + "\n";
}

Outcome run_one(const Options& o, const std::string& path, bool verbose) {
  Outcome out;
  const rl_overrides ov = overrides(o);
  rl_experiment* e = nullptr;
  rl_status s = rl_experiment_load(path.c_str(), &ov, &e);
  if (s != RL_OK) {
    out.text = error_line(path, s);
    return out;
  }
  s = rl_experiment_run(e);
  if (s == RL_OK) s = rl_experiment_write(e, o.out.empty() ? nullptr : (o.out + "/" + rl_experiment_name(e)).c_str());
  if (s != RL_OK) {
    out.text = error_line(path, s);
    rl_experiment_destroy(e);
    return out;
  }
  const bool passed = rl_experiment_passed(e) != 0;
  const std::size_t n = rl_experiment_check_count(e);
  for (std::size_t i = 0; i < n; ++i) {
    const char* name = nullptr;
    const char* detail = nullptr;
    int ok = 0;
    rl_experiment_check(e, i, &name, &ok, &detail);
    if (verbose || !ok) out.text += std::string(ok ? "  PASS " : "  FAIL ") + name + "  " + detail + "\n";
  }
  const std::string dir = o.out.empty() ? rl_experiment_output_dir(e) : o.out + "/" + rl_experiment_name(e);
  out.text = std::string(rl_experiment_name(e)) + ": " + (passed ? "PASS" : "FAIL") + "  -> " + dir + "\n" + out.text;
  out.code = passed ? kExitPass : kExitFail;
  rl_experiment_destroy(e);
  return out;
}

int run_many(const Options& o, bool verbose) {
  std::vector<Outcome> results(o.configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) results[i] = run_one(o, o.configs[i], verbose);
  };
  const int k = std::max(1, std::min<int>(o.jobs, static_cast<int>(o.configs.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < k; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  int code = kExitPass;
  for (const auto& r : results) {
    std::fputs(r.text.c_str(), r.code == kExitError ? stderr : stdout);
    code = std::max(code, r.code);
  }
  return code;
}

int spectrum(const Options& o) {
  const rl_overrides ov = overrides(o);
  rl_experiment* e = nullptr;
  rl_status s = rl_experiment_load(o.configs.front().c_str(), &ov, &e);
  if (s != RL_OK) {
    std::fputs(error_line(o.configs.front(), s).c_str(), stderr);
    return kExitError;
  }
  rl_spectrum* sp = nullptr;
  s = rl_experiment_initial_spectrum(e, &sp);
  rl_experiment_destroy(e);
  if (s != RL_OK) {
    std::fputs(error_line(o.configs.front(), s).c_str(), stderr);
    return kExitError;
  }
  double lambda = 0, mu = 0, mu_tilde = 0;
  int band = 0, kernel = 0;
  rl_spectrum_summary(sp, &lambda, &mu, &mu_tilde, &band, &kernel);
  for (std::size_t i = 0; i < rl_spectrum_mode_count(sp); ++i) {
    int mode = 0;
    std::size_t count = 0;
    rl_spectrum_mode(sp, i, &mode, &count);
    std::printf("m = %+d:", mode);
    for (std::size_t k = 0; k < std::min<std::size_t>(count, 6); ++k) {
      double v = 0;
      rl_spectrum_eigenvalue(sp, i, k, &v);
      std::printf(" %.10g", v);
    }
    std::printf("\n");
  }
  std::printf("band multiplicity %d\nlambda   %.12g\nmu       %.12g\nmu_tilde %.12g\nkernel   %d\n", band, lambda, mu,
              mu_tilde, kernel);
  rl_spectrum_destroy(sp);
  return kExitPass;
}

int report(const Options& o) {
  rl_trace_summary s;
  const rl_status st = rl_trace_summarize(o.trace.c_str(), &s);
  if (st != RL_OK) {
    std::fputs(error_line(o.trace, st).c_str(), stderr);
    return kExitError;
  }
  std::printf("rows      %zu (t up to %.6g, %s)\n", s.rows, s.t_last, s.t_monotone ? "monotone" : "NOT monotone");
  std::printf("final Y   %.6g\nmin Z     %.6g\na range   [%.6g, %.6g]\n", s.final_Y, s.min_Z, s.a_min, s.a_max);
  if (s.has_fit)
    std::printf("decay     gamma = %.6g, B = %.6g, r2 = %.6f\n", s.gamma, s.B, s.r2);
  else
    std::printf("decay     no fit\n");
  return s.t_monotone ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kähler-Ricci flow experiments on symmetric surfaces"};
  app.require_subcommand(1);
  Options o;

  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--grid-size", o.grid_size, "Override geometry.grid_size")->check(CLI::PositiveNumber);
    sub->add_option("--t-end", o.t_end, "Override flow.t_end");
    sub->add_option("--seed-perturbation", o.seed_perturbation, "Initial perturbation amplitude (0: canonical)");
    sub->add_option("--backend", o.backend, "Override geometry.backend (CP1, F1)");
  };

  auto* flow = app.add_subcommand("flow", "Run experiments and write their outputs");
  flow->add_option("configs", o.configs, "Config files")->required()->check(CLI::ExistingFile);
  flow->add_option("--jobs,-j", o.jobs, "Configs run concurrently")->check(CLI::PositiveNumber);
  flow->add_option("--out", o.out, "Output root (overrides RICCI_LAB_OUT and output.dir)");
  add_overrides(flow);

  auto* check = app.add_subcommand("check", "Run experiments and print every check");
  check->add_option("configs", o.configs, "Config files")->required()->check(CLI::ExistingFile);
  check->add_option("--jobs,-j", o.jobs, "Configs run concurrently")->check(CLI::PositiveNumber);
  check->add_option("--out", o.out, "Output root");
  add_overrides(check);

  auto* spec = app.add_subcommand("spectrum", "Spectrum of the initial metric");
  spec->add_option("config", o.configs, "Config file")->required()->expected(1)->check(CLI::ExistingFile);
  add_overrides(spec);

  auto* rep = app.add_subcommand("report", "Summarize an existing trace.csv");
  rep->add_option("trace", o.trace, "trace.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitError;
  }

  if (*flow) return run_many(o, false);
  if (*check) return run_many(o, true);
  if (*spec) return spectrum(o);
  return report(o);
}

#include "ricci_lab/experiment.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ricci_lab/error.hpp"

namespace rlab {

namespace {

namespace pt = boost::property_tree;
using json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  fail(ErrorCode::kConfig, key + ": " + what);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_error(key, "expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) config_error(key, "expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  config_error(key, "expected a boolean, got '" + v + "'");
}

Backend to_backend(const std::string& key, const std::string& v) {
  try {
    return backend_from_name(v);
  } catch (const Error& e) {
    config_error(key, e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"geometry",
       {
           {"backend", [](auto& c, auto& k, auto& v) { c.flow.backend = to_backend(k, v); }},
           {"grid_size", [](auto& c, auto& k, auto& v) { c.flow.n = to_int(k, v); }},
           {"initial",
            [](auto& c, auto& k, auto& v) {
              if (v != "canonical" && v != "perturbed" && v != "soliton")
                config_error(k, "expected canonical, perturbed or soliton");
              c.initial = v;
            }},
           {"amplitude", [](auto& c, auto& k, auto& v) { c.flow.initial.amplitude = to_double(k, v); }},
           {"mode", [](auto& c, auto& k, auto& v) { c.flow.initial.mode_index = to_int(k, v); }},
       }},
      {"flow",
       {
           {"x_strength",
            [](auto& c, auto& k, auto& v) {
              c.soliton_strength = v == "soliton";
              c.flow.x_strength = c.soliton_strength ? 0.0 : to_double(k, v);
            }},
           {"t_end", [](auto& c, auto& k, auto& v) { c.flow.t_end = to_double(k, v); }},
           {"dt", [](auto& c, auto& k, auto& v) { c.flow.dt = to_double(k, v); }},
           {"stepper",
            [](auto& c, auto& k, auto& v) {
              if (v == "semi_implicit") c.flow.stepper = StepperKind::kSemiImplicit;
              else if (v == "rk4") c.flow.stepper = StepperKind::kExplicitRk4;
              else config_error(k, "expected semi_implicit or rk4");
            }},
           {"cfl_safety", [](auto& c, auto& k, auto& v) { c.flow.cfl_safety = to_double(k, v); }},
           {"sample_stride", [](auto& c, auto& k, auto& v) { c.flow.sample_stride = to_int(k, v); }},
       }},
      {"spectral",
       {
           {"samples", [](auto& c, auto& k, auto& v) { c.spectral.samples = to_int(k, v); }},
           {"m_max", [](auto& c, auto& k, auto& v) { c.spectral.m_max = to_int(k, v); }},
           {"k_per_mode", [](auto& c, auto& k, auto& v) { c.spectral.k_per_mode = to_int(k, v); }},
       }},
      {"checks",
       {
           {"fixed_point", [](auto& c, auto& k, auto& v) { c.checks.fixed_point = to_bool(k, v); }},
           {"fixed_point_tol", [](auto& c, auto& k, auto& v) { c.checks.fixed_point_tol = to_double(k, v); }},
           {"poincare_z", [](auto& c, auto& k, auto& v) { c.checks.poincare_z = to_bool(k, v); }},
           {"z_tol", [](auto& c, auto& k, auto& v) { c.checks.z_tol = to_double(k, v); }},
           {"averages", [](auto& c, auto& k, auto& v) { c.checks.averages = to_bool(k, v); }},
           {"averages_step_tol", [](auto& c, auto& k, auto& v) { c.checks.averages_step_tol = to_double(k, v); }},
           {"averages_upper", [](auto& c, auto& k, auto& v) { c.checks.averages_upper = to_double(k, v); }},
           {"rate", [](auto& c, auto& k, auto& v) { c.checks.rate = to_bool(k, v); }},
           {"convergence", [](auto& c, auto& k, auto& v) { c.checks.convergence = to_bool(k, v); }},
           {"convergence_tol", [](auto& c, auto& k, auto& v) { c.checks.convergence_tol = to_double(k, v); }},
           {"decay", [](auto& c, auto& k, auto& v) { c.checks.decay = to_bool(k, v); }},
           {"r2_min", [](auto& c, auto& k, auto& v) { c.checks.r2_min = to_double(k, v); }},
           {"scaling", [](auto& c, auto& k, auto& v) { c.checks.scaling = to_bool(k, v); }},
           {"conditions", [](auto& c, auto& k, auto& v) { c.checks.conditions = to_bool(k, v); }},
           {"condition_tol", [](auto& c, auto& k, auto& v) { c.checks.condition_tol = to_double(k, v); }},
           {"bochner_tol", [](auto& c, auto& k, auto& v) { c.checks.bochner_tol = to_double(k, v); }},
           {"perelman", [](auto& c, auto& k, auto& v) { c.checks.perelman = to_bool(k, v); }},
           {"perelman_threshold",
            [](auto& c, auto& k, auto& v) { c.checks.perelman_threshold = to_double(k, v); }},
           {"require_modified_futaki_vanishing",
            [](auto& c, auto& k, auto& v) { c.checks.require_modified_futaki_vanishing = to_bool(k, v); }},
           {"futaki_tol", [](auto& c, auto& k, auto& v) { c.checks.futaki_tol = to_double(k, v); }},
       }},
      {"output",
       {
           {"dir", [](auto& c, auto&, auto& v) { c.output.dir = v; }},
           {"name", [](auto& c, auto&, auto& v) { c.output.name = v; }},
           {"svg", [](auto& c, auto& k, auto& v) { c.output.svg = to_bool(k, v); }},
       }},
  };
  return s;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    }));
  for (auto& j : jobs) j.get();
}

std::vector<std::size_t> sample_indices(std::size_t records, int samples) {
  std::vector<std::size_t> out;
  if (records == 0 || samples <= 0) return out;
  const std::size_t s = std::min<std::size_t>(records, samples);
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t idx = s == 1 ? records - 1 : (i * (records - 1) + (s - 1) / 2) / (s - 1);
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

void add(ExperimentResult& r, std::string name, bool ok, std::string detail) {
  r.checks.push_back({std::move(name), ok, std::move(detail)});
}

void evaluate_checks(ExperimentResult& r) {
  const CheckOptions& ck = r.config.checks;
  const auto& recs = r.trace.records;
  const bool modified = r.x_strength != 0.0;
  const double vol = r.trace.grid->backend().class_volume;

  add(r, "flow_completed", r.trace.status == FlowStatus::kCompleted,
      r.trace.status == FlowStatus::kCompleted ? std::to_string(r.trace.steps) + " steps" : r.trace.message);
  if (recs.empty()) return;

  if (ck.fixed_point) {
    double m = 0.0;
    for (const auto& rec : recs) m = std::max(m, rec.diag.sup.u);
    add(r, "fixed_point", m <= ck.fixed_point_tol, "max sup|u| = " + fmt_short(m));
  }
  if (ck.poincare_z) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& rec : recs) m = std::min({m, rec.diag.Z, modified ? rec.diag.Z_w : rec.diag.Z});
    add(r, "poincare_z", m >= -ck.z_tol * vol, "min Z = " + fmt_short(m));
  }
  if (ck.averages) {
    bool ok = true;
    double worst_drop = 0.0, a_max = -INFINITY;
    auto scan = [&](auto get) {
      const double a0 = get(recs.front());
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const double a = get(recs[i]);
        a_max = std::max(a_max, a);
        if (a > ck.averages_upper || a < a0 - ck.averages_step_tol) ok = false;
        if (i > 0) {
          const double drop = get(recs[i - 1]) - a;
          worst_drop = std::max(worst_drop, drop);
          if (drop > ck.averages_step_tol) ok = false;
        }
      }
    };
    scan([](const FlowRecord& x) { return x.diag.a; });
    if (modified) scan([](const FlowRecord& x) { return *x.diag.a_x; });
    add(r, "averages", ok, "max drop " + fmt_short(worst_drop) + ", max " + fmt_short(a_max));
  }
  if (ck.rate) {
    const RateCheck rc = check_average_rate(r.trace);
    add(r, "average_rate", rc.consistent, "max excess " + fmt_short(rc.max_excess));
  }
  if (ck.convergence) {
    const auto& d = recs.back().diag;
    const double s = modified ? d.sup_w_minus_ax : d.sup_u_minus_a;
    add(r, "convergence", s <= ck.convergence_tol, "final sup = " + fmt_short(s));
  }
  if (ck.decay) {
    if (r.decay)
      add(r, "decay", r.decay->gamma > 0 && r.decay->r2 >= ck.r2_min,
          "gamma = " + fmt_short(r.decay->gamma) + ", r2 = " + fmt_short(r.decay->r2));
    else
      add(r, "decay", false, "no decay fit");
  }
  if (ck.scaling) {
    if (r.scaling)
      add(r, "scaling", r.scaling->holds,
          "A = " + fmt_short(r.scaling->A) + ", tail ratio " + fmt_short(r.scaling->max_ratio_tail));
    else
      add(r, "scaling", false, "no scaling fit");
  }
  if (ck.conditions) {
    bool ok = !r.samples.empty();
    std::string failing;
    for (const auto& s : r.samples) {
      if (!s.conditions.inequalities_pass()) {
        ok = false;
        if (failing.empty()) failing = " (first failure at t = " + fmt_short(s.conditions.t) + ")";
      }
    }
    add(r, "conditions", ok, std::to_string(r.samples.size()) + " sampled states" + failing);
  }
  if (ck.perelman) {
    std::vector<DiagnosticsRecord> d;
    for (const auto& rec : recs) d.push_back(rec.diag);
    const PerelmanReport p = perelman_monitor(d, ck.perelman_threshold);
    add(r, "perelman", p.pass(), "max sup|u| = " + fmt_short(p.max_u));
  }
  if (ck.require_modified_futaki_vanishing) {
    double m = 0.0;
    for (double f : r.modified_futaki) m = std::max(m, std::abs(f));
    add(r, "modified_futaki_vanishing", m <= ck.futaki_tol * vol, "max |F_X(X)| = " + fmt_short(m));
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  flow.validate();
  if (initial == "perturbed" && flow.initial.amplitude == 0.0)
    fail(ErrorCode::kConfig, "initial = perturbed needs a nonzero amplitude");
  if (spectral.samples < 0 || spectral.m_max < 0 || spectral.k_per_mode < 1)
    fail(ErrorCode::kConfig, "spectral options must be nonnegative");
  const double tols[] = {checks.fixed_point_tol,   checks.z_tol,         checks.averages_step_tol,
                         checks.averages_upper,    checks.convergence_tol, checks.r2_min,
                         checks.condition_tol,     checks.bochner_tol,   checks.perelman_threshold,
                         checks.futaki_tol};
  for (double t : tols)
    if (!(t > 0.0)) fail(ErrorCode::kConfig, "tolerances must be positive");
  if (checks.conditions && spectral.samples == 0)
    fail(ErrorCode::kConfig, "checks.conditions needs spectral.samples > 0");
}

ExperimentConfig parse_config(const std::string& text, const std::string& name) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::kConfig, name + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  c.output.name = name;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    const auto sec = sch.find(section);
    if (body.empty() || sec == sch.end()) fail(ErrorCode::kConfig, "unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const auto k = sec->second.find(key);
      if (k == sec->second.end()) fail(ErrorCode::kConfig, "unknown key " + section + "." + key);
      k->second(c, section + "." + key, value.get_value<std::string>());
    }
  }
  if (c.initial == "perturbed")
    c.flow.initial = MetricDescriptor::perturbed(c.flow.initial.amplitude, c.flow.initial.mode_index);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.stem().string());
}

void apply_overrides(ExperimentConfig& c, const ConfigOverrides& o) {
  if (o.backend) c.flow.backend = to_backend("backend", *o.backend);
  if (o.grid_size) c.flow.n = *o.grid_size;
  if (o.t_end) c.flow.t_end = *o.t_end;
  if (o.seed_perturbation) {
    if (*o.seed_perturbation == 0.0) {
      c.initial = "canonical";
      c.flow.initial = MetricDescriptor::canonical();
    } else {
      c.initial = "perturbed";
      c.flow.initial = MetricDescriptor::perturbed(*o.seed_perturbation, c.flow.initial.mode_index);
    }
  }
  c.validate();
}

std::filesystem::path output_directory(const ExperimentConfig& c) {
  const char* env = std::getenv("RICCI_LAB_OUT");
  const std::filesystem::path root = env && *env ? std::filesystem::path(env) : std::filesystem::path(c.output.dir);
  return root / (c.output.name.empty() ? "run" : c.output.name);
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

FlowConfig resolve_flow(const ExperimentConfig& config, double* x_strength) {
  FlowConfig fc = config.flow;
  const GridPtr grid = make_grid(fc.backend, fc.n);
  if (config.soliton_strength)
    fc.x_strength = soliton_coefficient(initial_metric(grid, MetricDescriptor::canonical())).c;
  if (config.initial == "soliton") {
    fc.initial_potential = soliton_state(grid, fc.x_strength).phi();
  } else if (config.initial == "canonical") {
    fc.initial = MetricDescriptor::canonical();
  }
  if (x_strength) *x_strength = fc.x_strength;
  return fc;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult r;
  r.config = config;
  const FlowConfig fc = resolve_flow(config, &r.x_strength);
  try {
    r.trace = run_flow(fc);
  } catch (const FlowAborted& e) {
    r.trace = e.partial();
  }

  const auto& recs = r.trace.records;
  r.futaki.assign(recs.size(), kNaN);
  r.modified_futaki.assign(recs.size(), kNaN);
  parallel_for(recs.size(), [&](std::size_t i) {
    const MetricState s = r.trace.state(i);
    const PotentialSet p = compute_potentials(s, r.x_strength);
    r.futaki[i] = futaki(s, p.u, 0).real();
    r.modified_futaki[i] = p.theta ? modified_futaki(s, p.u, *p.theta, 0).real() : r.futaki[i];
  });

  const auto idx = sample_indices(recs.size(), config.spectral.samples);
  r.samples.resize(idx.size());
  std::optional<InitialAverages> init;
  if (!recs.empty()) init = InitialAverages{recs.front().diag.a, recs.front().diag.a_x};
  ConditionTolerances tol;
  tol.ratio = tol.relative = tol.poincare = config.checks.condition_tol;
  tol.bochner = config.checks.bochner_tol;
  tol.futaki = config.checks.futaki_tol;
  std::vector<std::string> errors(idx.size());
  parallel_for(idx.size(), [&](std::size_t k) {
    try {
      const MetricState s = r.trace.state(idx[k]);
      const PotentialSet p = compute_potentials(s, r.x_strength);
      r.samples[k].record = idx[k];
      r.samples[k].spectrum = spectrum_report(s, p.u, config.spectral.m_max, config.spectral.k_per_mode);
      r.samples[k].conditions = check_conditions(s, p, r.samples[k].spectrum, init, tol);
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < idx.size(); ++k)
    if (!errors[k].empty()) add(r, "spectrum_t" + fmt_short(recs[idx[k]].t), false, errors[k]);

  if (recs.size() >= 10) {
    try {
      r.decay = fit_decay_rate(r.trace, DecayQuantity::kY);
    } catch (const Error&) {
    }
    try {
      r.scaling = fit_sup_scaling(r.trace, 1.0 / (2.0 * fc.backend.n + 2.0));
    } catch (const Error&) {
    }
  }
  evaluate_checks(r);
  return r;
}

SpectrumReport initial_spectrum(const ExperimentConfig& config) {
  double c = 0.0;
  const FlowConfig fc = resolve_flow(config, &c);
  const GridPtr grid = make_grid(fc.backend, fc.n);
  const MetricState s = fc.initial_potential ? MetricState::from_potential(grid, *fc.initial_potential)
                                             : initial_metric(grid, fc.initial);
  const Field u = solve_ricci_potential(s);
  return spectrum_report(s, u, config.spectral.m_max, config.spectral.k_per_mode);
}

std::string trace_csv(const ExperimentResult& r) {
  std::map<std::size_t, const SampledState*> sampled;
  for (const auto& s : r.samples) sampled[s.record] = &s;
  std::string out = kTraceHeader;
  out += '\n';
  const auto& recs = r.trace.records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& d = recs[i].diag;
    const auto it = sampled.find(i);
    const SampledState* s = it == sampled.end() ? nullptr : it->second;
    const double row[] = {
        recs[i].t,
        d.Y,
        d.Z,
        d.a,
        d.a_x.value_or(kNaN),
        d.osc_u,
        d.osc_w,
        d.sup.u,
        d.sup.grad_u,
        d.sup.lap_u,
        s ? s->spectrum.lambda : kNaN,
        s ? s->spectrum.mu : kNaN,
        s ? s->spectrum.mu_tilde : kNaN,
        d.ratio_degenerate ? kNaN : d.poincare_ratio,
        s ? s->conditions.margin_lambda_bound : kNaN,
        s ? s->conditions.margin_sandwich : kNaN,
        r.futaki[i],
        r.modified_futaki[i],
    };
    for (std::size_t k = 0; k < std::size(row); ++k) {
      if (k) out += ',';
      out += fmt(row[k]);
    }
    out += '\n';
  }
  return out;
}

std::string summary_json(const ExperimentResult& r) {
  const auto& c = r.config;
  json j;
  j["config"] = {
      {"backend", c.flow.backend.name()},
      {"grid_size", c.flow.n},
      {"initial", c.initial},
      {"amplitude", c.flow.initial.amplitude},
      {"mode", c.flow.initial.mode_index},
      {"x_strength", r.x_strength},
      {"x_strength_soliton", c.soliton_strength},
      {"t_end", c.flow.t_end},
      {"dt", c.flow.dt},
      {"stepper", c.flow.stepper == StepperKind::kSemiImplicit ? "semi_implicit" : "rk4"},
      {"sample_stride", c.flow.sample_stride},
      {"spectral_samples", c.spectral.samples},
      {"m_max", c.spectral.m_max},
  };
  j["status"] = r.trace.status == FlowStatus::kCompleted ? "completed" : "aborted";
  if (!r.trace.message.empty()) j["message"] = r.trace.message;
  j["steps"] = r.trace.steps;
  j["dt_used"] = r.trace.dt_used;
  j["records"] = r.trace.records.size();
  j["fit"] = r.decay ? json{{"gamma", r.decay->gamma}, {"B", r.decay->B}, {"r2", r.decay->r2}} : json(nullptr);
  j["scaling"] = r.scaling ? json{{"A", r.scaling->A}, {"holds", r.scaling->holds}} : json(nullptr);
  if (!r.trace.records.empty()) {
    const auto& d = r.trace.records.back().diag;
    j["final"] = {{"t", d.t},         {"Y", d.Y},         {"Z", d.Z},
                  {"a", d.a},         {"sup_u_minus_a", d.sup_u_minus_a},
                  {"sup_w_minus_ax", d.sup_w_minus_ax}, {"osc_u", d.osc_u}};
  }
  if (!r.samples.empty()) {
    const ConditionReport& m = r.samples.back().conditions;
    j["final_margins"] = {
        {"t", m.t},
        {"lambda", m.lambda},
        {"mu", m.mu},
        {"mu_tilde", m.mu_tilde},
        {"delta_measured", m.delta_measured},
        {"delta_prime", m.delta_prime},
        {"poincare", m.margin_poincare},
        {"ratio", m.margin_ratio},
        {"lambda_bound", m.margin_lambda_bound},
        {"sandwich", m.margin_sandwich},
        {"projection", m.margin_projection},
        {"averages", m.margin_averages},
        {"ratio_w", m.margin_ratio_w},
        {"band_gradient", m.margin_band_gradient},
        {"bochner_residual", m.bochner_residual},
        {"futaki", m.futaki},
        {"modified_futaki", m.modified_futaki},
    };
  }
  json checks = json::array();
  for (const auto& ck : r.checks) checks.push_back({{"name", ck.name}, {"passed", ck.passed}, {"detail", ck.detail}});
  j["checks"] = checks;
  j["passed"] = r.passed();
  return j.dump(2) + "\n";
}

std::string curves_svg(const ExperimentResult& r) {
  struct Panel {
    const char* title;
    std::function<double(const DiagnosticsRecord&)> value;
  };
  const Panel panels[] = {
      {"log10 Y", [](const DiagnosticsRecord& d) { return std::log10(d.Y); }},
      {"Z", [](const DiagnosticsRecord& d) { return d.Z; }},
      {"a", [](const DiagnosticsRecord& d) { return d.a; }},
      {"log10 sup|u - a|", [](const DiagnosticsRecord& d) { return std::log10(d.sup_u_minus_a); }},
  };
  constexpr int kW = 480, kH = 180, kPad = 30;
  const auto& recs = r.trace.records;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << 4 * kH
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  const double t0 = recs.empty() ? 0.0 : recs.front().t;
  const double t1 = recs.empty() ? 1.0 : std::max(recs.back().t, t0 + 1e-12);
  for (int p = 0; p < 4; ++p) {
    std::vector<std::pair<double, double>> pts;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& rec : recs) {
      const double v = panels[p].value(rec.diag);
      if (!std::isfinite(v)) continue;
      pts.emplace_back(rec.t, v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const int y0 = p * kH;
    os << "<text x=\"" << kPad << "\" y=\"" << y0 + 14 << "\">" << panels[p].title << "  [" << fmt_short(lo) << ", "
       << fmt_short(hi) << "]</text>\n";
    os << "<rect x=\"" << kPad << "\" y=\"" << y0 + 20 << "\" width=\"" << kW - 2 * kPad << "\" height=\""
       << kH - 40 << "\" fill=\"none\" stroke=\"#999\"/>\n<polyline fill=\"none\" stroke=\"#1f5fa8\" points=\"";
    for (const auto& [t, v] : pts) {
      const double x = kPad + (t - t0) / (t1 - t0) * (kW - 2 * kPad);
      const double y = y0 + kH - 20 - (v - lo) / (hi - lo) * (kH - 40);
      os << fmt_short(x) << ',' << fmt_short(y) << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_report(const ExperimentResult& r, const std::filesystem::path& out_dir) {
  if (r.trace.records.empty()) fail(ErrorCode::kInvalidArgument, "emit_report: empty trace");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  auto write = [&](const char* file, const std::string& body) {
    const auto path = out_dir / file;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  };
  write("trace.csv", trace_csv(r));
  write("summary.json", summary_json(r));
  if (r.config.output.svg) write("curves.svg", curves_svg(r));
}

TraceSummary summarize_trace(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) fail(ErrorCode::kIo, "cannot read " + csv.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind(kTraceHeader, 0) != 0)
    fail(ErrorCode::kConfig, csv.string() + ": not a trace (unexpected header)");
  TraceSummary s;
  std::vector<double> t, y;
  s.min_Z = INFINITY;
  s.a_min = INFINITY;
  s.a_max = -INFINITY;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      row.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) fail(ErrorCode::kConfig, csv.string() + ": bad cell '" + cell + "'");
    }
    if (row.size() < 18) fail(ErrorCode::kConfig, csv.string() + ": short row " + std::to_string(s.rows + 2));
    if (!t.empty() && !(row[0] > t.back())) s.t_monotone = false;
    t.push_back(row[0]);
    y.push_back(row[1]);
    s.min_Z = std::min(s.min_Z, row[2]);
    s.a_min = std::min(s.a_min, row[3]);
    s.a_max = std::max(s.a_max, row[3]);
    ++s.rows;
  }
  if (s.rows == 0) fail(ErrorCode::kConfig, csv.string() + ": empty trace");
  s.t_last = t.back();
  s.final_Y = y.back();
  try {
    s.fit = fit_decay_rate(t, y, 1e-22);
  } catch (const Error& e) {
    s.fit_error = e.what();
  }
  return s;
}

}  // namespace rlab

#include "runner.hpp"

#include <charconv>
#include <cmath>

#include "error.hpp"
#include "sde.hpp"
#include "stochlip.hpp"

namespace slc::app {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += '\n';
  }
  Csv& cell(double v) { return put(format_double(v)); }
  Csv& cell(std::size_t v) { return put(std::to_string(v)); }
  Csv& cell(const std::string& v) { return put(v); }
  void end() {
    text_ += '\n';
    first_ = true;
  }
  std::string str() const { return text_; }

 private:
  Csv& put(const std::string& s) {
    if (!first_) text_ += ',';
    text_ += s;
    first_ = false;
    return *this;
  }
  std::string text_;
  bool first_ = true;
};

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// JSON numbers cannot be NaN; undefined values are written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json estimate_json(const EstimateReport& e) {
  json j{{"estimate", num(e.point_estimate)},
         {"ci95", {num(e.ci_lo), num(e.ci_hi)}},
         {"label", e.label},
         {"samples", e.samples},
         {"inconclusive", e.inconclusive}};
  if (!e.mode.empty()) j["mode"] = e.mode;
  if (e.argmax_u.size()) j["argmax_u"] = vec(e.argmax_u);
  if (e.argmax_v.size()) j["argmax_v"] = vec(e.argmax_v);
  if (e.argmax_point.size()) j["argmax_point"] = vec(e.argmax_point);
  return j;
}

std::string trace_csv(const EstimateReport& e) {
  Csv csv({"h", "estimate", "stderr"});
  for (const auto& row : e.per_h) {
    csv.cell(row.h).cell(row.estimate).cell(row.stderr_);
    csv.end();
  }
  return csv.str();
}

json verdicts_json(const std::vector<Verdict>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  return out;
}

std::string divergence_csv(const std::vector<double>& times, const std::vector<double>& moment,
                           const std::vector<double>& stderr_, std::size_t count) {
  Csv csv({"t", "moment", "stderr", "n_realizations"});
  for (std::size_t k = 0; k < times.size(); ++k) {
    csv.cell(times[k]).cell(moment[k]).cell(stderr_[k]).cell(count);
    csv.end();
  }
  return csv.str();
}

void append_trajectories(Csv& csv, std::size_t realization, const std::vector<Trajectory>& trajs) {
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    const auto& tr = trajs[t];
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      csv.cell(realization).cell(t).cell(tr.times[k]);
      for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) csv.cell(tr.states[k](i));
      csv.end();
    }
  }
}

std::string trajectories_csv(std::size_t n, std::size_t first_realization, const std::vector<std::vector<Trajectory>>& runs) {
  std::vector<std::string> header{"realization", "trajectory", "t"};
  for (std::size_t i = 1; i <= n; ++i) header.push_back("x_" + std::to_string(i));
  Csv csv(header);
  for (std::size_t r = 0; r < runs.size(); ++r) append_trajectories(csv, first_realization + r, runs[r]);
  return csv.str();
}

std::string pathwise_csv(const PairSeries& s) {
  Csv csv({"realization", "terminal_separation", "pathwise_slope"});
  for (std::size_t r = 0; r < s.terminal_separation.size(); ++r) {
    csv.cell(r).cell(s.terminal_separation[r]).cell(s.pathwise_slope[r]);
    csv.end();
  }
  return csv.str();
}

std::size_t valid_count(const ExperimentReport& rep) { return rep.realizations - rep.blown_up; }

SimulationConfig simulation(const RunConfig& c, std::size_t threads) {
  SimulationConfig s;
  s.l = c.l;
  s.norm = c.norm;
  s.T = c.T;
  s.h = c.h;
  s.realizations = c.realizations;
  s.seed = c.seed;
  s.threads = threads;
  s.record_stride = c.record_stride;
  s.window_lo = c.window_lo;
  s.window_hi = c.window_hi;
  return s;
}

SLLCConfig sllc_config(const RunConfig& c, std::size_t threads) {
  SLLCConfig s(*c.domain);
  s.l = c.l;
  s.pairs = c.pairs;
  s.mc_samples = c.mc_samples;
  s.h_ladder = c.sllc_ladder;
  s.norm = c.norm;
  s.mode = c.mode;
  s.screen_samples = c.screen_samples;
  s.final_candidates = c.final_candidates;
  s.seed = c.seed;
  s.threads = threads;
  s.llc_ladder = c.ladder;
  return s;
}

json experiment_json(const ExperimentReport& rep) {
  json j{{"fitted_rate", num(rep.fitted_rate)},
         {"fit_window", {rep.fit_window_lo, rep.fit_window_hi}},
         {"pathwise_rate", num(rep.pathwise_rate)},
         {"valid", rep.valid},
         {"realizations", rep.realizations},
         {"blown_up", rep.blown_up},
         {"verdicts", verdicts_json(rep.verdicts)}};
  if (rep.bound_rate) j["bound_rate"] = num(*rep.bound_rate);
  if (rep.sllc) j["sllc"] = estimate_json(*rep.sllc);
  json pairs = json::array();
  for (const auto& s : rep.series)
    pairs.push_back({{"i", s.i},
                     {"j", s.j},
                     {"initial_moment", num(s.moment.front())},
                     {"terminal_moment", num(s.moment.back())},
                     {"terminal_stderr", num(s.stderr_.back())}});
  j["pairs"] = pairs;
  return j;
}

void add_divergence_tables(RunReport& out, const ExperimentReport& rep, const std::string& prefix) {
  for (const auto& s : rep.series)
    out.tables.push_back({prefix + std::to_string(s.i) + "_" + std::to_string(s.j) + ".csv",
                          divergence_csv(rep.times, s.moment, s.stderr_, valid_count(rep))});
}

void run_measure(const RunConfig& c, RunReport& out) {
  out.summary["results"] = {{"mu", matrix_measure(c.matrix, c.norm)},
                            {"mu_limit", matrix_measure_limit(c.matrix, c.norm, c.ladder)},
                            {"operator_norm", operator_norm(c.matrix, c.norm)}};
}

void run_llc(const RunConfig& c, RunReport& out) {
  const SystemModel& m = *c.model;
  const EstimateReport est = mplus_estimate(m.drift, *c.domain, c.norm, c.pairs, c.ladder, c.mode);
  const JacobianFn jac = [&m](std::span<const double> x) { return jacobian(m, JacobianTarget::drift(), x); };
  const EstimateReport sup = sup_jacobian_measure(jac, *c.domain, c.norm, c.grid);
  const ContractionVerdict ode = ode_contraction_check(jac, *c.domain, c.norm, c.grid);
  out.summary["results"] = {{"llc", estimate_json(est)},
                            {"sup_jacobian_measure", estimate_json(sup)},
                            {"ode_contraction", {{"verdict", ode.verdict}, {"rate", ode.rate}, {"contractive", ode.contractive}}}};
  out.summary["timings"] = {{"pair_evaluations", est.samples}, {"grid_points", sup.samples}};
  out.tables.push_back({"llc_trace.csv", trace_csv(est)});
}

json bound_json(const BoundTerms& b) { return {{"value", b.value}, {"drift_term", b.drift_term}, {"noise_term", b.noise_term}}; }

void run_sllc(const RunConfig& c, std::size_t threads, RunReport& out) {
  const EstimateReport est = sllc_estimate(*c.model, sllc_config(c, threads));
  json r = estimate_json(est);
  out.summary["results"] = r;
  out.summary["timings"] = {{"mc_samples", est.samples}};
  out.tables.push_back({"sllc_trace.csv", trace_csv(est)});
}

void run_bound(const RunConfig& c, std::size_t threads, RunReport& out) {
  const SystemModel& m = *c.model;
  SLLCConfig s = sllc_config(c, threads);
  s.mc_samples = 1000;  // unused by the deterministic bounds, but validated
  s.h_ladder = {8e-4, 4e-4, 2e-4, 1e-4};
  const BoundTerms b13 = prop5_bound_llc(m, s);
  const BoundTerms b14 = prop5_bound_measure(m, c.l, *c.domain, c.norm, c.grid);
  json r{{"bound_eq13", b13.value}, {"bound_eq14", b14.value}, {"terms_eq13", bound_json(b13)}, {"terms_eq14", bound_json(b14)}};
  if (m.linear_diffusion) r["linear_diffusion_bound"] = linear_diffusion_bound(m, c.norm, *c.domain, c.grid);
  out.summary["results"] = r;
}

void run_audit(const RunConfig& c, std::size_t threads, RunReport& out) {
  const AuditReport a = bound_audit(*c.model, sllc_config(c, threads), c.grid, c.tolerance);
  out.summary["results"] = {{"estimate", num(a.estimate.point_estimate)},
                            {"ci95", {num(a.estimate.ci_lo), num(a.estimate.ci_hi)}},
                            {"bound_eq13", a.bound13.value},
                            {"bound_eq14", a.bound14.value},
                            {"terms_eq13", bound_json(a.bound13)},
                            {"terms_eq14", bound_json(a.bound14)},
                            {"relation", std::string(to_string(a.relation))},
                            {"tolerance", a.tolerance},
                            {"sllc", estimate_json(a.estimate)}};
  out.summary["timings"] = {{"mc_samples", a.estimate.samples}};
  out.tables.push_back({"sllc_trace.csv", trace_csv(a.estimate)});
}

void run_simulate(const RunConfig& c, std::size_t threads, RunReport& out) {
  const SystemModel& m = *c.model;
  EnsembleConfig ec;
  ec.T = c.T;
  ec.h = c.h;
  ec.seed = c.seed;
  ec.realizations = c.realizations;
  ec.record_stride = c.record_stride;
  ec.moment = c.l;
  ec.norm = c.norm;
  ec.threads = threads;
  const EnsembleResult ens = run_ensemble(m, c.initials, ec);

  std::vector<std::vector<Trajectory>> runs;
  const std::size_t paths = std::min(c.paths, c.realizations);
  for (std::size_t r = 0; r < paths; ++r)
    runs.push_back(simulate_shared(m, c.initials, c.T, c.h, c.seed, static_cast<std::uint32_t>(r), c.record_stride));
  out.tables.push_back({"trajectories.csv", trajectories_csv(m.n, 0, runs)});

  json pairs = json::array();
  for (const auto& p : ens.pairs) {
    out.tables.push_back({"divergence_" + std::to_string(p.i) + "_" + std::to_string(p.j) + ".csv",
                          divergence_csv(ens.times, p.mean, p.stderr_, ens.valid_realizations)});
    pairs.push_back({{"i", p.i}, {"j", p.j}, {"initial_separation", p.initial_separation},
                     {"terminal_moment", num(p.mean.back())}, {"terminal_stderr", num(p.stderr_.back())}});
  }
  json blown = json::array();
  for (std::size_t r = 0; r < ens.blown_up.size(); ++r)
    if (ens.blown_up[r]) blown.push_back(r);
  const double fraction = static_cast<double>(ens.blown_up_count) / static_cast<double>(c.realizations);
  out.valid = fraction <= 0.01;
  out.summary["results"] = {{"steps", ens.steps},
                            {"valid_realizations", ens.valid_realizations},
                            {"blown_up", ens.blown_up_count},
                            {"blown_up_realizations", blown},
                            {"valid", out.valid},
                            {"pairs", pairs}};
  out.summary["timings"] = {{"trajectory_steps", ens.steps * c.realizations * c.initials.size()}};
}

void run_experiment(const RunConfig& c, std::size_t threads, RunReport& out) {
  ContractionOptions opts;
  opts.expect_decay = c.expect_decay;
  opts.bound_box = c.domain;
  opts.bound_grid = c.grid;
  if (c.sllc_check) opts.sllc = sllc_config(c, threads);
  const ExperimentReport rep = contraction_experiment(*c.model, c.initials[0], c.initials[1], simulation(c, threads), opts);
  out.valid = rep.valid;
  out.summary["results"] = experiment_json(rep);
  out.summary["timings"] = {{"trajectory_steps", rep.steps * c.realizations * 2}};
  add_divergence_tables(out, rep, "divergence_");
  out.tables.push_back({"pathwise.csv", pathwise_csv(rep.series.front())});
}

void run_sync(const RunConfig& c, std::size_t threads, RunReport& out) {
  const ExperimentReport rep = sync_experiment(*c.model, c.initials, simulation(c, threads), c.threshold);
  out.valid = rep.valid;
  out.summary["results"] = experiment_json(rep);
  out.summary["timings"] = {{"trajectory_steps", rep.steps * c.realizations * c.initials.size()}};
  add_divergence_tables(out, rep, "divergence_");
}

void run_scan(const RunConfig& c, std::size_t threads, RunReport& out) {
  const ScanResult scan = sigma_threshold_scan(c.sigmas, c.initials[0], c.initials[1], *c.domain, c.grid, simulation(c, threads));
  Csv csv({"sigma", "bound14", "fitted_rate", "pathwise_rate", "blown_up"});
  json rows = json::array();
  std::size_t blown = 0;
  for (const auto& r : scan.rows) {
    csv.cell(r.sigma).cell(r.bound14).cell(r.fitted_rate).cell(r.pathwise_rate).cell(r.blown_up);
    csv.end();
    rows.push_back({{"sigma", r.sigma}, {"bound14", r.bound14}, {"fitted_rate", num(r.fitted_rate)},
                    {"pathwise_rate", num(r.pathwise_rate)}, {"blown_up", r.blown_up}});
    blown = std::max(blown, r.blown_up);
  }
  out.valid = static_cast<double>(blown) / static_cast<double>(c.realizations) <= 0.01;
  out.summary["results"] = {{"rows", rows},
                            {"sign_change_sigma", scan.sign_change_sigma ? json(*scan.sign_change_sigma) : json(nullptr)}};
  out.tables.push_back({"scan.csv", csv.str()});
}

void run_vdp(const RunConfig& c, std::size_t threads, RunReport& out) {
  VdpConfig v;
  v.sigma = c.sigma;
  v.x0 = c.initials[0];
  v.y0 = c.initials[1];
  v.sim = simulation(c, threads);
  v.path_stride = c.path_stride;
  const VdpReport rep = reproduce_vdp(v);
  out.valid = rep.additive.valid && rep.multiplicative.valid;
  json checks = verdicts_json(rep.verdicts);
  out.summary["results"] = {{"deterministic_terminal_ratio", num(rep.deterministic_terminal_ratio)},
                            {"additive_median_terminal_ratio", num(rep.additive_median_terminal_ratio)},
                            {"multiplicative_converged_fraction", num(rep.multiplicative_converged_fraction)},
                            {"moment_trend_slope", num(rep.moment_trend_slope)},
                            {"moment_trend_stderr", num(rep.moment_trend_stderr)},
                            {"moment_terminal_ratio", num(rep.moment_terminal_ratio)},
                            {"multiplicative", experiment_json(rep.multiplicative)},
                            {"additive", experiment_json(rep.additive)},
                            {"verdicts", checks}};
  out.summary["timings"] = {{"trajectory_steps", rep.multiplicative.steps * (2 * c.realizations + 1) * 2}};
  const std::size_t n = 2;
  out.tables.push_back({"paths_deterministic.csv", trajectories_csv(n, 0, {rep.deterministic_paths})});
  out.tables.push_back({"paths_additive.csv", trajectories_csv(n, 0, {rep.additive_paths})});
  out.tables.push_back({"paths_multiplicative.csv", trajectories_csv(n, 0, {rep.multiplicative_paths})});
  add_divergence_tables(out, rep.deterministic, "divergence_deterministic_");
  add_divergence_tables(out, rep.additive, "divergence_additive_");
  add_divergence_tables(out, rep.multiplicative, "divergence_multiplicative_");
  out.tables.push_back({"pathwise_multiplicative.csv", pathwise_csv(rep.multiplicative.series.front())});
  out.tables.push_back({"pathwise_additive.csv", pathwise_csv(rep.additive.series.front())});
}

}  // namespace

RunReport run(const RunConfig& c, std::size_t threads) {
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
  RunReport out;
  out.summary = {{"subcommand", c.subcommand}, {"config", c.resolved}, {"seed", c.seed}, {"results", json::object()},
                 {"timings", json::object()}};
  const std::string& s = c.subcommand;
  if (s == "measure") run_measure(c, out);
  else if (s == "llc") run_llc(c, out);
  else if (s == "sllc") run_sllc(c, threads, out);
  else if (s == "bound") run_bound(c, threads, out);
  else if (s == "audit") run_audit(c, threads, out);
  else if (s == "simulate") run_simulate(c, threads, out);
  else if (s == "experiment") run_experiment(c, threads, out);
  else if (s == "sync") run_sync(c, threads, out);
  else if (s == "scan") run_scan(c, threads, out);
  else if (s == "reproduce-vdp") run_vdp(c, threads, out);
  else throw InvalidArgument("unknown subcommand '" + s + "'");
  out.output_dir = c.output_dir.value_or("");
  return out;
}

}  // namespace slc::app

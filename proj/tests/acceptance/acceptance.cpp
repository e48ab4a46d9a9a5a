// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any line fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "config.hpp"
#include "detlip.hpp"
#include "experiments.hpp"
#include "norms.hpp"
#include "sde.hpp"
#include "stochlip.hpp"

using namespace slc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kLimitTol = 1e-6;         // closed form vs limit
constexpr double kPropertyTol = 1e-9;      // algebraic properties, scaled by magnitude
constexpr double kLinearLlcTol = 1e-3;     // sampled constant vs mu[A]
constexpr double kZeroNoiseRelTol = 0.05;  // G = 0 reduction
constexpr double kItoRelTol = 0.05;        // stochastic constant vs 2a + sigma^2
constexpr double kMomentSigmas = 3.0;      // moment series vs exact, in standard errors
constexpr double kBoundTol = 1e-3;         // bound vs 2(1 - 8 sigma^2)
constexpr double kNoiseTermTol = 1e-9;
constexpr double kAuditEstimateRelTol = 0.02;
constexpr double kAuditBoundTol = 1e-6;
constexpr double kOrderLo = 1.7, kOrderHi = 2.3;

struct Line {
  std::string id, title;
  bool pass = false;
  std::string detail;
};

std::vector<Line> lines;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(std::string id, std::string title, bool pass, std::string detail) {
  std::printf("[%s] %-3s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), title.c_str(), detail.c_str());
  std::fflush(stdout);
  lines.push_back({std::move(id), std::move(title), pass, std::move(detail)});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string timing(double s, double budget) { return fmt("%.2f s (budget %.0f s)", s, budget); }

DomainBox square(double r, std::size_t n) { return DomainBox(std::vector<double>(n, -r), std::vector<double>(n, r)); }

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return a;
}

Matrix random_weight(std::mt19937_64& rng, Eigen::Index n) {
  return Matrix::Identity(n, n) + random_matrix(rng, n, 0.3 / std::sqrt(static_cast<double>(n)));
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(a) + std::abs(b)); }

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> dim(1, 8);
  double worst_limit = 0.0;
  std::size_t property_failures = 0, checks = 0;
  for (int k = 0; k < 4; ++k) {
    for (int t = 0; t < 100; ++t) {
      const Eigen::Index n = dim(rng);
      const NormSpec norm = k < 3 ? NormSpec(static_cast<NormKind>(k)) : NormSpec(NormKind::L2, random_weight(rng, n));
      const Matrix a = random_matrix(rng, n, 1.0), b = random_matrix(rng, n, 1.0);
      const double ma = matrix_measure(a, norm), mb = matrix_measure(b, norm);
      worst_limit = std::max(worst_limit, std::abs(ma - matrix_measure_limit(a, norm, default_measure_ladder())));

      const double c = 0.7, alpha = 2.5;
      const auto prop = [&](bool ok) {
        ++checks;
        if (!ok) ++property_failures;
      };
      prop(close(matrix_measure(a + c * Matrix::Identity(n, n), norm), ma + c, kPropertyTol));
      prop(close(matrix_measure(alpha * a, norm), alpha * ma, kPropertyTol));
      prop(matrix_measure(a + b, norm) <= ma + mb + kPropertyTol * (1.0 + std::abs(ma) + std::abs(mb)));
      prop(std::abs(ma) <= operator_norm(a, norm) * (1.0 + kPropertyTol) + kPropertyTol);
      const double lower = -matrix_measure(-a, norm);
      const Eigen::EigenSolver<Matrix> es(a, false);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double re = es.eigenvalues()(i).real();
        prop(re <= ma + kPropertyTol * (1.0 + std::abs(ma)) && re >= lower - kPropertyTol * (1.0 + std::abs(lower)));
      }
    }
  }
  const double s = seconds_since(t0);
  report("1", "matrix-measure oracle suite", worst_limit <= kLimitTol && property_failures == 0 && s < 10.0,
         fmt("400 matrices over L1/L2/Linf/weighted-L2; max |closed - limit| = %.2e (tol %.0e); %zu/%zu property checks "
             "failed; %s",
             worst_limit, kLimitTol, property_failures, checks, timing(s, 10).c_str()));
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<int> dim(2, 4);
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    for (int t = 0; t < 20; ++t) {
      const Eigen::Index n = dim(rng);
      const NormSpec norm = k < 3 ? NormSpec(static_cast<NormKind>(k)) : NormSpec(NormKind::L2, random_weight(rng, n));
      const Matrix a = random_matrix(rng, n, 1.0);
      const FieldFn f = [a](std::span<const double> x, std::span<double> out) {
        Eigen::Map<Vector>(out.data(), a.rows()) = a * Eigen::Map<const Vector>(x.data(), a.cols());
      };
      PairSamplingConfig cfg;
      cfg.rng_seed = 7000 + static_cast<std::uint64_t>(20 * k + t);
      const double est = mplus_estimate(f, square(1.0, n), norm, cfg, default_llc_ladder()).point_estimate;
      worst = std::max(worst, std::abs(est - matrix_measure(a, norm)));
    }
  }
  const double s = seconds_since(t0);
  report("2", "sampled constant of linear fields", worst <= kLinearLlcTol && s < 30.0,
         fmt("80 random A over L1/L2/Linf/weighted-L2; max |estimate - mu[A]| = %.2e (tol %.0e); %s", worst, kLinearLlcTol,
             timing(s, 30).c_str()));
}

void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto det = builtin("vanderpol-deterministic", json::object());
  const auto box = square(2.0, 2);
  bool ok = true;
  std::string detail;
  for (double l : {1.0, 2.0}) {
    SLLCConfig c(box);
    c.l = l;
    const double s = sllc_estimate(det, c).point_estimate;
    const double m = mplus_estimate(det.drift, box, c.norm, c.pairs, c.llc_ladder).point_estimate;
    const double rel = std::abs(s - l * m) / std::abs(l * m);
    ok = ok && rel <= kZeroNoiseRelTol;
    detail += fmt("l=%g: %.5f vs l*M+ = %.5f (rel %.2e); ", l, s, l * m, rel);
  }
  const double s = seconds_since(t0);
  report("3", "zero-noise reduction on Van der Pol", ok && s < 120.0,
         detail + fmt("tol %.0f%%; ", 100 * kZeroNoiseRelTol) + timing(s, 120));
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<std::string, json>> models{{"scalar-linear", {{"a", -1.0}, {"sigma", 0.5}}},
                                                         {"vanderpol-multiplicative", {{"sigma", 0.35}}}};
  bool ok = true;
  std::string detail;
  for (const auto& [name, params] : models) {
    const auto m = builtin(name, params);
    SLLCConfig c(square(2.0, m.n));
    const auto base = sllc_estimate(m, c);
    const auto sc = sllc_estimate(scaled(m, 2.0, std::sqrt(2.0)), c);
    const double diff = std::abs(sc.point_estimate - 2.0 * base.point_estimate);
    const double joint = std::hypot(sc.ci_width() / 2.0, base.ci_width());
    ok = ok && diff <= joint;
    detail += fmt("%s: %.4f vs 2x%.4f, |diff| %.2e <= joint 95%% half-width %.2e; ", name.c_str(), sc.point_estimate,
                  base.point_estimate, diff, joint);
  }
  report("4", "scaling (2F, sqrt2 G) vs 2x(F, G)", ok, detail + fmt("%.2f s", seconds_since(t0)));
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& [a, sigma] : {std::pair{-1.0, 0.5}, std::pair{-0.5, 1.0}}) {
    const auto m = builtin("scalar-linear", {{"a", a}, {"sigma", sigma}});
    const double target = 2 * a + sigma * sigma;
    SLLCConfig c(square(2.0, 1));
    const auto est = sllc_estimate(m, c);
    // Relative tolerance; for a zero target it is taken relative to sigma^2.
    const double tol = kItoRelTol * std::max(std::abs(target), sigma * sigma);
    const bool est_ok = std::abs(est.point_estimate - target) <= tol;

    SimulationConfig sim;
    sim.T = 2.0;
    sim.h = 1e-3;
    sim.realizations = 10000;
    sim.seed = app::kDefaultSeed;
    sim.record_stride = 10;
    Vector x0(1), y0(1);
    x0 << 1.0;
    y0 << 0.0;
    const auto rep = contraction_experiment(m, x0, y0, sim);
    const auto& p = rep.pair(0, 1);
    double worst_z = 0.0;
    for (std::size_t k = 1; k < rep.times.size(); ++k) {
      const double exact = std::exp(target * rep.times[k]);
      worst_z = std::max(worst_z, std::abs(p.moment[k] - exact) / p.stderr_[k]);
    }
    const bool series_ok = worst_z <= kMomentSigmas && rep.valid;
    ok = ok && est_ok && series_ok;
    detail += fmt("(a=%g, s=%g): estimate %.4f vs %.4f (tol %.3f), series max |z| %.2f over %zu times; ", a, sigma,
                  est.point_estimate, target, tol, worst_z, rep.times.size() - 1);
  }
  const double s = seconds_since(t0);
  report("5", "Ito second-moment oracle", ok && s < 300.0, detail + timing(s, 300));
}

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (double sigma : {0.1, 0.3536, 0.5}) {
    const auto m = builtin("vanderpol-multiplicative", {{"sigma", sigma}});
    const auto b = prop5_bound_measure(m, 2.0, square(2.0, 2), NormSpec(NormKind::L2), 41);
    const double expect = 2 * (1 - 8 * sigma * sigma);
    ok = ok && std::abs(b.value - expect) <= kBoundTol && std::abs(b.noise_term) <= kNoiseTermTol;
    detail += fmt("s=%g: %.6f vs %.6f, noise term %.1e; ", sigma, b.value, expect, b.noise_term);
  }
  const double s = seconds_since(t0);
  report("6", "Van der Pol bound 2(1-8s^2)", ok && s < 30.0, detail + timing(s, 30));
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  VdpConfig cfg;
  cfg.sim.seed = app::kDefaultSeed;
  const auto rep = reproduce_vdp(cfg);
  const double s = seconds_since(t0);
  const char* ids[] = {"7a", "7b", "7c", "7d"};
  const char* titles[] = {"deterministic run does not converge", "additive noise does not converge (median)",
                          "multiplicative noise converges pathwise", "multiplicative moment decays"};
  for (std::size_t i = 0; i < 4 && i < rep.verdicts.size(); ++i)
    report(ids[i], titles[i], rep.verdicts[i].pass && s < 600.0,
           rep.verdicts[i].detail + fmt("; N=%zu, T=%g, h=%g; %s", cfg.sim.realizations, cfg.sim.T, cfg.sim.h,
                                        timing(s, 600).c_str()));
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = builtin("scalar-linear", {{"a", -1.0}, {"sigma", 0.5}});
  const auto audit = bound_audit(m, SLLCConfig(square(2.0, 1)), 41);
  const double e = audit.estimate.point_estimate;
  const bool ok = std::abs(e + 1.75) <= kAuditEstimateRelTol * 1.75 && std::abs(audit.bound13.value + 2.25) <= kAuditBoundTol &&
                  std::abs(audit.bound14.value + 2.25) <= kAuditBoundTol &&
                  audit.relation == AuditRelation::EstimateExceedsBound;
  const double s = seconds_since(t0);
  report("8", "bound audit surfaces the estimate/bound gap", ok && s < 120.0,
         fmt("estimate %.4f [%.4f, %.4f], bound13 %.6f, bound14 %.6f, relation %s; ", e, audit.estimate.ci_lo,
             audit.estimate.ci_hi, audit.bound13.value, audit.bound14.value, std::string(to_string(audit.relation)).c_str()) +
             timing(s, 120));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& sub, const fs::path& config, const fs::path& out, int threads) {
  const std::string cmd = std::string("\"") + SLC_CLI_PATH + "\" " + sub + " --config \"" + config.string() + "\" --out \"" +
                          out.string() + "\" --threads " + std::to_string(threads) + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const json vdp = {{"name", "vanderpol-multiplicative"}, {"params", {{"sigma", 0.35}}}};
  const json box = {{"lo", {-2, -2}}, {"hi", {2, 2}}};
  const std::vector<std::pair<std::string, json>> configs{
      {"measure", {{"matrix", {{-1, 2}, {0, -3}}}, {"norm", "Linf"}}},
      {"llc", {{"model", vdp}, {"domain", box}}},
      {"sllc", {{"model", vdp}, {"domain", box}, {"mc_samples", 2000}}},
      {"bound", {{"model", vdp}, {"domain", box}}},
      {"audit", {{"model", {{"name", "scalar-linear"}, {"params", {{"a", -1}, {"sigma", 0.5}}}}},
                 {"domain", {{"lo", {-2}}, {"hi", {2}}}},
                 {"mc_samples", 2000}}},
      {"simulate", {{"model", vdp}, {"initials", {{1, -1}, {2, -2}}}, {"T", 1}, {"h", 1e-3}, {"realizations", 20}, {"paths", 3}}},
      {"experiment",
       {{"model", vdp}, {"initials", {{1, -1}, {2, -2}}}, {"T", 2}, {"h", 1e-3}, {"realizations", 50}, {"record_stride", 10},
        {"expect_decay", true}, {"domain", box}, {"sllc_check", true}, {"mc_samples", 2000}}},
      {"sync", {{"model", vdp}, {"initials", {{1, -1}, {2, -2}, {0, 1}}}, {"T", 2}, {"h", 1e-3}, {"realizations", 50},
                {"record_stride", 10}}},
      {"scan", {{"sigmas", {0.2, 0.4}}, {"domain", box}, {"T", 1}, {"h", 1e-3}, {"realizations", 20}, {"record_stride", 10}}},
      {"reproduce-vdp", {{"T", 5}, {"h", 1e-3}, {"realizations", 40}}}};
  const fs::path root = fs::path(SLC_ACCEPT_SCRATCH);
  fs::remove_all(root);
  fs::create_directories(root);
  bool ok = true;
  std::size_t files = 0;
  std::string failed;
  for (const auto& [sub, cfg] : configs) {
    json full = cfg;
    full["seed"] = 4242;
    const fs::path conf = root / (sub + ".json");
    std::ofstream(conf) << full.dump(2);
    const fs::path runs[] = {root / (sub + "-1a"), root / (sub + "-1b"), root / (sub + "-8")};
    const int threads[] = {1, 1, 8};
    bool same = true;
    for (int r = 0; r < 3; ++r) {
      const int code = run_cli(sub, conf, runs[r], threads[r]);
      if (code != 0) {
        failed += fmt(" %s(exit %d)", sub.c_str(), code);
        same = false;
      }
    }
    if (same) {
      std::size_t n = 0;
      for (const auto& e : fs::directory_iterator(runs[0])) {
        ++n;
        const std::string ref = slurp(e.path());
        for (int r = 1; r < 3; ++r)
          if (!fs::exists(runs[r] / e.path().filename()) || slurp(runs[r] / e.path().filename()) != ref) same = false;
      }
      for (int r = 1; r < 3; ++r)
        if (static_cast<std::size_t>(std::distance(fs::directory_iterator(runs[r]), fs::directory_iterator{})) != n)
          same = false;
      files += n;
    }
    if (!same && failed.find(sub) == std::string::npos) failed += " " + sub;
    ok = ok && same;
  }
  report("9", "determinism across runs and thread counts", ok,
         fmt("10 subcommands x {1, 1, 8} threads, %zu output files compared byte-for-byte", files) +
             (failed.empty() ? std::string() : "; failing:" + failed) + fmt("; %.2f s", seconds_since(t0)));
}

// Mean |X_h(T) - X(T)| for the Milstein path at step h, driven by the fine Brownian path.
void criterion10() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& [a, sigma] : {std::pair{-1.0, 0.5}, std::pair{-0.5, 1.0}}) {
    const auto m = builtin("scalar-linear", {{"a", a}, {"sigma", sigma}});
    const double T = 1.0, hf = 5e-4, hc = 1e-3, x0 = 1.0;
    const std::size_t steps = step_count(T, hf);
    double err_c = 0.0, err_f = 0.0;
    const std::size_t N = 1000;
    for (std::size_t r = 0; r < N; ++r) {
      WienerPlan plan{app::kDefaultSeed, static_cast<std::uint32_t>(r), 1, hf, steps};
      const WienerStream stream(plan, LevyMode::Exact1d);
      Vector xf = Vector::Constant(1, x0), xc = Vector::Constant(1, x0);
      double w = 0.0, pending = 0.0;
      MilsteinTerms tc(1);
      for (std::size_t k = 0; k < steps; ++k) {
        const auto tf = stream.terms(k);
        xf = milstein_step(m, xf, hf, tf);
        w += tf.dW[0];
        pending += tf.dW[0];
        if (k % 2 == 1) {
          tc.dW[0] = pending;
          levy_terms(tc.dW, hc, LevyMode::Exact1d, tc.dW2);
          xc = milstein_step(m, xc, hc, tc);
          pending = 0.0;
        }
      }
      const double exact = x0 * std::exp((a - 0.5 * sigma * sigma) * T + sigma * w);
      err_f += std::abs(xf(0) - exact);
      err_c += std::abs(xc(0) - exact);
    }
    const double ratio = err_c / err_f;
    ok = ok && ratio >= kOrderLo && ratio <= kOrderHi;
    detail += fmt("(a=%g, s=%g): error %.3e at h=1e-3, %.3e at h=5e-4, ratio %.3f; ", a, sigma, err_c / N, err_f / N, ratio);
  }
  report("10", "Milstein strong order", ok, detail + fmt("range [%.1f, %.1f], N=1000; %.2f s", kOrderLo, kOrderHi, seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number, e.g. "acceptance 1 5 9".
  std::vector<std::string> only(argv + 1, argv + argc);
  const auto want = [&](const std::string& id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const std::vector<std::pair<std::string, std::function<void()>>> all{
      {"1", criterion1}, {"2", criterion2}, {"3", criterion3}, {"4", criterion4}, {"5", criterion5},
      {"6", criterion6}, {"7", criterion7}, {"8", criterion8}, {"9", criterion9}, {"10", criterion10}};
  for (const auto& [id, fn] : all) {
    if (!want(id)) continue;
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, "raised an exception", false, e.what());
    }
  }
  std::size_t failed = 0;
  for (const auto& l : lines) failed += l.pass ? 0 : 1;
  std::printf("%zu of %zu acceptance lines passed\n", lines.size() - failed, lines.size());
  return failed ? 1 : 0;
}

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "models.hpp"
#include "norms.hpp"
#include "report.hpp"
#include "sde.hpp"
#include "stochlip.hpp"

namespace slc {

// Least-squares slope of log(value) against t over the samples with t in [t_lo, t_hi].
// Throws NumericalError when a value in the window is not positive, and InvalidArgument
// when fewer than 10 samples fall inside the window.
double decay_rate_fit(std::span<const double> t, std::span<const double> value, double t_lo, double t_hi);

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SimulationConfig {
  double l = 2.0;
  NormSpec norm{};
  double T = 1.0;
  double h = 1e-3;
  std::size_t realizations = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t record_stride = 1;
  // Fit window; unset means [0.1 T, 0.6 T].
  std::optional<double> window_lo;
  std::optional<double> window_hi;
  double max_blowup_fraction = 0.01;

  double fit_lo() const { return window_lo.value_or(0.1 * T); }
  double fit_hi() const { return window_hi.value_or(0.6 * T); }
  void validate() const;
};

struct PairSeries {
  std::size_t i = 0;
  std::size_t j = 0;
  double initial_separation = 0.0;
  std::vector<double> moment;
  std::vector<double> stderr_;
  std::vector<double> terminal_separation;
  std::vector<double> pathwise_slope;
};

struct ExperimentReport {
  std::vector<double> times;
  std::vector<PairSeries> series;
  double fitted_rate = 0.0;  // NaN when no positive window was found
  double fit_window_lo = 0.0;
  double fit_window_hi = 0.0;
  double pathwise_rate = 0.0;  // NaN when no realization gave a slope
  std::optional<double> bound_rate;
  std::optional<EstimateReport> sllc;
  std::vector<Verdict> verdicts;
  bool valid = true;
  std::size_t realizations = 0;
  std::size_t blown_up = 0;
  std::size_t steps = 0;

  // Series of pair (i, j) in either order.
  const PairSeries& pair(std::size_t i, std::size_t j) const;
  bool passed(const std::string& verdict) const;
};

struct ContractionOptions {
  // Prediction of decay for the model family; enables the trend check.
  bool expect_decay = false;
  // Bound via grid Jacobian measures on this box.
  std::optional<DomainBox> bound_box;
  std::size_t bound_grid = 41;
  // Independent estimate of the stochastic constant for the moment-decay check.
  std::optional<SLLCConfig> sllc;
};

ExperimentReport contraction_experiment(const SystemModel& model, const Vector& x0, const Vector& y0,
                                        const SimulationConfig& sim, const ContractionOptions& opts = {});

ExperimentReport sync_experiment(const SystemModel& model, std::span<const Vector> initials, const SimulationConfig& sim,
                                 double threshold = 1e-2);

struct ScanRow {
  double sigma = 0.0;
  double bound14 = 0.0;
  double fitted_rate = 0.0;
  double pathwise_rate = 0.0;
  std::size_t blown_up = 0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  // Linear interpolation of the sigma where the bound changes sign, if bracketed.
  std::optional<double> sign_change_sigma;
};

ScanResult sigma_threshold_scan(std::span<const double> sigmas, const Vector& x0, const Vector& y0, const DomainBox& box,
                                std::size_t grid, const SimulationConfig& sim);

struct VdpConfig {
  double sigma = 0.35;
  Vector x0 = Vector::Constant(2, 0.0);
  Vector y0 = Vector::Constant(2, 0.0);
  SimulationConfig sim;
  // Stride of the sample-path records.
  std::size_t path_stride = 100;

  VdpConfig();
};

struct VdpReport {
  std::vector<double> times;
  // Realization-0 sample paths, two trajectories each.
  std::vector<Trajectory> deterministic_paths, additive_paths, multiplicative_paths;
  ExperimentReport deterministic, additive, multiplicative;
  double deterministic_terminal_ratio = 0.0;
  double additive_median_terminal_ratio = 0.0;
  double multiplicative_converged_fraction = 0.0;
  double moment_trend_slope = 0.0;
  double moment_trend_stderr = 0.0;
  double moment_terminal_ratio = 0.0;
  std::vector<Verdict> verdicts;
};

// Deterministic, additive-noise and multiplicative-noise Van der Pol runs from two initials.
VdpReport reproduce_vdp(const VdpConfig& cfg);

}  // namespace slc

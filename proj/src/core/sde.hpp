#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "linalg.hpp"
#include "models.hpp"
#include "norms.hpp"

namespace slc {

// Identifies one realization's Wiener increments. Every increment is a pure function of
// (master_seed, realization_index, step, component).
struct WienerPlan {
  std::uint64_t master_seed = 0;
  std::uint32_t realization_index = 0;
  std::size_t d = 1;
  double h = 0.0;
  std::size_t num_steps = 0;

  void validate() const;
};

enum class LevyMode { Exact1d, Commutative, Reject };

std::string_view to_string(LevyMode mode);
// Exact1d for d = 1, Commutative when the model declares commuting noise, Reject otherwise.
LevyMode levy_mode_for(const SystemModel& model);

struct MilsteinTerms {
  std::size_t d = 0;
  std::vector<double> dW;   // d
  std::vector<double> dW2;  // d x d row-major, iterated integrals

  explicit MilsteinTerms(std::size_t dim = 1) : d(dim), dW(dim), dW2(dim * dim) {}
};

// Double Wiener integrals from the increments: 1/2 (dW^2 - h) for one channel; the symmetric
// part 1/2 dW_j dW_k off the diagonal for commutative noise. Reject refuses d > 1.
void levy_terms(std::span<const double> dW, double h, LevyMode mode, std::span<double> out);
Matrix levy_terms(std::span<const double> dW, double h, LevyMode mode);

class WienerStream {
 public:
  WienerStream(const WienerPlan& plan, LevyMode mode);

  const WienerPlan& plan() const noexcept { return plan_; }
  // Standard normals for one step (random access; no internal state).
  void normals(std::size_t step, std::span<double> xi) const;
  void terms(std::size_t step, MilsteinTerms& out) const;
  MilsteinTerms terms(std::size_t step) const;

 private:
  WienerPlan plan_;
  LevyMode mode_;
  double sqrt_h_;
};

// Scratch buffers for one model; one per thread.
class MilsteinWorkspace {
 public:
  explicit MilsteinWorkspace(const SystemModel& model);

 private:
  friend void milstein_increment(const SystemModel&, std::span<const double>, double, const MilsteinTerms&,
                                 MilsteinWorkspace&, std::span<double>);
  std::vector<double> f_, g_, jg_, gk_;
  FdConfig fd_;
};

// Writes the one-step Milstein map M_{F,G}^{(h,W)}(x):
//   h F_i + sum_j G_ij dW_j + sum_{j,k} (L_k G_ij) dW2_{j,k}.
void milstein_increment(const SystemModel& model, std::span<const double> x, double h, const MilsteinTerms& terms,
                        MilsteinWorkspace& ws, std::span<double> increment);

inline constexpr double kBlowUpThreshold = 1e12;

// x' = x + M(x). Throws BlowUp (carrying `step`) on a non-finite result or ||x'||_2 > threshold.
void milstein_step(const SystemModel& model, std::span<const double> x, double h, const MilsteinTerms& terms,
                   MilsteinWorkspace& ws, std::span<double> out, std::size_t step = 0,
                   double blowup_threshold = kBlowUpThreshold);
Vector milstein_step(const SystemModel& model, const Vector& x, double h, const MilsteinTerms& terms);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  bool blown_up = false;
  std::size_t blowup_step = 0;
  // FNV-1a digest of every increment bit pattern this trajectory consumed.
  std::uint64_t noise_digest = 0xcbf29ce484222325ULL;
};

// Number of steps T/h, rejecting horizons that are not an integral multiple of h.
std::size_t step_count(double T, double h);

// Advances every initial state with the identical increment stream of one realization.
// Each trajectory replays the stream independently; equal initials give identical output.
std::vector<Trajectory> simulate_shared(const SystemModel& model, std::span<const Vector> initials, double T, double h,
                                        std::uint64_t seed, std::uint32_t realization, std::size_t record_stride = 1);

struct DivergenceSeries {
  std::vector<double> times;
  std::vector<double> moment;  // E ||X - Y||^l
  std::vector<double> stderr_;
  std::vector<std::size_t> count;
};

DivergenceSeries moment_divergence(std::span<const Trajectory> xs, std::span<const Trajectory> ys, double l,
                                   const NormSpec& norm);

// Monte Carlo over realizations of m trajectories sharing one noise path each. Statistics
// are accumulated in fixed blocks of realizations and merged in block order, so the result
// does not depend on the thread count.
struct EnsembleConfig {
  double T = 1.0;
  double h = 1e-3;
  std::uint64_t seed = 0;
  std::size_t realizations = 1000;
  std::size_t record_stride = 1;
  double moment = 2.0;
  NormSpec norm{};
  // Window for the per-realization slope of log ||Delta(t)||.
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t threads = 1;
  double blowup_threshold = kBlowUpThreshold;
};

struct PairStats {
  std::size_t i = 0;
  std::size_t j = 0;
  double initial_separation = 0.0;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::vector<double> terminal_separation;  // per realization (NaN if blown up)
  std::vector<double> pathwise_slope;       // per realization (NaN if undefined)
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<PairStats> pairs;  // all i < j
  std::vector<std::uint8_t> blown_up;
  std::size_t blown_up_count = 0;
  std::size_t valid_realizations = 0;
  std::size_t steps = 0;
};

inline constexpr std::size_t kEnsembleBlock = 16;

EnsembleResult run_ensemble(const SystemModel& model, std::span<const Vector> initials, const EnsembleConfig& cfg);

}  // namespace slc

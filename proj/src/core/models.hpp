#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linalg.hpp"
#include "norms.hpp"

namespace slc {

// x -> out. Matrices are written row-major (n x d for the diffusion, n x n for Jacobians).
using FieldFn = std::function<void(std::span<const double> x, std::span<double> out)>;
// (x, column j) -> row-major n x n Jacobian of the j-th diffusion column.
using ColumnJacobianFn = std::function<void(std::span<const double> x, std::size_t j, std::span<double> out)>;

// Axis-aligned box; convex, so Jacobian-measure suprema and logarithmic Lipschitz constants coincide on it.
class DomainBox {
 public:
  DomainBox(std::vector<double> lo, std::vector<double> hi);

  std::size_t dimension() const noexcept { return lo_.size(); }
  const std::vector<double>& lo() const noexcept { return lo_; }
  const std::vector<double>& hi() const noexcept { return hi_; }
  double width(std::size_t i) const { return hi_[i] - lo_[i]; }
  double diameter() const;
  bool contains(std::span<const double> x) const;
  Vector center() const;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

struct SystemModel {
  std::string name;
  std::size_t n = 0;  // state dimension
  std::size_t d = 1;  // Wiener dimension
  FieldFn drift;
  FieldFn diffusion;
  // Optional analytic derivatives; empty functions fall back to central differences.
  FieldFn drift_jacobian;
  ColumnJacobianFn diffusion_jacobian;
  FieldFn corrected_drift_jacobian;
  // L_k G_j = L_j G_k for all j, k. Always true for d = 1.
  bool commutative_noise = true;
  // Set when every column is G_j(x) = sigma_j x.
  std::optional<std::vector<double>> linear_diffusion;
  // Region where the evaluators are valid; unset means all of R^n.
  std::optional<DomainBox> validity;

  void validate() const;
  bool has_noise() const;
};

struct FdConfig {
  // Relative step; the per-coordinate step is epsilon * max(1, |x_i|).
  double epsilon = default_epsilon();
  bool force_fd = false;

  static double default_epsilon();
};

struct JacobianTarget {
  enum class Kind { Drift, DiffusionColumn, CorrectedDrift };
  Kind kind = Kind::Drift;
  std::size_t column = 0;

  static JacobianTarget drift() { return {Kind::Drift, 0}; }
  static JacobianTarget diffusion_column(std::size_t j) { return {Kind::DiffusionColumn, j}; }
  static JacobianTarget corrected_drift() { return {Kind::CorrectedDrift, 0}; }
};

Vector eval_drift(const SystemModel& model, std::span<const double> x);
// n x d
Matrix eval_diffusion(const SystemModel& model, std::span<const double> x);

Matrix jacobian(const SystemModel& model, JacobianTarget target, std::span<const double> x,
                const FdConfig& fd = {});

// Central-difference Jacobian of an arbitrary field with m outputs.
Matrix fd_jacobian(const FieldFn& field, std::size_t m, std::span<const double> x, const FdConfig& fd = {},
                   const DomainBox* validity = nullptr);

// F(x) - 1/2 sum_j J_{G_j}(x) G_j(x)
Vector corrected_drift(const SystemModel& model, std::span<const double> x, const FdConfig& fd = {});

// n x d matrix whose (i, j) entry is L_k G_ij = sum_l G_lk d G_ij / d x_l; k is 0-based.
Matrix lk_apply(const SystemModel& model, std::span<const double> x, std::size_t k, const FdConfig& fd = {});

// Built-in systems: vanderpol-multiplicative, vanderpol-additive, vanderpol-deterministic,
// linear, scalar-linear.
SystemModel builtin(const std::string& name, const nlohmann::json& params);
std::vector<std::string> builtin_names();

// (alpha F, beta G) with analytic derivatives carried over.
SystemModel scaled(const SystemModel& model, double drift_scale, double diffusion_scale);

// Deterministic model dx = F(x) dt (one zero noise channel).
SystemModel drift_only(std::string name, std::size_t n, FieldFn drift, FieldFn drift_jacobian = {});

// Largest sampled ratio ||F(x) - F(y)|| / ||x - y|| on the box. A diagnostic for the
// Lipschitz hypothesis, not a proof.
double lipschitz_ratio_diagnostic(const SystemModel& model, const DomainBox& box, const NormSpec& norm,
                                  std::size_t samples, std::uint64_t seed);

}  // namespace slc

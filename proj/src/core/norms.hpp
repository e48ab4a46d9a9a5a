#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "linalg.hpp"

namespace slc {

enum class NormKind { L1, L2, Linf };

std::string_view to_string(NormKind kind);
NormKind parse_norm_kind(std::string_view text);

// Vector norm ||x|| := ||P x||_kind, with P the identity when no weight is given.
// A weight must be square, finite and well conditioned (cond_2(P) <= condition_cap).
class NormSpec {
 public:
  static constexpr double kDefaultConditionCap = 1e8;

  explicit NormSpec(NormKind kind = NormKind::L2) : kind_(kind) {}
  NormSpec(NormKind kind, Matrix weight, double condition_cap = kDefaultConditionCap);

  NormKind kind() const noexcept { return kind_; }
  bool weighted() const noexcept { return weight_.has_value(); }
  const Matrix& weight() const { return *weight_; }
  const Matrix& weight_inverse() const { return *weight_inverse_; }

  // P A P^-1, or A itself when unweighted.
  Matrix similarity(const Matrix& a) const;

  void check_dimension(std::size_t n) const;

 private:
  NormKind kind_;
  std::optional<Matrix> weight_;
  std::optional<Matrix> weight_inverse_;
};

double vector_norm(std::span<const double> x, const NormSpec& norm);
inline double vector_norm(const Vector& x, const NormSpec& norm) { return vector_norm(as_span(x), norm); }

double operator_norm(const Matrix& a, const NormSpec& norm);

// Closed-form logarithmic norm (matrix measure).
double matrix_measure(const Matrix& a, const NormSpec& norm);

// Definition-based estimate: (||I + hA|| - 1)/h on a decreasing ladder, extrapolated to h = 0
// by a least-squares line through the three smallest rungs.
double matrix_measure_limit(const Matrix& a, const NormSpec& norm, std::span<const double> h_ladder);

// Default ladder for matrix_measure_limit.
std::span<const double> default_measure_ladder();

}  // namespace slc

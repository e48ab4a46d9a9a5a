#pragma once

#include <functional>
#include <span>
#include <string>

#include "models.hpp"
#include "norms.hpp"
#include "pairs.hpp"
#include "report.hpp"

namespace slc {

// StrongLub: limit h -> 0 per pair, then sup (M+). Lub: sup per h, then the limit (M).
enum class LipschitzMode { StrongLub, Lub };

std::string_view to_string(LipschitzMode mode);

std::span<const double> default_llc_ladder();

// Estimate of the logarithmic Lipschitz constant of field on the box from
//   (1/h) (||u - v + h (F(u) - F(v))|| / ||u - v|| - 1).
EstimateReport mplus_estimate(const FieldFn& field, const DomainBox& box, const NormSpec& norm,
                              const PairSamplingConfig& pairs, std::span<const double> h_ladder,
                              LipschitzMode mode = LipschitzMode::StrongLub);

using JacobianFn = std::function<Matrix(std::span<const double>)>;

// max over a tensor grid (grid_per_axis points per axis, endpoints included) of mu[J(x)].
EstimateReport sup_jacobian_measure(const JacobianFn& jac, const DomainBox& box, const NormSpec& norm,
                                    std::size_t grid_per_axis);

EstimateReport sup_jacobian_measure(const SystemModel& model, JacobianTarget target, const DomainBox& box,
                                    const NormSpec& norm, std::size_t grid_per_axis, double sign = 1.0);

struct ContractionVerdict {
  bool contractive = false;
  double rate = 0.0;
  std::string verdict;  // "contractive (certified on grid)" or "unknown"
  EstimateReport sup;
};

// Contractive when the grid supremum of mu[J_F] is at most -c.
ContractionVerdict ode_contraction_check(const JacobianFn& jac, const DomainBox& box, const NormSpec& norm,
                                         std::size_t grid_per_axis, double c = 1e-6);

}  // namespace slc

namespace slc {

// At least 3 strictly decreasing positive rungs; optionally each ratio <= 1/2.
void validate_ladder(std::span<const double> h_ladder, bool require_halving = false);

}  // namespace slc

#include "detlip.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "fit.hpp"

namespace slc {

std::string_view to_string(LipschitzMode mode) { return mode == LipschitzMode::StrongLub ? "s-lub" : "lub"; }

std::span<const double> default_llc_ladder() {
  static constexpr std::array<double, 4> ladder{1e-4, 5e-5, 2.5e-5, 1.25e-5};
  return ladder;
}

void validate_ladder(std::span<const double> h_ladder, bool require_halving) {
  if (h_ladder.size() < 3) throw InvalidArgument("h ladder needs at least 3 rungs");
  for (std::size_t i = 0; i < h_ladder.size(); ++i) {
    if (!(h_ladder[i] > 0.0) || !std::isfinite(h_ladder[i])) throw InvalidArgument("h ladder rungs must be positive");
    if (i > 0) {
      if (!(h_ladder[i] < h_ladder[i - 1])) throw InvalidArgument("h ladder must be strictly decreasing");
      if (require_halving && h_ladder[i] > 0.5 * h_ladder[i - 1])
        throw InvalidArgument("h ladder rungs must shrink by a factor of at least 2");
    }
  }
  if (h_ladder.back() < 1e3 * std::numeric_limits<double>::epsilon())
    throw InvalidArgument("smallest h rung is below 1e3 * machine epsilon");
}

namespace {

struct PairQuotients {
  std::vector<double> q;  // one per rung
  double limit = -std::numeric_limits<double>::infinity();
};

class QuotientEvaluator {
 public:
  QuotientEvaluator(const FieldFn& field, const NormSpec& norm, std::span<const double> ladder, std::size_t n)
      : field_(field), norm_(norm), ladder_(ladder), fu_(n), fv_(n), w_(n), shifted_(n) {}

  PairQuotients operator()(const Pair& p) {
    PairQuotients out;
    const std::size_t n = w_.size();
    for (std::size_t i = 0; i < n; ++i) w_[i] = p.u(static_cast<Eigen::Index>(i)) - p.v(static_cast<Eigen::Index>(i));
    const double base = vector_norm(w_, norm_);
    if (!(base > 0.0)) return out;
    field_(std::span<const double>(p.u.data(), n), fu_);
    field_(std::span<const double>(p.v.data(), n), fv_);
    if (!all_finite(fu_) || !all_finite(fv_)) throw NumericalError("field value is non-finite at a sampled pair");
    out.q.resize(ladder_.size());
    for (std::size_t r = 0; r < ladder_.size(); ++r) {
      const double h = ladder_[r];
      for (std::size_t i = 0; i < n; ++i) shifted_[i] = w_[i] + h * (fu_[i] - fv_[i]);
      out.q[r] = (vector_norm(shifted_, norm_) / base - 1.0) / h;
    }
    const auto tail = ladder_.last(3);
    out.limit = fit_line(tail, std::span<const double>(out.q).last(3)).intercept;
    return out;
  }

 private:
  const FieldFn& field_;
  const NormSpec& norm_;
  std::span<const double> ladder_;
  std::vector<double> fu_, fv_, w_, shifted_;
};

}  // namespace

EstimateReport mplus_estimate(const FieldFn& field, const DomainBox& box, const NormSpec& norm,
                              const PairSamplingConfig& pairs, std::span<const double> h_ladder, LipschitzMode mode) {
  validate_ladder(h_ladder);
  const std::size_t n = box.dimension();
  norm.check_dimension(n);
  QuotientEvaluator eval(field, norm, h_ladder, n);

  const PairSearchResult search = search_pairs(box, norm, pairs, [&](const Pair& p) { return eval(p).limit; });

  // Re-evaluate the final sample set once so both modes see identical numbers.
  std::vector<PairQuotients> all;
  all.reserve(search.pairs.size());
  for (const auto& p : search.pairs) all.push_back(eval(p));

  EstimateReport rep;
  rep.mode = std::string(to_string(mode));
  rep.samples = search.evaluations;
  const std::size_t rungs = h_ladder.size();
  if (mode == LipschitzMode::StrongLub) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < all.size(); ++i)
      if (all[i].limit > all[best].limit) best = i;
    rep.point_estimate = all[best].limit;
    rep.argmax_u = search.pairs[best].u;
    rep.argmax_v = search.pairs[best].v;
    for (std::size_t r = 0; r < rungs; ++r) rep.per_h.push_back({h_ladder[r], all[best].q[r], 0.0});
  } else {
    std::vector<double> sup_q(rungs, -std::numeric_limits<double>::infinity());
    std::size_t best_small = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].q.empty()) continue;
      for (std::size_t r = 0; r < rungs; ++r) sup_q[r] = std::max(sup_q[r], all[i].q[r]);
      if (all[best_small].q.empty() || all[i].q.back() > all[best_small].q.back()) best_small = i;
    }
    rep.point_estimate = fit_line(h_ladder.last(3), std::span<const double>(sup_q).last(3)).intercept;
    rep.argmax_u = search.pairs[best_small].u;
    rep.argmax_v = search.pairs[best_small].v;
    for (std::size_t r = 0; r < rungs; ++r) rep.per_h.push_back({h_ladder[r], sup_q[r], 0.0});
  }
  if (!std::isfinite(rep.point_estimate)) throw NumericalError("logarithmic Lipschitz estimate is non-finite");
  rep.ci_lo = rep.ci_hi = rep.point_estimate;
  return rep;
}

EstimateReport sup_jacobian_measure(const JacobianFn& jac, const DomainBox& box, const NormSpec& norm,
                                    std::size_t grid_per_axis) {
  if (grid_per_axis < 2) throw InvalidArgument("grid resolution must be at least 2 per axis");
  const std::size_t n = box.dimension();
  norm.check_dimension(n);
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(grid_per_axis);
  if (total > 2e7) throw InvalidArgument("Jacobian grid has too many points (" + std::to_string(total) + ")");

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  EstimateReport rep;
  rep.mode = "grid";
  rep.point_estimate = -std::numeric_limits<double>::infinity();
  const auto points = static_cast<std::size_t>(total);
  for (std::size_t p = 0; p < points; ++p) {
    for (std::size_t i = 0; i < n; ++i)
      x[i] = box.lo()[i] + box.width(i) * static_cast<double>(idx[i]) / static_cast<double>(grid_per_axis - 1);
    const double mu = matrix_measure(jac(x), norm);
    if (mu > rep.point_estimate) {
      rep.point_estimate = mu;
      rep.argmax_point = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (++idx[i] < grid_per_axis) break;
      idx[i] = 0;
    }
  }
  rep.samples = points;
  rep.ci_lo = rep.ci_hi = rep.point_estimate;
  return rep;
}

EstimateReport sup_jacobian_measure(const SystemModel& model, JacobianTarget target, const DomainBox& box,
                                    const NormSpec& norm, std::size_t grid_per_axis, double sign) {
  if (box.dimension() != model.n) throw DimensionMismatch("domain box", model.n, box.dimension());
  return sup_jacobian_measure([&](std::span<const double> x) -> Matrix { return sign * jacobian(model, target, x); },
                              box, norm, grid_per_axis);
}

ContractionVerdict ode_contraction_check(const JacobianFn& jac, const DomainBox& box, const NormSpec& norm,
                                         std::size_t grid_per_axis, double c) {
  if (!(c > 0.0)) throw InvalidArgument("contraction margin c must be positive");
  ContractionVerdict v;
  v.sup = sup_jacobian_measure(jac, box, norm, grid_per_axis);
  v.rate = v.sup.point_estimate;
  v.contractive = v.rate <= -c;
  v.verdict = v.contractive ? "contractive (certified on grid)" : "unknown";
  return v;
}

}  // namespace slc

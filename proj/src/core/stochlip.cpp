#include "stochlip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "error.hpp"
#include "fit.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sde.hpp"

namespace slc {

void SLLCConfig::validate(const SystemModel& model) const {
  model.validate();
  if (!(l >= 1.0) || !std::isfinite(l)) throw InvalidArgument("moment order l must be at least 1");
  pairs.validate();
  if (mc_samples < 1000) throw InvalidArgument("mc_samples must be at least 1000");
  if (screen_samples < 2) throw InvalidArgument("screen_samples must be at least 2");
  if (final_candidates < 1) throw InvalidArgument("final_candidates must be at least 1");
  validate_ladder(h_ladder, true);
  validate_ladder(llc_ladder);
  if (domain.dimension() != model.n) throw DimensionMismatch("domain box", model.n, domain.dimension());
  norm.check_dimension(model.n);
  if (levy_mode_for(model) == LevyMode::Reject)
    throw Unsupported("non-commutative noise with d > 1 needs Levy-area simulation, which is not supported");
}

namespace {

// F, G and the L_k G_j vectors at one point; the Milstein map is affine in them.
struct PointCoefficients {
  std::vector<double> f;   // n
  std::vector<double> g;   // n x d
  std::vector<double> lg;  // (j, k, i): (J_{G_j} G_k)_i

  PointCoefficients(const SystemModel& model, const Vector& x) : f(model.n), g(model.n * model.d), lg(model.d * model.d * model.n) {
    const std::size_t n = model.n, d = model.d;
    const std::span<const double> xs(x.data(), n);
    model.drift(xs, f);
    model.diffusion(xs, g);
    if (!all_finite(f) || !all_finite(g)) throw NumericalError("model is non-finite at a sampled pair");
    for (std::size_t j = 0; j < d; ++j) {
      const Matrix jg = jacobian(model, JacobianTarget::diffusion_column(j), xs);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (std::size_t l = 0; l < n; ++l) s += jg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) * g[l * d + k];
          lg[(j * d + k) * n + i] = s;
        }
    }
  }
};

// Per-sample values v[s * rungs + r] = (mean of the antithetic ratios - 1) / h_r.
struct CellSamples {
  std::size_t samples = 0;
  std::size_t rungs = 0;
  std::vector<double> v;

  double mean(std::size_t r) const {
    double s = 0.0;
    for (std::size_t i = 0; i < samples; ++i) s += v[i * rungs + r];
    return s / static_cast<double>(samples);
  }
  double variance(std::size_t r) const {
    const double mu = mean(r);
    double s = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double e = v[i * rungs + r] - mu;
      s += e * e;
    }
    return samples > 1 ? s / static_cast<double>(samples - 1) : 0.0;
  }
};

// Shared standard normals: xi[s * d + j].
std::vector<double> draw_normals(std::uint64_t seed, StreamTag tag, std::size_t samples, std::size_t d) {
  std::vector<double> xi(samples * d);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t j = 0; j < d; j += 2) {
      const auto z = normal_pair({seed, tag, 0, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(j / 2)});
      xi[s * d + j] = z[0];
      if (j + 1 < d) xi[s * d + j + 1] = z[1];
    }
  return xi;
}

class PairSampler {
 public:
  PairSampler(const SystemModel& model, const SLLCConfig& cfg)
      : model_(model), cfg_(cfg), mode_(levy_mode_for(model)), n_(model.n), d_(model.d) {}

  // samples = number of antithetic pairs in xi.
  CellSamples evaluate(const Pair& pair, const std::vector<double>& xi, std::size_t samples) const {
    const std::size_t n = n_, d = d_;
    const std::size_t rungs = cfg_.h_ladder.size();
    CellSamples out;
    out.samples = samples;
    out.rungs = rungs;
    out.v.assign(samples * rungs, 0.0);

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = pair.u(static_cast<Eigen::Index>(i)) - pair.v(static_cast<Eigen::Index>(i));
    const double base = vector_norm(w, cfg_.norm);
    if (!(base > 0.0)) throw InvalidArgument("degenerate pair");
    const double base_l = std::pow(base, cfg_.l);

    const PointCoefficients cu(model_, pair.u), cv(model_, pair.v);
    // Differences of the affine pieces: df, dg (n x d), dlg (d x d x n).
    std::vector<double> df(n), dg(n * d), dlg(d * d * n);
    for (std::size_t i = 0; i < n; ++i) df[i] = cu.f[i] - cv.f[i];
    for (std::size_t i = 0; i < n * d; ++i) dg[i] = cu.g[i] - cv.g[i];
    for (std::size_t i = 0; i < d * d * n; ++i) dlg[i] = cu.lg[i] - cv.lg[i];

    std::vector<double> dw(d), dw2(d * d), y(n);
    auto ratio = [&](double h, double sqrt_h, const double* z, double sign) {
      for (std::size_t j = 0; j < d; ++j) dw[j] = sign * sqrt_h * z[j];
      levy_terms(dw, h, mode_, dw2);
      for (std::size_t i = 0; i < n; ++i) {
        double s = w[i] + h * df[i];
        for (std::size_t j = 0; j < d; ++j) s += dg[i * d + j] * dw[j];
        for (std::size_t jk = 0; jk < d * d; ++jk) s += dlg[jk * n + i] * dw2[jk];
        y[i] = s;
      }
      return std::pow(vector_norm(y, cfg_.norm), cfg_.l) / base_l;
    };

    for (std::size_t r = 0; r < rungs; ++r) {
      const double h = cfg_.h_ladder[r];
      const double sqrt_h = std::sqrt(h);
      for (std::size_t s = 0; s < samples; ++s) {
        const double* z = xi.data() + s * d;
        const double avg = 0.5 * (ratio(h, sqrt_h, z, 1.0) + ratio(h, sqrt_h, z, -1.0));
        out.v[s * rungs + r] = (avg - 1.0) / h;
      }
    }
    return out;
  }

 private:
  const SystemModel& model_;
  const SLLCConfig& cfg_;
  LevyMode mode_;
  std::size_t n_, d_;
};

struct Extrapolation {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

// Pushes per-sample values (one column per rung, possibly from different pairs) through the
// weighted intercept functional on the three smallest rungs.
Extrapolation extrapolate(const std::vector<const CellSamples*>& columns, std::span<const double> ladder, bool weighted) {
  const std::size_t rungs = ladder.size();
  const std::size_t samples = columns.front()->samples;
  const auto tail = ladder.last(3);
  std::vector<double> weights;
  if (weighted) {
    std::vector<double> var(3);
    double vmax = 0.0;
    for (std::size_t t = 0; t < 3; ++t) {
      const std::size_t r = rungs - 3 + t;
      var[t] = columns[r]->variance(r) / static_cast<double>(samples);
      vmax = std::max(vmax, var[t]);
    }
    if (vmax > 0.0) {
      for (double v : var) weights.push_back(1.0 / std::max(v, 1e-12 * vmax));
    }
  }
  const std::vector<double> c = intercept_functional(tail, weights);
  double sum = 0.0, sum_sq = 0.0;
  std::vector<double> per(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    double value = 0.0;
    for (std::size_t t = 0; t < 3; ++t) {
      const std::size_t r = rungs - 3 + t;
      value += c[t] * columns[r]->v[s * rungs + r];
    }
    per[s] = value;
    sum += value;
  }
  const double mean = sum / static_cast<double>(samples);
  for (double v : per) sum_sq += (v - mean) * (v - mean);
  Extrapolation e;
  e.estimate = mean;
  e.stderr_ = samples > 1 ? std::sqrt(sum_sq / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
  return e;
}

Extrapolation extrapolate_single(const CellSamples& cell, std::span<const double> ladder, bool weighted) {
  std::vector<const CellSamples*> cols(ladder.size(), &cell);
  return extrapolate(cols, ladder, weighted);
}

}  // namespace

EstimateReport sllc_estimate(const SystemModel& model, const SLLCConfig& cfg) {
  cfg.validate(model);
  const std::size_t d = model.d;
  const PairSampler sampler(model, cfg);
  const std::span<const double> ladder(cfg.h_ladder);

  const std::size_t screen_pairs = std::max<std::size_t>(1, cfg.screen_samples / 2);
  const std::vector<double> screen_xi = draw_normals(cfg.seed, StreamTag::SllcScreen, screen_pairs, d);
  const PairSearchResult search = search_pairs(cfg.domain, cfg.norm, cfg.pairs, [&](const Pair& p) {
    return extrapolate_single(sampler.evaluate(p, screen_xi, screen_pairs), ladder, false).estimate;
  });

  std::vector<std::size_t> order(search.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return search.scores[a] > search.scores[b]; });
  const std::size_t finals = std::min(cfg.final_candidates, order.size());

  const std::size_t final_pairs = cfg.mc_samples / 2;
  const std::vector<double> xi = draw_normals(cfg.seed, StreamTag::SllcFinal, final_pairs, d);
  std::vector<CellSamples> cells(finals);
  parallel_for(finals, cfg.threads, [&](std::size_t i) { cells[i] = sampler.evaluate(search.pairs[order[i]], xi, final_pairs); });

  EstimateReport rep;
  rep.mode = std::string(to_string(cfg.mode));
  rep.samples = final_pairs * 2;
  const std::size_t rungs = ladder.size();
  Extrapolation best;
  if (cfg.mode == LipschitzMode::StrongLub) {
    std::size_t arg = 0;
    for (std::size_t i = 0; i < finals; ++i) {
      const Extrapolation e = extrapolate_single(cells[i], ladder, true);
      if (i == 0 || e.estimate > best.estimate) {
        best = e;
        arg = i;
      }
    }
    rep.argmax_u = search.pairs[order[arg]].u;
    rep.argmax_v = search.pairs[order[arg]].v;
    for (std::size_t r = 0; r < rungs; ++r)
      rep.per_h.push_back({ladder[r], cells[arg].mean(r), std::sqrt(cells[arg].variance(r) / static_cast<double>(final_pairs))});
  } else {
    std::vector<const CellSamples*> columns(rungs);
    for (std::size_t r = 0; r < rungs; ++r) {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < finals; ++i)
        if (cells[i].mean(r) > cells[arg].mean(r)) arg = i;
      columns[r] = &cells[arg];
      rep.per_h.push_back({ladder[r], cells[arg].mean(r), std::sqrt(cells[arg].variance(r) / static_cast<double>(final_pairs))});
      if (r + 1 == rungs) {
        rep.argmax_u = search.pairs[order[arg]].u;
        rep.argmax_v = search.pairs[order[arg]].v;
      }
    }
    best = extrapolate(columns, ladder, true);
  }
  if (!std::isfinite(best.estimate)) throw NumericalError("stochastic Lipschitz estimate is non-finite");
  rep.point_estimate = best.estimate;
  rep.ci_lo = best.estimate - 1.96 * best.stderr_;
  rep.ci_hi = best.estimate + 1.96 * best.stderr_;
  rep.inconclusive = rep.ci_width() > std::abs(rep.point_estimate);
  return rep;
}

namespace {

FieldFn corrected_field(const SystemModel& model) {
  return [&model](std::span<const double> x, std::span<double> out) {
    const Vector v = corrected_drift(model, x);
    std::copy(v.data(), v.data() + v.size(), out.begin());
  };
}

FieldFn column_field(const SystemModel& model, std::size_t j, double sign) {
  return [&model, j, sign](std::span<const double> x, std::span<double> out) {
    std::vector<double> g(model.n * model.d);
    model.diffusion(x, g);
    for (std::size_t i = 0; i < model.n; ++i) out[i] = sign * g[i * model.d + j];
  };
}

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

}  // namespace

BoundTerms prop5_bound_llc(const SystemModel& model, const SLLCConfig& cfg) {
  cfg.validate(model);
  BoundTerms b;
  b.drift_term = cfg.l * mplus_estimate(corrected_field(model), cfg.domain, cfg.norm, cfg.pairs, cfg.llc_ladder).point_estimate;
  double noise = 0.0;
  for (std::size_t j = 0; j < model.d; ++j) {
    noise += mplus_estimate(column_field(model, j, 1.0), cfg.domain, cfg.norm, cfg.pairs, cfg.llc_ladder).point_estimate;
    noise += mplus_estimate(column_field(model, j, -1.0), cfg.domain, cfg.norm, cfg.pairs, cfg.llc_ladder).point_estimate;
  }
  b.noise_term = cfg.l * kInvSqrt2Pi * noise;
  b.value = b.drift_term + b.noise_term;
  return b;
}

BoundTerms prop5_bound_measure(const SystemModel& model, double l, const DomainBox& box, const NormSpec& norm,
                               std::size_t grid_per_axis) {
  model.validate();
  if (!(l >= 1.0)) throw InvalidArgument("moment order l must be at least 1");
  BoundTerms b;
  b.drift_term = l * sup_jacobian_measure(model, JacobianTarget::corrected_drift(), box, norm, grid_per_axis).point_estimate;
  double noise = 0.0;
  for (std::size_t j = 0; j < model.d; ++j) {
    const auto target = JacobianTarget::diffusion_column(j);
    noise += sup_jacobian_measure(model, target, box, norm, grid_per_axis, 1.0).point_estimate;
    noise += sup_jacobian_measure(model, target, box, norm, grid_per_axis, -1.0).point_estimate;
  }
  b.noise_term = l * kInvSqrt2Pi * noise;
  b.value = b.drift_term + b.noise_term;
  return b;
}

double linear_diffusion_bound(const JacobianFn& drift_jacobian, std::span<const double> sigmas, const NormSpec& norm,
                              const DomainBox& box, std::size_t grid_per_axis) {
  double sum_sq = 0.0;
  for (double s : sigmas) {
    if (!std::isfinite(s)) throw InvalidArgument("diffusion coefficients must be finite");
    sum_sq += s * s;
  }
  return sup_jacobian_measure(drift_jacobian, box, norm, grid_per_axis).point_estimate - 0.5 * sum_sq;
}

double linear_diffusion_bound(const SystemModel& model, const NormSpec& norm, const DomainBox& box,
                              std::size_t grid_per_axis) {
  model.validate();
  if (!model.linear_diffusion)
    throw InvalidArgument("model '" + model.name + "' does not have linear diffusion G_j(x) = sigma_j x");
  if (box.dimension() != model.n) throw DimensionMismatch("domain box", model.n, box.dimension());
  return linear_diffusion_bound([&](std::span<const double> x) { return jacobian(model, JacobianTarget::drift(), x); },
                                *model.linear_diffusion, norm, box, grid_per_axis);
}

std::string_view to_string(AuditRelation r) {
  switch (r) {
    case AuditRelation::Consistent: return "consistent";
    case AuditRelation::EstimateExceedsBound: return "estimate-exceeds-bound";
    case AuditRelation::Inconclusive: return "inconclusive";
  }
  return "?";
}

AuditReport bound_audit(const SystemModel& model, const SLLCConfig& cfg, std::size_t grid_per_axis, double tolerance) {
  if (!(tolerance >= 0.0)) throw InvalidArgument("audit tolerance must be non-negative");
  AuditReport a;
  a.tolerance = tolerance;
  a.estimate = sllc_estimate(model, cfg);
  a.bound13 = prop5_bound_llc(model, cfg);
  a.bound14 = prop5_bound_measure(model, cfg.l, cfg.domain, cfg.norm, grid_per_axis);
  const double width = a.estimate.ci_width();
  const double slack = std::max(width, tolerance);
  const double lo = a.estimate.ci_lo, hi = a.estimate.ci_hi;
  const double b13 = a.bound13.value, b14 = a.bound14.value;
  if (lo - b13 > slack || lo - b14 > slack) {
    a.relation = AuditRelation::EstimateExceedsBound;
  } else if (hi < b13 + tolerance && hi < b14 + tolerance) {
    a.relation = AuditRelation::Consistent;
  } else {
    a.relation = AuditRelation::Inconclusive;
  }
  return a;
}

double half_normal_mean(std::uint64_t seed, std::size_t draws) {
  if (draws == 0) throw InvalidArgument("draws must be positive");
  const std::vector<double> xi = draw_normals(seed, StreamTag::SllcFinal, (draws + 1) / 2, 2);
  double s = 0.0;
  for (std::size_t i = 0; i < draws; ++i) s += std::abs(xi[i]);
  return s / static_cast<double>(draws);
}

}  // namespace slc

#include "pairs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "error.hpp"
#include "rng.hpp"

namespace slc {

void PairSamplingConfig::validate() const {
  if (num_pairs < 1) throw InvalidArgument("num_pairs must be at least 1");
  if (pair_scales.empty()) throw InvalidArgument("pair_scales must not be empty");
  for (double s : pair_scales)
    if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("pair scales must lie in (0, 1] (fractions of the box diameter)");
}

std::size_t argmax(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

namespace {

struct Candidate {
  Vector center;
  Vector direction;
  double separation = 0.0;
};

// Places the pair symmetrically about the center, shrinking it to fit the box if needed.
std::optional<Pair> realize(const Candidate& c, const DomainBox& box) {
  const Eigen::Index n = c.center.size();
  const double len = c.direction.norm();
  if (!(len > 0.0) || !std::isfinite(len)) return std::nullopt;
  Vector half = (0.5 * c.separation / len) * c.direction;
  double factor = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double room = 0.5 * box.width(static_cast<std::size_t>(i));
    if (std::abs(half(i)) > room) factor = std::min(factor, room / std::abs(half(i)));
  }
  half *= factor;
  Vector center = c.center;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = box.lo()[static_cast<std::size_t>(i)] + std::abs(half(i));
    const double hi = box.hi()[static_cast<std::size_t>(i)] - std::abs(half(i));
    center(i) = std::clamp(center(i), lo, std::max(lo, hi));
  }
  if (2.0 * half.norm() < kDegeneratePairFraction * box.diameter()) return std::nullopt;
  return Pair{center + half, center - half};
}

double safe_score(const PairObjective& objective, const std::optional<Pair>& pair) {
  if (!pair) return -std::numeric_limits<double>::infinity();
  const double s = objective(*pair);
  return std::isfinite(s) ? s : -std::numeric_limits<double>::infinity();
}

std::vector<Vector> structured_directions(const NormSpec& norm, std::size_t n) {
  std::vector<Vector> dirs;
  for (std::size_t i = 0; i < n; ++i) dirs.push_back(Vector::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)));
  // Sign vertices (first sign fixed: w and -w give the same pair up to swapping).
  if (n >= 2 && n <= 8) {
    const std::size_t count = std::size_t{1} << (n - 1);
    for (std::size_t mask = 0; mask < count; ++mask) {
      Vector z = Vector::Ones(static_cast<Eigen::Index>(n));
      for (std::size_t b = 0; b + 1 < n; ++b)
        if (mask & (std::size_t{1} << b)) z(static_cast<Eigen::Index>(b + 1)) = -1.0;
      dirs.push_back(z);
    }
  }
  if (norm.weighted())
    for (auto& w : dirs) w = norm.weight_inverse() * w;
  return dirs;
}

Vector random_direction(CounterStream& rng, const NormSpec& norm, std::size_t n) {
  Vector z(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = rng.normal();
  if (norm.weighted()) z = norm.weight_inverse() * z;
  return z;
}

// Compass search over the 2n coordinates (center, direction) at fixed separation.
Candidate refine(Candidate start, double start_score, const DomainBox& box, const PairObjective& objective,
                 std::size_t budget, std::size_t& evaluations, double& best_score) {
  const std::size_t n = box.dimension();
  Candidate best = std::move(start);
  best.direction /= best.direction.norm();
  best_score = start_score;
  std::vector<double> step(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    step[i] = 0.25 * box.width(i);
    step[n + i] = 0.5;
  }
  std::size_t used = 0;
  while (used < budget) {
    bool improved = false;
    for (std::size_t k = 0; k < 2 * n && used < budget; ++k) {
      for (double sign : {1.0, -1.0}) {
        Candidate trial = best;
        if (k < n) {
          trial.center(static_cast<Eigen::Index>(k)) += sign * step[k];
        } else {
          trial.direction(static_cast<Eigen::Index>(k - n)) += sign * step[k];
          const double len = trial.direction.norm();
          if (!(len > 0.0)) continue;
          trial.direction /= len;
        }
        const double s = safe_score(objective, realize(trial, box));
        ++used;
        if (s > best_score) {
          best = std::move(trial);
          best_score = s;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool converged = true;
      for (std::size_t k = 0; k < 2 * n; ++k) {
        step[k] *= 0.5;
        const double floor = k < n ? 1e-7 * box.width(k) : 1e-7;
        if (step[k] > floor) converged = false;
      }
      if (converged) break;
    }
  }
  evaluations += used;
  return best;
}

}  // namespace

PairSearchResult search_pairs(const DomainBox& box, const NormSpec& norm, const PairSamplingConfig& cfg,
                              const PairObjective& objective) {
  cfg.validate();
  const std::size_t n = box.dimension();
  norm.check_dimension(n);
  const double diameter = box.diameter();
  CounterStream rng(cfg.rng_seed, StreamTag::PairSampling);

  std::vector<Candidate> candidates;
  PairSearchResult out;
  auto add = [&](Candidate c) {
    auto pair = realize(c, box);
    const double s = safe_score(objective, pair);
    ++out.evaluations;
    if (!pair) return;
    out.pairs.push_back(std::move(*pair));
    out.scores.push_back(s);
    candidates.push_back(std::move(c));
  };

  const std::size_t per_scale = std::max<std::size_t>(1, cfg.num_pairs / cfg.pair_scales.size());
  for (double scale : cfg.pair_scales) {
    const double separation = scale * diameter;
    const std::size_t first = candidates.size();
    for (std::size_t p = 0; p < per_scale; ++p) {
      Vector c(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) c(static_cast<Eigen::Index>(i)) = rng.uniform(box.lo()[i], box.hi()[i]);
      add({std::move(c), random_direction(rng, norm, n), separation});
    }
    if (cfg.structured_directions && candidates.size() > first) {
      // Structured directions at the box center and at the three best random centers.
      std::vector<std::size_t> order(candidates.size() - first);
      std::iota(order.begin(), order.end(), first);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return out.scores[a] > out.scores[b]; });
      std::vector<Vector> centers{box.center()};
      for (std::size_t i = 0; i < std::min<std::size_t>(3, order.size()); ++i) centers.push_back(candidates[order[i]].center);
      for (const auto& dir : structured_directions(norm, n))
        for (const auto& c : centers) add({c, dir, separation});
    }
  }
  if (out.pairs.empty()) throw InvalidArgument("no non-degenerate pairs could be sampled in the box");

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.scores[a] > out.scores[b]; });
  const std::size_t top = std::min(cfg.refine_top, order.size());
  for (std::size_t r = 0; r < top; ++r) {
    const std::size_t idx = order[r];
    if (!std::isfinite(out.scores[idx])) continue;
    double score = 0.0;
    Candidate polished = refine(candidates[idx], out.scores[idx], box, objective, cfg.refine_budget, out.evaluations, score);
    auto pair = realize(polished, box);
    if (!pair) continue;
    out.pairs.push_back(std::move(*pair));
    out.scores.push_back(score);
  }
  return out;
}

}  // namespace slc

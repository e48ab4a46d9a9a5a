#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "linalg.hpp"
#include "models.hpp"
#include "norms.hpp"

namespace slc {

// Discretizes the supremum over pairs u != v of a box.
struct PairSamplingConfig {
  std::size_t num_pairs = 240;
  // Separations ||u - v||_2 as fractions of the box diameter.
  std::vector<double> pair_scales{1.0, 1e-2, 1e-4};
  std::uint64_t rng_seed = 0x5eedULL;
  // Best candidates polished by a compass search over (center, direction).
  std::size_t refine_top = 6;
  std::size_t refine_budget = 600;
  // Axis and sign-vertex directions, mapped through the inverse weight.
  bool structured_directions = true;

  void validate() const;
};

struct Pair {
  Vector u;
  Vector v;
};

// Score of a pair; larger is better. Non-finite scores are treated as -inf.
using PairObjective = std::function<double(const Pair&)>;

struct PairSearchResult {
  std::vector<Pair> pairs;
  std::vector<double> scores;
  std::size_t evaluations = 0;
};

// Pairs closer than this fraction of the box diameter are rejected at sampling time.
inline constexpr double kDegeneratePairFraction = 1e-12;

// Samples random and structured pairs at every scale, then refines the top candidates.
// The returned set holds every sampled pair plus the refined optima, in a fixed order.
PairSearchResult search_pairs(const DomainBox& box, const NormSpec& norm, const PairSamplingConfig& cfg,
                              const PairObjective& objective);

// Index of the best score (first on ties).
std::size_t argmax(const std::vector<double>& scores);

}  // namespace slc

#pragma once

#include <string>
#include <vector>

#include "linalg.hpp"

namespace slc {

struct TraceRow {
  double h = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
};

// Sampled suprema are lower estimates of the true supremum; the label says so.
struct EstimateReport {
  double point_estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<TraceRow> per_h;
  Vector argmax_u;      // pair estimators
  Vector argmax_v;
  Vector argmax_point;  // grid estimators
  std::string label = "lower-estimate-of-sup";
  std::string mode;
  std::size_t samples = 0;
  bool inconclusive = false;

  double ci_width() const { return ci_hi - ci_lo; }
};

}  // namespace slc

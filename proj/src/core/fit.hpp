#pragma once

#include <span>
#include <vector>

namespace slc {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  // Standard error of the slope from residual scatter; 0 for an exact fit or two points.
  double slope_stderr = 0.0;
};

// Weighted least-squares line y = intercept + slope * x. Empty weights means unit weights.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

// Coefficients c with intercept(y) = sum_i c_i y_i for the weighted fit on abscissae x.
// The intercept is linear in y, which lets callers push per-sample values through the
// same functional to get an exact standard error under common random numbers.
std::vector<double> intercept_functional(std::span<const double> x,
                                         std::span<const double> weights = {});

double median(std::vector<double> values);

}  // namespace slc

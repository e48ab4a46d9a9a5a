#include "fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "error.hpp"

namespace slc {

namespace {

void check_inputs(std::span<const double> x, std::span<const double> weights) {
  if (x.size() < 2) throw InvalidArgument("line fit needs at least two points");
  if (!weights.empty() && weights.size() != x.size())
    throw DimensionMismatch("line fit weights", x.size(), weights.size());
}

}  // namespace

std::vector<double> intercept_functional(std::span<const double> x, std::span<const double> weights) {
  check_inputs(x, weights);
  const std::size_t m = x.size();
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    swx += w * x[i];
  }
  const double xbar = swx / sw;
  double sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sxx += w * (x[i] - xbar) * (x[i] - xbar);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("line fit abscissae are degenerate");
  std::vector<double> c(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    c[i] = w / sw - xbar * w * (x[i] - xbar) / sxx;
  }
  return c;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> weights) {
  check_inputs(x, weights);
  if (y.size() != x.size()) throw DimensionMismatch("line fit ordinates", x.size(), y.size());
  const std::size_t m = x.size();
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
  }
  const double xbar = swx / sw;
  const double ybar = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sxx += w * (x[i] - xbar) * (x[i] - xbar);
    sxy += w * (x[i] - xbar) * (y[i] - ybar);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("line fit abscissae are degenerate");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (m > 2 && weights.empty()) {
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return fit;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace slc

#pragma once

// Reference implementations written independently of the library, used as test oracles.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;

inline double l1_opnorm(const Mat& a) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

inline double linf_opnorm(const Mat& a) { return l1_opnorm(a.transpose()); }

// Largest singular value from a full SVD.
inline double l2_opnorm(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

// kind: 0 = L1, 1 = L2, 2 = Linf.
inline double opnorm(const Mat& a, int kind) {
  return kind == 0 ? l1_opnorm(a) : kind == 1 ? l2_opnorm(a) : linf_opnorm(a);
}

// One-sided difference quotient of the induced norm at a tiny step, in long double for the
// subtraction. Accurate to about h * ||A||^2.
inline double measure_by_quotient(const Mat& a, int kind, double h = 1e-7) {
  const Mat m = Mat::Identity(a.rows(), a.cols()) + h * a;
  const long double nrm = opnorm(m, kind);
  return static_cast<double>((nrm - 1.0L) / static_cast<long double>(h));
}

inline Mat random_matrix(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

}  // namespace oracle

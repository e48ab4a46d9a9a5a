#include "norms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"
#include "fit.hpp"

namespace slc {

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::L1: return "L1";
    case NormKind::L2: return "L2";
    case NormKind::Linf: return "Linf";
  }
  return "?";
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "L1" || text == "l1") return NormKind::L1;
  if (text == "L2" || text == "l2") return NormKind::L2;
  if (text == "Linf" || text == "linf" || text == "LInf") return NormKind::Linf;
  throw InvalidArgument("unknown norm kind '" + std::string(text) + "' (expected L1, L2 or Linf)");
}

NormSpec::NormSpec(NormKind kind, Matrix weight, double condition_cap) : kind_(kind) {
  if (weight.rows() != weight.cols() || weight.rows() == 0)
    throw InvalidArgument("norm weight must be a non-empty square matrix");
  if (!weight.allFinite()) throw InvalidArgument("norm weight has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(weight);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) throw InvalidArgument("norm weight is singular");
  const double cond = smax / smin;
  if (!(cond <= condition_cap))
    throw InvalidArgument("norm weight condition number " + std::to_string(cond) + " exceeds cap " +
                          std::to_string(condition_cap));
  weight_inverse_ = weight.inverse();
  weight_ = std::move(weight);
}

Matrix NormSpec::similarity(const Matrix& a) const {
  if (!weight_) return a;
  return (*weight_) * a * (*weight_inverse_);
}

void NormSpec::check_dimension(std::size_t n) const {
  if (weight_ && static_cast<std::size_t>(weight_->rows()) != n)
    throw DimensionMismatch("norm weight", static_cast<std::size_t>(weight_->rows()), n);
}

namespace {

void check_square(const Matrix& a, const NormSpec& norm) {
  if (a.rows() != a.cols()) throw InvalidArgument("matrix must be square");
  if (!a.allFinite()) throw InvalidArgument("matrix has non-finite entries");
  norm.check_dimension(static_cast<std::size_t>(a.rows()));
}

template <typename Get>
double accumulate_kind(NormKind kind, std::size_t n, Get&& get) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = get(i);
    switch (kind) {
      case NormKind::L1: acc += std::abs(v); break;
      case NormKind::L2: acc += v * v; break;
      case NormKind::Linf: acc = std::max(acc, std::abs(v)); break;
    }
  }
  return kind == NormKind::L2 ? std::sqrt(acc) : acc;
}

double unweighted_operator_norm(const Matrix& b, NormKind kind) {
  switch (kind) {
    case NormKind::L1: return b.cwiseAbs().colwise().sum().maxCoeff();
    case NormKind::Linf: return b.cwiseAbs().rowwise().sum().maxCoeff();
    case NormKind::L2: {
      Eigen::JacobiSVD<Matrix> svd(b);
      return svd.singularValues()(0);
    }
  }
  return 0.0;
}

}  // namespace

double vector_norm(std::span<const double> x, const NormSpec& norm) {
  if (!all_finite(x)) throw InvalidArgument("vector has non-finite entries");
  if (!norm.weighted()) return accumulate_kind(norm.kind(), x.size(), [&](std::size_t i) { return x[i]; });
  const Matrix& p = norm.weight();
  if (static_cast<std::size_t>(p.cols()) != x.size())
    throw DimensionMismatch("vector vs norm weight", static_cast<std::size_t>(p.cols()), x.size());
  return accumulate_kind(norm.kind(), x.size(), [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[j];
    return s;
  });
}

double operator_norm(const Matrix& a, const NormSpec& norm) {
  check_square(a, norm);
  return unweighted_operator_norm(norm.similarity(a), norm.kind());
}

double matrix_measure(const Matrix& a, const NormSpec& norm) {
  check_square(a, norm);
  const Matrix b = norm.similarity(a);
  const Eigen::Index n = b.rows();
  switch (norm.kind()) {
    case NormKind::L1: {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        double s = b(j, j);
        for (Eigen::Index i = 0; i < n; ++i)
          if (i != j) s += std::abs(b(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case NormKind::Linf: {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = b(i, i);
        for (Eigen::Index j = 0; j < n; ++j)
          if (i != j) s += std::abs(b(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case NormKind::L2: {
      const Matrix sym = 0.5 * (b + b.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
      if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigenvalue solver failed");
      return solver.eigenvalues().maxCoeff();
    }
  }
  return 0.0;
}

std::span<const double> default_measure_ladder() {
  static constexpr std::array<double, 4> ladder{1e-4, 5e-5, 2.5e-5, 1.25e-5};
  return ladder;
}

double matrix_measure_limit(const Matrix& a, const NormSpec& norm, std::span<const double> h_ladder) {
  check_square(a, norm);
  if (h_ladder.size() < 3) throw InvalidArgument("h ladder needs at least 3 rungs");
  const double floor = 1e3 * std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0; i < h_ladder.size(); ++i) {
    if (!(h_ladder[i] > 0.0) || !std::isfinite(h_ladder[i])) throw InvalidArgument("h ladder rungs must be positive");
    if (i > 0 && !(h_ladder[i] < h_ladder[i - 1])) throw InvalidArgument("h ladder must be strictly decreasing");
  }
  if (h_ladder.back() < floor) throw InvalidArgument("smallest h rung is below 1e3 * machine epsilon");

  const Matrix b = norm.similarity(a);
  const Matrix id = Matrix::Identity(b.rows(), b.cols());
  const auto tail = h_ladder.last(3);
  std::array<double, 3> q{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double h = tail[i];
    q[i] = (unweighted_operator_norm(id + h * b, norm.kind()) - 1.0) / h;
  }
  return fit_line(tail, q).intercept;
}

}  // namespace slc

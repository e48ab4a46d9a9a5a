#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "error.hpp"
#include "rng.hpp"

namespace slc {

DomainBox::DomainBox(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty()) throw InvalidArgument("domain box must have at least one coordinate");
  if (lo_.size() != hi_.size()) throw DimensionMismatch("domain box bounds", lo_.size(), hi_.size());
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]))
      throw InvalidArgument("domain box bounds must be finite");
    if (!(lo_[i] < hi_[i]))
      throw InvalidArgument("domain box coordinate " + std::to_string(i) + " has lo >= hi");
  }
}

double DomainBox::diameter() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) s += width(i) * width(i);
  return std::sqrt(s);
}

bool DomainBox::contains(std::span<const double> x) const {
  if (x.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
  return true;
}

Vector DomainBox::center() const {
  Vector c(static_cast<Eigen::Index>(lo_.size()));
  for (std::size_t i = 0; i < lo_.size(); ++i) c(static_cast<Eigen::Index>(i)) = 0.5 * (lo_[i] + hi_[i]);
  return c;
}

void SystemModel::validate() const {
  if (n == 0) throw InvalidArgument("model '" + name + "' has zero state dimension");
  if (d == 0) throw InvalidArgument("model '" + name + "' has zero Wiener dimension");
  if (!drift) throw InvalidArgument("model '" + name + "' has no drift");
  if (!diffusion) throw InvalidArgument("model '" + name + "' has no diffusion");
  if (validity && validity->dimension() != n) throw DimensionMismatch("model validity box", n, validity->dimension());
  if (linear_diffusion && linear_diffusion->size() != d)
    throw DimensionMismatch("linear diffusion coefficients", d, linear_diffusion->size());
}

bool SystemModel::has_noise() const {
  if (linear_diffusion) {
    return std::any_of(linear_diffusion->begin(), linear_diffusion->end(), [](double s) { return s != 0.0; });
  }
  return true;
}

double FdConfig::default_epsilon() { return std::cbrt(std::numeric_limits<double>::epsilon()); }

namespace {

Matrix from_row_major(std::span<const double> data, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i * cols + j];
  return m;
}

void check_point(const SystemModel& model, std::span<const double> x) {
  if (x.size() != model.n) throw DimensionMismatch("state for model '" + model.name + "'", model.n, x.size());
  if (!all_finite(x)) throw InvalidArgument("state has non-finite entries");
  if (model.validity && !model.validity->contains(x))
    throw InvalidArgument("state lies outside the validity domain of model '" + model.name + "'");
}

FieldFn diffusion_column(const SystemModel& model, std::size_t j) {
  return [&model, j](std::span<const double> x, std::span<double> out) {
    std::vector<double> g(model.n * model.d);
    model.diffusion(x, g);
    for (std::size_t i = 0; i < model.n; ++i) out[i] = g[i * model.d + j];
  };
}

Matrix column_jacobian(const SystemModel& model, std::size_t j, std::span<const double> x, const FdConfig& fd) {
  if (model.diffusion_jacobian && !fd.force_fd) {
    std::vector<double> buf(model.n * model.n);
    model.diffusion_jacobian(x, j, buf);
    return from_row_major(buf, model.n, model.n);
  }
  return fd_jacobian(diffusion_column(model, j), model.n, x, fd, model.validity ? &*model.validity : nullptr);
}

}  // namespace

Vector eval_drift(const SystemModel& model, std::span<const double> x) {
  check_point(model, x);
  Vector out(static_cast<Eigen::Index>(model.n));
  model.drift(x, as_span(out));
  if (!out.allFinite()) throw NumericalError("drift of model '" + model.name + "' is non-finite");
  return out;
}

Matrix eval_diffusion(const SystemModel& model, std::span<const double> x) {
  check_point(model, x);
  std::vector<double> buf(model.n * model.d);
  model.diffusion(x, buf);
  if (!all_finite(buf)) throw NumericalError("diffusion of model '" + model.name + "' is non-finite");
  return from_row_major(buf, model.n, model.d);
}

Matrix fd_jacobian(const FieldFn& field, std::size_t m, std::span<const double> x, const FdConfig& fd,
                   const DomainBox* validity) {
  if (!(fd.epsilon > 0.0)) throw InvalidArgument("finite-difference epsilon must be positive");
  const std::size_t n = x.size();
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> fplus(m), fminus(m);
  Matrix jac(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    const double step = fd.epsilon * std::max(1.0, std::abs(x[c]));
    xp[c] = x[c] + step;
    if (validity && !validity->contains(xp))
      throw NumericalError("finite difference leaves the validity domain along coordinate " + std::to_string(c + 1));
    field(xp, fplus);
    xp[c] = x[c] - step;
    if (validity && !validity->contains(xp))
      throw NumericalError("finite difference leaves the validity domain along coordinate " + std::to_string(c + 1));
    field(xp, fminus);
    xp[c] = x[c];
    if (!all_finite(fplus) || !all_finite(fminus))
      throw NumericalError("field is non-finite at a perturbed point along coordinate " + std::to_string(c + 1));
    for (std::size_t r = 0; r < m; ++r)
      jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (fplus[r] - fminus[r]) / (2.0 * step);
  }
  return jac;
}

Matrix jacobian(const SystemModel& model, JacobianTarget target, std::span<const double> x, const FdConfig& fd) {
  check_point(model, x);
  const DomainBox* validity = model.validity ? &*model.validity : nullptr;
  switch (target.kind) {
    case JacobianTarget::Kind::Drift: {
      if (model.drift_jacobian && !fd.force_fd) {
        std::vector<double> buf(model.n * model.n);
        model.drift_jacobian(x, buf);
        return from_row_major(buf, model.n, model.n);
      }
      return fd_jacobian(model.drift, model.n, x, fd, validity);
    }
    case JacobianTarget::Kind::DiffusionColumn: {
      if (target.column >= model.d)
        throw InvalidArgument("diffusion column " + std::to_string(target.column) + " out of range for d = " +
                              std::to_string(model.d));
      return column_jacobian(model, target.column, x, fd);
    }
    case JacobianTarget::Kind::CorrectedDrift: {
      if (model.corrected_drift_jacobian && !fd.force_fd) {
        std::vector<double> buf(model.n * model.n);
        model.corrected_drift_jacobian(x, buf);
        return from_row_major(buf, model.n, model.n);
      }
      // Inner derivatives stay analytic where available; only the outer one is differenced.
      FdConfig inner = fd;
      inner.force_fd = false;
      FieldFn corrected = [&model, inner](std::span<const double> y, std::span<double> out) {
        const Vector v = corrected_drift(model, y, inner);
        std::copy(v.data(), v.data() + v.size(), out.begin());
      };
      return fd_jacobian(corrected, model.n, x, fd, validity);
    }
  }
  throw InvalidArgument("unknown Jacobian target");
}

Vector corrected_drift(const SystemModel& model, std::span<const double> x, const FdConfig& fd) {
  Vector f = eval_drift(model, x);
  const Matrix g = eval_diffusion(model, x);
  for (std::size_t j = 0; j < model.d; ++j) {
    const Matrix jg = column_jacobian(model, j, x, fd);
    f -= 0.5 * jg * g.col(static_cast<Eigen::Index>(j));
  }
  return f;
}

Matrix lk_apply(const SystemModel& model, std::span<const double> x, std::size_t k, const FdConfig& fd) {
  check_point(model, x);
  if (k >= model.d) throw InvalidArgument("L_k index out of range");
  const Matrix g = eval_diffusion(model, x);
  Matrix out(static_cast<Eigen::Index>(model.n), static_cast<Eigen::Index>(model.d));
  for (std::size_t j = 0; j < model.d; ++j)
    out.col(static_cast<Eigen::Index>(j)) = column_jacobian(model, j, x, fd) * g.col(static_cast<Eigen::Index>(k));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Built-in systems

namespace {

[[noreturn]] void missing(const std::string& model, const std::string& key) {
  throw InvalidArgument("model '" + model + "' requires parameter '" + key + "'");
}

void reject_unknown(const std::string& model, const nlohmann::json& params, std::set<std::string> allowed) {
  if (params.is_null()) return;
  if (!params.is_object()) throw InvalidArgument("model '" + model + "' params must be an object");
  for (const auto& item : params.items())
    if (!allowed.count(item.key()))
      throw InvalidArgument("model '" + model + "' has unknown parameter '" + item.key() + "'");
}

double number_param(const std::string& model, const nlohmann::json& params, const std::string& key) {
  if (!params.is_object() || !params.contains(key)) missing(model, key);
  const auto& v = params.at(key);
  if (!v.is_number()) throw InvalidArgument("model '" + model + "' parameter '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw InvalidArgument("model '" + model + "' parameter '" + key + "' must be finite");
  return x;
}

double sigma_param(const std::string& model, const nlohmann::json& params) {
  const double s = number_param(model, params, "sigma");
  if (s < 0.0) throw InvalidArgument("model '" + model + "' parameter 'sigma' must be non-negative");
  return s;
}

Matrix matrix_param(const std::string& model, const std::string& key, const nlohmann::json& v) {
  if (!v.is_array() || v.empty()) throw InvalidArgument("model '" + model + "' parameter '" + key + "' must be a square matrix");
  const std::size_t n = v.size();
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_array() || v[i].size() != n)
      throw InvalidArgument("model '" + model + "' parameter '" + key + "' must be a square matrix");
    for (std::size_t j = 0; j < n; ++j) {
      if (!v[i][j].is_number()) throw InvalidArgument("model '" + model + "' parameter '" + key + "' has a non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  if (!m.allFinite()) throw InvalidArgument("model '" + model + "' parameter '" + key + "' has non-finite entries");
  return m;
}

void write_row_major(const Matrix& m, std::span<double> out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
}

void vdp_drift(std::span<const double> s, std::span<double> out) {
  const double x = s[0], y = s[1];
  out[0] = x - x * x * x / 3.0 - y;
  out[1] = x;
}

void vdp_drift_jacobian(std::span<const double> s, std::span<double> out) {
  const double x = s[0];
  out[0] = 1.0 - x * x;
  out[1] = -1.0;
  out[2] = 1.0;
  out[3] = 0.0;
}

// g(x) = (c0 + c1 x, c0 + c1 y) scaled by sigma.
SystemModel vanderpol(const std::string& name, double sigma, double c0, double c1) {
  SystemModel m;
  m.name = name;
  m.n = 2;
  m.d = 1;
  m.drift = vdp_drift;
  m.drift_jacobian = vdp_drift_jacobian;
  m.diffusion = [sigma, c0, c1](std::span<const double> s, std::span<double> out) {
    out[0] = sigma * (c0 + c1 * s[0]);
    out[1] = sigma * (c0 + c1 * s[1]);
  };
  m.diffusion_jacobian = [sigma, c1](std::span<const double>, std::size_t, std::span<double> out) {
    out[0] = sigma * c1;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = sigma * c1;
  };
  // J_G G = sigma^2 c1 (c0 + c1 x, c0 + c1 y), so its Jacobian is sigma^2 c1^2 I.
  const double shift = 0.5 * sigma * sigma * c1 * c1;
  m.corrected_drift_jacobian = [shift](std::span<const double> s, std::span<double> out) {
    vdp_drift_jacobian(s, out);
    out[0] -= shift;
    out[3] -= shift;
  };
  return m;
}

SystemModel linear_model(const std::string& name, Matrix a, std::vector<Matrix> bs) {
  const std::size_t n = static_cast<std::size_t>(a.rows());
  SystemModel m;
  m.name = name;
  m.n = n;
  m.d = bs.size();
  Matrix correction = Matrix::Zero(a.rows(), a.cols());
  for (const auto& b : bs) correction += 0.5 * b * b;
  const Matrix corrected = a - correction;

  m.drift = [a](std::span<const double> x, std::span<double> out) {
    Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Map<Vector> ov(out.data(), static_cast<Eigen::Index>(out.size()));
    ov.noalias() = a * xv;
  };
  m.drift_jacobian = [a](std::span<const double>, std::span<double> out) { write_row_major(a, out); };
  m.corrected_drift_jacobian = [corrected](std::span<const double>, std::span<double> out) {
    write_row_major(corrected, out);
  };
  m.diffusion = [bs, n](std::span<const double> x, std::span<double> out) {
    const std::size_t d = bs.size();
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l)
          s += bs[j](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) * x[l];
        out[i * d + j] = s;
      }
  };
  m.diffusion_jacobian = [bs](std::span<const double>, std::size_t j, std::span<double> out) {
    write_row_major(bs[j], out);
  };

  bool commutative = true;
  for (std::size_t j = 0; j < bs.size(); ++j)
    for (std::size_t k = j + 1; k < bs.size(); ++k) {
      const Matrix c = bs[j] * bs[k] - bs[k] * bs[j];
      const double scale = 1.0 + bs[j].norm() * bs[k].norm();
      if (c.norm() > 1e-12 * scale) commutative = false;
    }
  m.commutative_noise = commutative;

  std::vector<double> sigmas;
  for (const auto& b : bs) {
    const double s = b(0, 0);
    if ((b - s * Matrix::Identity(b.rows(), b.cols())).norm() != 0.0) {
      sigmas.clear();
      break;
    }
    sigmas.push_back(s);
  }
  if (sigmas.size() == bs.size()) m.linear_diffusion = sigmas;
  return m;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"vanderpol-multiplicative", "vanderpol-additive", "vanderpol-deterministic", "linear", "scalar-linear"};
}

SystemModel builtin(const std::string& name, const nlohmann::json& params) {
  SystemModel m;
  if (name == "vanderpol-multiplicative") {
    reject_unknown(name, params, {"sigma"});
    m = vanderpol(name, sigma_param(name, params), 1.0, 4.0);
  } else if (name == "vanderpol-additive") {
    reject_unknown(name, params, {"sigma"});
    m = vanderpol(name, sigma_param(name, params), 1.0, 0.0);
  } else if (name == "vanderpol-deterministic") {
    reject_unknown(name, params, {});
    m = vanderpol(name, 0.0, 0.0, 0.0);
    m.linear_diffusion = std::vector<double>{0.0};
  } else if (name == "scalar-linear") {
    reject_unknown(name, params, {"a", "sigma"});
    const double a = number_param(name, params, "a");
    const double sigma = number_param(name, params, "sigma");
    m = linear_model(name, Matrix::Constant(1, 1, a), {Matrix::Constant(1, 1, sigma)});
  } else if (name == "linear") {
    reject_unknown(name, params, {"A", "B", "sigma"});
    if (!params.is_object() || !params.contains("A")) missing(name, "A");
    Matrix a = matrix_param(name, "A", params.at("A"));
    const Eigen::Index n = a.rows();
    std::vector<Matrix> bs;
    const bool has_b = params.contains("B");
    const bool has_sigma = params.contains("sigma");
    if (has_b && has_sigma) throw InvalidArgument("model 'linear' takes either 'B' or 'sigma', not both");
    if (has_b) {
      const auto& list = params.at("B");
      if (!list.is_array() || list.empty()) throw InvalidArgument("model 'linear' parameter 'B' must be a non-empty list of matrices");
      for (const auto& item : list) {
        Matrix b = matrix_param(name, "B", item);
        if (b.rows() != n) throw DimensionMismatch("model 'linear' parameter 'B'", static_cast<std::size_t>(n), static_cast<std::size_t>(b.rows()));
        bs.push_back(std::move(b));
      }
    } else if (has_sigma) {
      const auto& s = params.at("sigma");
      std::vector<double> sigmas;
      if (s.is_number()) {
        sigmas.push_back(s.get<double>());
      } else if (s.is_array() && !s.empty() && std::all_of(s.begin(), s.end(), [](const auto& e) { return e.is_number(); })) {
        for (const auto& e : s) sigmas.push_back(e.get<double>());
      } else {
        throw InvalidArgument("model 'linear' parameter 'sigma' must be a number or a list of numbers");
      }
      for (double sg : sigmas) {
        if (!std::isfinite(sg)) throw InvalidArgument("model 'linear' parameter 'sigma' must be finite");
        bs.push_back(sg * Matrix::Identity(n, n));
      }
    } else {
      bs.push_back(Matrix::Zero(n, n));
    }
    m = linear_model(name, std::move(a), std::move(bs));
  } else {
    throw InvalidArgument("unknown builtin model '" + name + "'");
  }
  m.validate();
  return m;
}

SystemModel scaled(const SystemModel& model, double drift_scale, double diffusion_scale) {
  model.validate();
  SystemModel m = model;
  const double a = drift_scale, b = diffusion_scale;
  const std::size_t n = model.n, d = model.d;
  m.name = model.name + "*scaled";
  m.drift = [f = model.drift, a](std::span<const double> x, std::span<double> out) {
    f(x, out);
    for (double& v : out) v *= a;
  };
  m.diffusion = [g = model.diffusion, b](std::span<const double> x, std::span<double> out) {
    g(x, out);
    for (double& v : out) v *= b;
  };
  if (model.drift_jacobian) {
    m.drift_jacobian = [jf = model.drift_jacobian, a](std::span<const double> x, std::span<double> out) {
      jf(x, out);
      for (double& v : out) v *= a;
    };
  }
  if (model.diffusion_jacobian) {
    m.diffusion_jacobian = [jg = model.diffusion_jacobian, b](std::span<const double> x, std::size_t j,
                                                              std::span<double> out) {
      jg(x, j, out);
      for (double& v : out) v *= b;
    };
  }
  // J_corr = J_F - K with K the Jacobian of the correction; the correction scales with b^2.
  if (model.corrected_drift_jacobian && model.drift_jacobian) {
    m.corrected_drift_jacobian = [jf = model.drift_jacobian, jc = model.corrected_drift_jacobian, a, b,
                                  n](std::span<const double> x, std::span<double> out) {
      std::vector<double> f(n * n);
      jf(x, f);
      jc(x, out);
      for (std::size_t i = 0; i < n * n; ++i) out[i] = a * f[i] - b * b * (f[i] - out[i]);
    };
  } else {
    m.corrected_drift_jacobian = {};
  }
  if (model.linear_diffusion) {
    std::vector<double> s = *model.linear_diffusion;
    for (double& v : s) v *= b;
    m.linear_diffusion = s;
  }
  (void)d;
  return m;
}

SystemModel drift_only(std::string name, std::size_t n, FieldFn drift, FieldFn drift_jacobian) {
  SystemModel m;
  m.name = std::move(name);
  m.n = n;
  m.d = 1;
  m.drift = std::move(drift);
  m.drift_jacobian = std::move(drift_jacobian);
  m.diffusion = [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
  m.diffusion_jacobian = [](std::span<const double>, std::size_t, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  if (m.drift_jacobian) m.corrected_drift_jacobian = m.drift_jacobian;
  m.linear_diffusion = std::vector<double>{0.0};
  m.validate();
  return m;
}

double lipschitz_ratio_diagnostic(const SystemModel& model, const DomainBox& box, const NormSpec& norm,
                                  std::size_t samples, std::uint64_t seed) {
  if (box.dimension() != model.n) throw DimensionMismatch("domain box", model.n, box.dimension());
  CounterStream rng(seed, StreamTag::Diagnostic);
  std::vector<double> x(model.n), y(model.n), diff(model.n), fdiff(model.n);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < model.n; ++i) {
      x[i] = rng.uniform(box.lo()[i], box.hi()[i]);
      y[i] = rng.uniform(box.lo()[i], box.hi()[i]);
      diff[i] = x[i] - y[i];
    }
    const double dx = vector_norm(diff, norm);
    if (!(dx > 0.0)) continue;
    const Vector fx = eval_drift(model, x);
    const Vector fy = eval_drift(model, y);
    for (std::size_t i = 0; i < model.n; ++i) fdiff[i] = fx(static_cast<Eigen::Index>(i)) - fy(static_cast<Eigen::Index>(i));
    worst = std::max(worst, vector_norm(fdiff, norm) / dx);
  }
  return worst;
}

}  // namespace slc

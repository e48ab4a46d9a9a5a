#include "slc/slc.h"

#include <exception>
#include <new>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "models.hpp"
#include "norms.hpp"
#include "runner.hpp"

struct slc_model {
  slc::SystemModel model;
};

struct slc_report {
  std::string json;
  std::vector<slc::app::Table> tables;
  bool valid = true;
  std::string output_dir;
};

namespace {

thread_local std::string last_error;

slc_status fail(slc_status s, const char* what) {
  last_error = what;
  return s;
}

template <class F>
slc_status guard(F&& f) {
  try {
    f();
    return SLC_OK;
  } catch (const slc::DimensionMismatch& e) {
    return fail(SLC_ERR_DIMENSION, e.what());
  } catch (const slc::InvalidArgument& e) {
    return fail(SLC_ERR_INVALID_ARGUMENT, e.what());
  } catch (const slc::BlowUp& e) {
    return fail(SLC_ERR_BLOWUP, e.what());
  } catch (const slc::NumericalError& e) {
    return fail(SLC_ERR_NUMERICAL, e.what());
  } catch (const slc::Unsupported& e) {
    return fail(SLC_ERR_UNSUPPORTED, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SLC_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SLC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SLC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SLC_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (!p) throw slc::InvalidArgument(std::string(name) + " must not be NULL");
}

slc::NormSpec make_norm(const slc_norm* norm, std::size_t n) {
  if (!norm) return slc::NormSpec(slc::NormKind::L2);
  slc::NormKind kind;
  switch (norm->kind) {
    case SLC_NORM_L1: kind = slc::NormKind::L1; break;
    case SLC_NORM_L2: kind = slc::NormKind::L2; break;
    case SLC_NORM_LINF: kind = slc::NormKind::Linf; break;
    default: throw slc::InvalidArgument("unknown norm kind");
  }
  if (!norm->weight) return slc::NormSpec(kind);
  const auto dim = static_cast<Eigen::Index>(n);
  slc::Matrix p = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(norm->weight, dim, dim);
  return slc::NormSpec(kind, std::move(p));
}

slc::Matrix read_matrix(const double* a, std::size_t n) {
  require(a, "matrix");
  if (n == 0) throw slc::InvalidArgument("matrix dimension must be positive");
  const auto dim = static_cast<Eigen::Index>(n);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a, dim, dim);
}

void write_matrix(const slc::Matrix& m, double* out) {
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, m.rows(), m.cols()) = m;
}

slc::app::RunOverrides overrides(const uint64_t* seed, const size_t* realizations) {
  slc::app::RunOverrides o;
  if (seed) o.seed = *seed;
  if (realizations) o.realizations = *realizations;
  return o;
}

}  // namespace

extern "C" {

const char* slc_version(void) { return "1.0.0"; }

const char* slc_last_error(void) { return last_error.c_str(); }

const char* slc_status_string(slc_status status) {
  switch (status) {
    case SLC_OK: return "ok";
    case SLC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SLC_ERR_DIMENSION: return "dimension mismatch";
    case SLC_ERR_NUMERICAL: return "numerical failure";
    case SLC_ERR_BLOWUP: return "blow-up";
    case SLC_ERR_UNSUPPORTED: return "unsupported configuration";
    case SLC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

slc_status slc_vector_norm(const double* x, size_t n, const slc_norm* norm, double* out) {
  return guard([&] {
    require(x, "x");
    require(out, "out");
    *out = slc::vector_norm(std::span<const double>(x, n), make_norm(norm, n));
  });
}

slc_status slc_operator_norm(const double* a, size_t n, const slc_norm* norm, double* out) {
  return guard([&] {
    require(out, "out");
    *out = slc::operator_norm(read_matrix(a, n), make_norm(norm, n));
  });
}

slc_status slc_matrix_measure(const double* a, size_t n, const slc_norm* norm, double* out) {
  return guard([&] {
    require(out, "out");
    *out = slc::matrix_measure(read_matrix(a, n), make_norm(norm, n));
  });
}

slc_status slc_matrix_measure_limit(const double* a, size_t n, const slc_norm* norm, const double* ladder, size_t rungs,
                                    double* out) {
  return guard([&] {
    require(out, "out");
    if (!ladder && rungs) throw slc::InvalidArgument("ladder must not be NULL when rungs > 0");
    const auto l = ladder ? std::span<const double>(ladder, rungs) : slc::default_measure_ladder();
    *out = slc::matrix_measure_limit(read_matrix(a, n), make_norm(norm, n), l);
  });
}

slc_status slc_model_create_builtin(const char* name, const char* params_json, slc_model** out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    *out = nullptr;
    const auto params = params_json ? nlohmann::json::parse(params_json) : nlohmann::json::object();
    *out = new slc_model{slc::builtin(name, params)};
  });
}

void slc_model_destroy(slc_model* model) { delete model; }

slc_status slc_model_dimensions(const slc_model* model, size_t* n, size_t* d) {
  return guard([&] {
    require(model, "model");
    if (n) *n = model->model.n;
    if (d) *d = model->model.d;
  });
}

slc_status slc_model_drift(const slc_model* model, const double* x, double* out) {
  return guard([&] {
    require(model, "model");
    require(x, "x");
    require(out, "out");
    const auto v = slc::eval_drift(model->model, std::span<const double>(x, model->model.n));
    std::copy(v.data(), v.data() + v.size(), out);
  });
}

slc_status slc_model_diffusion(const slc_model* model, const double* x, double* out) {
  return guard([&] {
    require(model, "model");
    require(x, "x");
    require(out, "out");
    write_matrix(slc::eval_diffusion(model->model, std::span<const double>(x, model->model.n)), out);
  });
}

slc_status slc_model_corrected_drift(const slc_model* model, const double* x, double* out) {
  return guard([&] {
    require(model, "model");
    require(x, "x");
    require(out, "out");
    const auto v = slc::corrected_drift(model->model, std::span<const double>(x, model->model.n));
    std::copy(v.data(), v.data() + v.size(), out);
  });
}

slc_status slc_model_jacobian(const slc_model* model, slc_jacobian_kind which, size_t column, const double* x, double* out) {
  return guard([&] {
    require(model, "model");
    require(x, "x");
    require(out, "out");
    slc::JacobianTarget target;
    switch (which) {
      case SLC_JACOBIAN_DRIFT: target = slc::JacobianTarget::drift(); break;
      case SLC_JACOBIAN_DIFFUSION_COLUMN:
        if (column >= model->model.d)
          throw slc::InvalidArgument("diffusion column " + std::to_string(column) + " out of range");
        target = slc::JacobianTarget::diffusion_column(column);
        break;
      case SLC_JACOBIAN_CORRECTED_DRIFT: target = slc::JacobianTarget::corrected_drift(); break;
      default: throw slc::InvalidArgument("unknown Jacobian kind");
    }
    write_matrix(slc::jacobian(model->model, target, std::span<const double>(x, model->model.n)), out);
  });
}

slc_status slc_model_lk_apply(const slc_model* model, const double* x, size_t k, double* out) {
  return guard([&] {
    require(model, "model");
    require(x, "x");
    require(out, "out");
    write_matrix(slc::lk_apply(model->model, std::span<const double>(x, model->model.n), k), out);
  });
}

slc_status slc_config_validate(const char* subcommand, const char* config_json, const uint64_t* seed,
                               const size_t* realizations, slc_report** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const auto v = slc::app::validate(subcommand ? subcommand : "", config_json ? config_json : "",
                                      overrides(seed, realizations));
    nlohmann::json j{{"valid", v.errors.empty()}, {"errors", v.errors},
                     {"config", v.config ? v.config->resolved : nlohmann::json(nullptr)}};
    *out = new slc_report{j.dump(2) + "\n", {}, true, {}};
  });
}

slc_status slc_run(const char* subcommand, const char* config_json, const uint64_t* seed, const size_t* realizations,
                   size_t threads, slc_report** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const auto v = slc::app::validate(subcommand ? subcommand : "", config_json ? config_json : "",
                                      overrides(seed, realizations));
    if (!v.config) {
      std::string msg = "invalid configuration:";
      for (const auto& e : v.errors) msg += "\n  " + e;
      throw slc::InvalidArgument(msg);
    }
    auto rep = slc::app::run(*v.config, threads);
    *out = new slc_report{rep.summary.dump(2) + "\n", std::move(rep.tables), rep.valid, std::move(rep.output_dir)};
  });
}

void slc_report_destroy(slc_report* report) { delete report; }

const char* slc_report_json(const slc_report* report) { return report ? report->json.c_str() : ""; }

int slc_report_valid(const slc_report* report) { return report && report->valid ? 1 : 0; }

const char* slc_report_output_dir(const slc_report* report) { return report ? report->output_dir.c_str() : ""; }

size_t slc_report_table_count(const slc_report* report) { return report ? report->tables.size() : 0; }

const char* slc_report_table_name(const slc_report* report, size_t index) {
  return report && index < report->tables.size() ? report->tables[index].name.c_str() : nullptr;
}

const char* slc_report_table_csv(const slc_report* report, size_t index) {
  return report && index < report->tables.size() ? report->tables[index].csv.c_str() : nullptr;
}

}  // extern "C"

/* Contraction analysis of ODEs and Ito SDEs: matrix measures, logarithmic Lipschitz
 * constants, stochastic contraction bounds and Milstein Monte Carlo experiments.
 *
 * All functions return an slc_status. On failure, slc_last_error() returns a message
 * for the calling thread that stays valid until the next failing call on that thread.
 * Matrices are dense, row-major. */
#ifndef SLC_SLC_H
#define SLC_SLC_H

#include <stddef.h>
#include <stdint.h>

#if defined(SLC_BUILDING)
#define SLC_API __attribute__((visibility("default")))
#else
#define SLC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slc_status {
  SLC_OK = 0,
  SLC_ERR_INVALID_ARGUMENT = 1,
  SLC_ERR_DIMENSION = 2,
  SLC_ERR_NUMERICAL = 3,
  SLC_ERR_BLOWUP = 4,
  SLC_ERR_UNSUPPORTED = 5,
  SLC_ERR_INTERNAL = 6
} slc_status;

typedef enum slc_norm_kind { SLC_NORM_L1 = 0, SLC_NORM_L2 = 1, SLC_NORM_LINF = 2 } slc_norm_kind;

/* ||x|| = ||P x||_kind. weight is NULL (P = I) or an n x n row-major matrix. */
typedef struct slc_norm {
  slc_norm_kind kind;
  const double* weight;
} slc_norm;

typedef enum slc_jacobian_kind {
  SLC_JACOBIAN_DRIFT = 0,
  SLC_JACOBIAN_DIFFUSION_COLUMN = 1,
  SLC_JACOBIAN_CORRECTED_DRIFT = 2
} slc_jacobian_kind;

typedef struct slc_model slc_model;
typedef struct slc_report slc_report;

SLC_API const char* slc_version(void);
SLC_API const char* slc_last_error(void);
SLC_API const char* slc_status_string(slc_status status);

/* ---- norms ---- */
SLC_API slc_status slc_vector_norm(const double* x, size_t n, const slc_norm* norm, double* out);
SLC_API slc_status slc_operator_norm(const double* a, size_t n, const slc_norm* norm, double* out);
SLC_API slc_status slc_matrix_measure(const double* a, size_t n, const slc_norm* norm, double* out);
/* ladder may be NULL (rungs = 0) for the default ladder. */
SLC_API slc_status slc_matrix_measure_limit(const double* a, size_t n, const slc_norm* norm, const double* ladder,
                                            size_t rungs, double* out);

/* ---- models ---- */
/* name: vanderpol-multiplicative, vanderpol-additive, vanderpol-deterministic, linear, scalar-linear.
 * params_json: JSON object, e.g. {"sigma": 0.35}; NULL means {}. */
SLC_API slc_status slc_model_create_builtin(const char* name, const char* params_json, slc_model** out);
SLC_API void slc_model_destroy(slc_model* model);
SLC_API slc_status slc_model_dimensions(const slc_model* model, size_t* n, size_t* d);
/* out: n */
SLC_API slc_status slc_model_drift(const slc_model* model, const double* x, double* out);
/* out: n x d */
SLC_API slc_status slc_model_diffusion(const slc_model* model, const double* x, double* out);
/* F - 1/2 sum_j J_{G_j} G_j; out: n */
SLC_API slc_status slc_model_corrected_drift(const slc_model* model, const double* x, double* out);
/* column is used for SLC_JACOBIAN_DIFFUSION_COLUMN only; out: n x n */
SLC_API slc_status slc_model_jacobian(const slc_model* model, slc_jacobian_kind which, size_t column, const double* x,
                                      double* out);
/* (L_k G)_{ij} = sum_l G_lk dG_ij/dx_l with k 0-based; out: n x d */
SLC_API slc_status slc_model_lk_apply(const slc_model* model, const double* x, size_t k, double* out);

/* ---- runs ---- */
/* Validates a run configuration (JSON text) for a subcommand. Always produces a report whose
 * JSON is {"valid": bool, "errors": [...], "config": resolved-config-or-null}. subcommand may be
 * NULL or "" to take it from the config. seed / realizations override the config when non-NULL. */
SLC_API slc_status slc_config_validate(const char* subcommand, const char* config_json, const uint64_t* seed,
                                       const size_t* realizations, slc_report** out);

/* Validates and runs. On success the report JSON is {subcommand, config, seed, results, timings}
 * and the report carries CSV tables. An invalid configuration returns SLC_ERR_INVALID_ARGUMENT
 * with every error joined in slc_last_error(). threads only changes scheduling. */
SLC_API slc_status slc_run(const char* subcommand, const char* config_json, const uint64_t* seed,
                           const size_t* realizations, size_t threads, slc_report** out);

SLC_API void slc_report_destroy(slc_report* report);
SLC_API const char* slc_report_json(const slc_report* report);
/* 1 when the run's Monte Carlo part is valid, 0 when too many realizations blew up. */
SLC_API int slc_report_valid(const slc_report* report);
/* Output directory named by the config's "output_dir", or "" if none. */
SLC_API const char* slc_report_output_dir(const slc_report* report);
SLC_API size_t slc_report_table_count(const slc_report* report);
SLC_API const char* slc_report_table_name(const slc_report* report, size_t index);
SLC_API const char* slc_report_table_csv(const slc_report* report, size_t index);

#ifdef __cplusplus
}
#endif

#endif

#include <math.h>
#include <stdio.h>
#include <string.h>

#include <slc/slc.h>

static int failures = 0;

#define EXPECT(cond)                                                \
  do {                                                              \
    if (!(cond)) {                                                  \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                   \
    }                                                               \
  } while (0)

static void norms(void) {
  const double rot[4] = {0.0, -1.0, 1.0, 0.0};
  const double diag[4] = {-1.0, 0.0, 0.0, -2.0};
  slc_norm l2 = {SLC_NORM_L2, NULL};
  slc_norm linf = {SLC_NORM_LINF, NULL};
  double v = 1.0;
  EXPECT(slc_matrix_measure(rot, 2, &l2, &v) == SLC_OK && fabs(v) < 1e-12);
  EXPECT(slc_matrix_measure(diag, 2, &linf, &v) == SLC_OK && fabs(v + 1.0) < 1e-12);
  EXPECT(slc_matrix_measure_limit(diag, 2, &l2, NULL, 0, &v) == SLC_OK && fabs(v + 1.0) < 1e-6);
  EXPECT(slc_operator_norm(diag, 2, &l2, &v) == SLC_OK && fabs(v - 2.0) < 1e-12);
  const double x[2] = {3.0, -4.0};
  EXPECT(slc_vector_norm(x, 2, &l2, &v) == SLC_OK && fabs(v - 5.0) < 1e-12);

  const double singular[4] = {1.0, 0.0, 0.0, 0.0};
  slc_norm bad = {SLC_NORM_L2, singular};
  EXPECT(slc_matrix_measure(rot, 2, &bad, &v) == SLC_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(slc_last_error()) > 0);
  EXPECT(slc_matrix_measure(NULL, 2, &l2, &v) == SLC_ERR_INVALID_ARGUMENT);
  const double ladder[2] = {1e-3, 2e-3};
  EXPECT(slc_matrix_measure_limit(diag, 2, &l2, ladder, 2, &v) == SLC_ERR_INVALID_ARGUMENT);
}

static void models(void) {
  slc_model* m = NULL;
  EXPECT(slc_model_create_builtin("vanderpol-multiplicative", "{\"sigma\": 0.35}", &m) == SLC_OK);
  size_t n = 0, d = 0;
  EXPECT(slc_model_dimensions(m, &n, &d) == SLC_OK && n == 2 && d == 1);
  const double x[2] = {1.0, 0.5};
  double f[2], g[2], j[4], c[2];
  EXPECT(slc_model_drift(m, x, f) == SLC_OK && fabs(f[0] - 1.0 / 6.0) < 1e-12 && fabs(f[1] - 1.0) < 1e-12);
  EXPECT(slc_model_diffusion(m, x, g) == SLC_OK && fabs(g[0] - 1.75) < 1e-12 && fabs(g[1] - 1.05) < 1e-12);
  EXPECT(slc_model_jacobian(m, SLC_JACOBIAN_CORRECTED_DRIFT, 0, x, j) == SLC_OK);
  EXPECT(slc_model_corrected_drift(m, x, c) == SLC_OK && fabs(c[0] - (1.0 / 6.0 - 0.5 * 0.35 * 4.0 * 1.75)) < 1e-12);
  EXPECT(slc_model_jacobian(m, SLC_JACOBIAN_DIFFUSION_COLUMN, 3, x, j) != SLC_OK);
  EXPECT(slc_model_lk_apply(m, x, 0, g) == SLC_OK && fabs(g[0] - 0.35 * 4.0 * 1.75) < 1e-12);
  slc_model_destroy(m);

  m = NULL;
  EXPECT(slc_model_create_builtin("vanderpol-multiplicative", NULL, &m) == SLC_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(slc_last_error(), "sigma") != NULL);
  EXPECT(m == NULL);
  EXPECT(slc_model_create_builtin("lorenz", NULL, &m) == SLC_ERR_INVALID_ARGUMENT);
  EXPECT(slc_model_create_builtin("scalar-linear", "[1,", &m) == SLC_ERR_INVALID_ARGUMENT);
  slc_model_destroy(NULL);
}

static void runs(void) {
  slc_report* r = NULL;
  EXPECT(slc_config_validate(NULL, "{\"subcommand\": \"measure\", \"h\": -1}", NULL, NULL, &r) == SLC_OK);
  EXPECT(strstr(slc_report_json(r), "\"valid\": false") != NULL);
  slc_report_destroy(r);

  r = NULL;
  EXPECT(slc_run("measure", "{\"matrix\": [[0, -1], [1, 0]]}", NULL, NULL, 1, &r) == SLC_OK);
  EXPECT(strstr(slc_report_json(r), "\"mu\": 0.0") != NULL);
  EXPECT(slc_report_valid(r) == 1);
  EXPECT(strcmp(slc_report_output_dir(r), "") == 0);
  slc_report_destroy(r);

  r = NULL;
  const uint64_t seed = 5;
  EXPECT(slc_run("dance", "{}", &seed, NULL, 1, &r) == SLC_ERR_INVALID_ARGUMENT);
  EXPECT(r == NULL);
  EXPECT(strstr(slc_last_error(), "unknown subcommand") != NULL);
  EXPECT(slc_run("measure", "{\"matrix\": [[1]]}", NULL, NULL, 0, &r) == SLC_ERR_INVALID_ARGUMENT);

  r = NULL;
  EXPECT(slc_run("simulate",
                 "{\"model\": {\"name\": \"scalar-linear\", \"params\": {\"a\": -1, \"sigma\": 0.5}},"
                 " \"initials\": [[1.0]], \"T\": 0.01, \"h\": 0.001, \"realizations\": 2}",
                 NULL, NULL, 2, &r) == SLC_OK);
  EXPECT(slc_report_table_count(r) >= 1);
  EXPECT(slc_report_table_name(r, 0) != NULL);
  EXPECT(slc_report_table_csv(r, 1000) == NULL);
  slc_report_destroy(r);

  EXPECT(strcmp(slc_status_string(SLC_ERR_BLOWUP), "") != 0);
  EXPECT(strlen(slc_version()) > 0);
}

int main(void) {
  norms();
  models();
  runs();
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("C API: all checks passed\n");
  return failures ? 1 : 0;
}

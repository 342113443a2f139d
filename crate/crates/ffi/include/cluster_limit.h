#ifndef CLUSTER_LIMIT_H
#define CLUSTER_LIMIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every call.
 */
typedef enum ClStatus {
  CL_STATUS_OK = 0,
  CL_STATUS_NULL_POINTER = 1,
  CL_STATUS_INVALID_UTF8 = 2,
  CL_STATUS_INVALID_JSON = 3,
  CL_STATUS_INVALID_ARGUMENT = 4,
  /*
   The quantity is undefined for this input, e.g. no known extremal index.
   */
  CL_STATUS_NOT_AVAILABLE = 5,
  CL_STATUS_BUFFER_TOO_SMALL = 6,
  CL_STATUS_CONFIG = 7,
  CL_STATUS_RUNTIME = 8,
  CL_STATUS_PANIC = 9,
} ClStatus;

/*
 Opaque canonical cluster measure.
 */
typedef struct ClCanonical ClCanonical;

/*
 Opaque sequence model.
 */
typedef struct ClModel ClModel;

/*
 Opaque convergence report.
 */
typedef struct ClReport ClReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *cl_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *cl_version(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed already.
 */
void cl_string_free(char *s);

/*
 Parses and validates a model from JSON such as
 `{"kind":"moving_max","m":2,"alpha":1.0}`.

 # Safety
 `json` must be a NUL-terminated string and `model` a valid pointer.
 */
enum ClStatus cl_model_from_json(const char *json, struct ClModel **model);

/*
 # Safety
 `model` must come from `cl_model_from_json` or be null.
 */
void cl_model_free(struct ClModel *model);

/*
 Marginal tail probabilities `P(|ξ| > x)`, `P(ξ > x)` and `P(ξ < -x)`.
 Any of the output pointers may be null.

 # Safety
 `model` must be a live handle; non-null outputs must be writable.
 */
enum ClStatus cl_model_tail(const struct ClModel *model,
                            double x,
                            double *modulus,
                            double *upper,
                            double *lower);

/*
 Exceedance level `u_n` with `n P(ξ > u_n) = 1`.

 # Safety
 `model` must be a live handle and `value` writable.
 */
enum ClStatus cl_model_level_u(const struct ClModel *model, size_t n, double *value);

/*
 Scaling `a_n` with `n P(|ξ| > a_n) = 1`.

 # Safety
 `model` must be a live handle and `value` writable.
 */
enum ClStatus cl_model_scale_a(const struct ClModel *model, size_t n, double *value);

/*
 Extremal index in closed form; `CL_STATUS_NOT_AVAILABLE` when there is none.

 # Safety
 `model` must be a live handle and `value` writable.
 */
enum ClStatus cl_model_known_theta(const struct ClModel *model, double *value);

/*
 Simulates `n` values into `buf`, which must hold at least `n` doubles.

 # Safety
 `model` must be a live handle and `buf` valid for `len` writes.
 */
enum ClStatus cl_model_sample_path(const struct ClModel *model,
                                   size_t n,
                                   uint64_t seed,
                                   double *buf,
                                   size_t len);

/*
 Parses and validates a canonical measure from JSON such as
 `{"variant":"compound_poisson_uniform","a":0.5,"pi":[0,1]}`.

 # Safety
 `json` must be a NUL-terminated string and `canonical` a valid pointer.
 */
enum ClStatus cl_canonical_from_json(const char *json, struct ClCanonical **canonical);

/*
 # Safety
 `canonical` must come from `cl_canonical_from_json` or be null.
 */
void cl_canonical_free(struct ClCanonical *canonical);

/*
 Intensity of clusters reaching modulus above `x`.

 # Safety
 `canonical` must be a live handle and `value` writable.
 */
enum ClStatus cl_canonical_tail_mass(const struct ClCanonical *canonical, double x, double *value);

/*
 Probability that the limit has no point with modulus above `x`.

 # Safety
 `canonical` must be a live handle and `value` writable.
 */
enum ClStatus cl_canonical_void_probability(const struct ClCanonical *canonical,
                                            double x,
                                            double *value);

/*
 Laplace functional at a test function given as
 `{"knots":[...],"values":[...]}`. `half_width` may be null; it is zero
 when the value is exact.

 # Safety
 `canonical` must be a live handle, `f_json` NUL-terminated, `value` writable.
 */
enum ClStatus cl_canonical_laplace(const struct ClCanonical *canonical,
                                   const char *f_json,
                                   double *value,
                                   double *half_width);

/*
 Draws the limit restricted to modulus above `eps` and returns it as JSON.
 Free the result with `cl_string_free`.

 # Safety
 `canonical` must be a live handle and `json` writable.
 */
enum ClStatus cl_canonical_sample_json(const struct ClCanonical *canonical,
                                       double eps,
                                       uint64_t seed,
                                       char **json);

/*
 Runs an experiment config (TOML text) and writes its outputs under
 `out_dir`, like the command-line tool. `exit_code` receives 0 when every
 check passed and 1 otherwise.

 # Safety
 `toml` and `out_dir` must be NUL-terminated and `exit_code` writable.
 */
enum ClStatus cl_run_config(const char *toml, const char *out_dir, int32_t *exit_code);

/*
 Evaluates a `verify` config in memory without writing files.

 # Safety
 `toml` must be NUL-terminated and `report` a valid pointer.
 */
enum ClStatus cl_verify_config(const char *toml, struct ClReport **report);

/*
 # Safety
 `report` must come from `cl_verify_config` or be null.
 */
void cl_report_free(struct ClReport *report);

/*
 Overall verdict and row count. Either output may be null.

 # Safety
 `report` must be a live handle; non-null outputs must be writable.
 */
enum ClStatus cl_report_summary(const struct ClReport *report, bool *pass, size_t *rows);

/*
 The full report as JSON. Free the result with `cl_string_free`.

 # Safety
 `report` must be a live handle and `json` writable.
 */
enum ClStatus cl_report_to_json(const struct ClReport *report, char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLUSTER_LIMIT_H */

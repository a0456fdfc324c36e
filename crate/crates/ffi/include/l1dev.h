#ifndef L1DEV_H
#define L1DEV_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum L1devStatus {
  L1DEV_STATUS_OK = 0,
  L1DEV_STATUS_NULL_POINTER = 1,
  L1DEV_STATUS_VALIDATION = 2,
  L1DEV_STATUS_DOMAIN = 3,
  L1DEV_STATUS_CAPACITY = 4,
  L1DEV_STATUS_SYNTAX = 5,
  L1DEV_STATUS_CONFIG = 6,
  L1DEV_STATUS_USAGE = 7,
  L1DEV_STATUS_IO = 8,
  L1DEV_STATUS_INVALID_UTF8 = 9,
  L1DEV_STATUS_PANIC = 10,
} L1devStatus;

typedef enum L1devBoundFamily {
  L1DEV_BOUND_FAMILY_WEISSMAN_UNION = 0,
  L1DEV_BOUND_FAMILY_WEISSMAN_EXACT = 1,
  L1DEV_BOUND_FAMILY_DEVROYE = 2,
  L1DEV_BOUND_FAMILY_AGRAWAL = 3,
} L1devBoundFamily;

/**
 * Which deviation a Monte Carlo estimate samples.
 */
typedef enum L1devSourceKind {
  /**
   * `‖p̂ − p‖₁` with `p̂ = Multinomial(n, uniform)/n`.
   */
  L1DEV_SOURCE_KIND_MULTINOMIAL = 0,
  /**
   * `‖p̂ − p‖₁` with `p̂ ~ Dirichlet(n/S, …, n/S)`.
   */
  L1DEV_SOURCE_KIND_DIRICHLET = 1,
  /**
   * The limit `Z_S` (`n` is ignored).
   */
  L1DEV_SOURCE_KIND_LIMIT = 2,
} L1devSourceKind;

typedef enum L1devOutcome {
  L1DEV_OUTCOME_VIOLATED = 0,
  L1DEV_OUTCOME_CONSISTENT = 1,
  L1DEV_OUTCOME_INCONCLUSIVE = 2,
} L1devOutcome;

typedef enum L1devFormat {
  L1DEV_FORMAT_CSV = 0,
  L1DEV_FORMAT_JSON = 1,
} L1devFormat;

/**
 * Opaque parsed experiment config.
 */
typedef struct L1devConfig L1devConfig;

/**
 * Opaque Helmert basis of order S.
 */
typedef struct L1devHelmert L1devHelmert;

/**
 * Opaque experiment report.
 */
typedef struct L1devReport L1devReport;

typedef struct L1devTailEstimate {
  double threshold;
  uint64_t exceedance_count;
  uint64_t trials;
  double point;
  double ci_low;
  double ci_high;
  double ci_level;
} L1devTailEstimate;

typedef struct L1devVerdict {
  double epsilon;
  /**
   * Devroye regime flag; always true for the other families.
   */
  bool bound_valid;
  struct L1devTailEstimate estimate;
  double claimed_delta;
  enum L1devOutcome outcome;
} L1devVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next call
 * that fails on the same thread; never NULL.
 */
const char *l1dev_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *l1dev_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library that has not been freed.
 */
void l1dev_string_free(char *s);

/**
 * ε(n, S, δ) for `family`. `out_valid` (may be NULL) receives the Devroye
 * regime flag.
 *
 * # Safety
 * `out_epsilon` must be writable; `out_valid` must be NULL or writable.
 */
enum L1devStatus l1dev_bound_epsilon(enum L1devBoundFamily family,
                                     uint64_t n,
                                     size_t s,
                                     double delta,
                                     double *out_epsilon,
                                     bool *out_valid);

bool l1dev_devroye_valid(size_t s, double delta);

/**
 * `‖phat − p‖₁`. Both inputs must be probability vectors of length `len`.
 *
 * # Safety
 * `phat` and `p` must point to `len` readable doubles; `out` must be writable.
 */
enum L1devStatus l1dev_l1_deviation(const double *phat, const double *p, size_t len, double *out);

/**
 * `Z_n = (D/2)·‖phat − p‖₁`; `out_maximizer` (may be NULL) receives the
 * maximizing vertex of `[0, D]^len`.
 *
 * # Safety
 * `phat` and `p` must point to `len` readable doubles; `out_z` must be
 * writable; `out_maximizer` must be NULL or point to `len` writable doubles.
 */
enum L1devStatus l1dev_z_n(const double *phat,
                           const double *p,
                           size_t len,
                           double d,
                           double *out_z,
                           double *out_maximizer);

/**
 * # Safety
 * `out` must be writable.
 */
enum L1devStatus l1dev_expected_z_s(size_t s, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum L1devStatus l1dev_anticoncentration_threshold(size_t s, double delta, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum L1devStatus l1dev_gaussian_lipschitz_tail(double t, double *out);

/**
 * Draws Multinomial(n, p) counts for stream `(seed, trial)`.
 *
 * # Safety
 * `p` must point to `len` readable doubles and `out_counts` to `len` writable `uint64_t`.
 */
enum L1devStatus l1dev_sample_multinomial(const double *p,
                                          size_t len,
                                          uint64_t n,
                                          uint64_t seed,
                                          uint64_t trial,
                                          uint64_t *out_counts);

/**
 * Draws a Dirichlet(alpha) vector for stream `(seed, trial)`.
 *
 * # Safety
 * `alpha` must point to `len` readable doubles and `out` to `len` writable doubles.
 */
enum L1devStatus l1dev_sample_dirichlet(const double *alpha,
                                        size_t len,
                                        uint64_t seed,
                                        uint64_t trial,
                                        double *out);

/**
 * Exact `P(‖c/n − p‖₁ ≥ threshold)` by enumeration.
 *
 * # Safety
 * `p` must point to `len` readable doubles; `out` must be writable.
 */
enum L1devStatus l1dev_exact_tail_small(const double *p,
                                        size_t len,
                                        uint64_t n,
                                        double threshold,
                                        double *out);

/**
 * Monte Carlo `P(X ≥ threshold)` with a 95% Clopper–Pearson interval.
 * `workers = 0` uses all cores; results do not depend on it.
 *
 * # Safety
 * `out` must be writable.
 */
enum L1devStatus l1dev_estimate_tail(enum L1devSourceKind kind,
                                     size_t s,
                                     uint64_t n,
                                     double d,
                                     double threshold,
                                     uint64_t trials,
                                     uint64_t seed,
                                     uint32_t workers,
                                     struct L1devTailEstimate *out);

/**
 * Falsification verdict for a bound at uniform `p`, multinomial sampling.
 *
 * # Safety
 * `out` must be writable.
 */
enum L1devStatus l1dev_falsify(enum L1devBoundFamily family,
                               uint64_t n,
                               size_t s,
                               double delta,
                               uint64_t trials,
                               uint64_t seed,
                               uint32_t workers,
                               struct L1devVerdict *out);

/**
 * # Safety
 * `out` must be writable. The handle must be released with [`l1dev_helmert_free`].
 */
enum L1devStatus l1dev_helmert_new(size_t s, struct L1devHelmert **out);

/**
 * # Safety
 * `h` must be NULL or a live handle from [`l1dev_helmert_new`].
 */
void l1dev_helmert_free(struct L1devHelmert *h);

/**
 * Order S of the basis, or 0 for NULL.
 *
 * # Safety
 * `h` must be NULL or a live handle.
 */
size_t l1dev_helmert_dim(const struct L1devHelmert *h);

/**
 * Dense S×S matrix, row-major.
 *
 * # Safety
 * `h` must be a live handle; `out` must point to S·S writable doubles.
 */
enum L1devStatus l1dev_helmert_matrix(const struct L1devHelmert *h, double *out);

/**
 * `Uᵀw` in O(S).
 *
 * # Safety
 * `h` must be a live handle; `w` and `out` must point to S doubles.
 */
enum L1devStatus l1dev_helmert_apply_transpose(const struct L1devHelmert *h,
                                               const double *w,
                                               double *out);

/**
 * One draw of `Z_S` at scale `d` for stream `(seed, trial)`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum L1devStatus l1dev_helmert_sample_z(const struct L1devHelmert *h,
                                        double d,
                                        uint64_t seed,
                                        uint64_t trial,
                                        double *out);

/**
 * Parses experiment config text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable. Release
 * the handle with [`l1dev_config_free`].
 */
enum L1devStatus l1dev_config_parse(const char *text, struct L1devConfig **out);

/**
 * Overrides the worker count; 0 means all cores.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum L1devStatus l1dev_config_set_workers(struct L1devConfig *cfg, uint32_t workers);

/**
 * Number of tasks in the config, or 0 for NULL.
 *
 * # Safety
 * `cfg` must be NULL or a live handle.
 */
size_t l1dev_config_task_count(const struct L1devConfig *cfg);

/**
 * # Safety
 * `cfg` must be NULL or a live handle.
 */
void l1dev_config_free(struct L1devConfig *cfg);

/**
 * Runs every task of `cfg`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable. Release the report
 * with [`l1dev_report_free`].
 */
enum L1devStatus l1dev_experiment_run(const struct L1devConfig *cfg, struct L1devReport **out);

/**
 * Loads a report previously emitted as JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum L1devStatus l1dev_report_from_json(const char *json, struct L1devReport **out);

/**
 * # Safety
 * `report` must be NULL or a live handle.
 */
void l1dev_report_free(struct L1devReport *report);

/**
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t l1dev_report_row_count(const struct L1devReport *report);

/**
 * True when any falsify row is Violated.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
bool l1dev_report_any_violated(const struct L1devReport *report);

/**
 * Serializes the report. Release `*out` with [`l1dev_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum L1devStatus l1dev_report_emit(const struct L1devReport *report,
                                   enum L1devFormat format,
                                   char **out);

/**
 * Plot data for one task. Release `*out` with [`l1dev_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `task_id` a NUL-terminated string; `out` writable.
 */
enum L1devStatus l1dev_report_plot_data(const struct L1devReport *report,
                                        const char *task_id,
                                        char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L1DEV_H */

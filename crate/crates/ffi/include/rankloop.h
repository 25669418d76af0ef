#ifndef RANKLOOP_H
#define RANKLOOP_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_ARGUMENT = 2,
  RL_STATUS_PARSE_ERROR = 3,
  RL_STATUS_CONTINUATION_FAILED = 4,
  RL_STATUS_NEAR_DEGENERATE = 5,
  /**
   * The detector hit its cell budget. The result handle is still written.
   */
  RL_STATUS_BUDGET_EXCEEDED = 6,
  RL_STATUS_BUFFER_TOO_SMALL = 7,
  RL_STATUS_PANIC = 8,
} RlStatus;

typedef enum RlClassification {
  RL_CLASSIFICATION_NO_RANK_LOSS = 0,
  RL_CLASSIFICATION_RANK_LOSS_INSIDE = 1,
  RL_CLASSIFICATION_INCONCLUSIVE = 2,
} RlClassification;

typedef enum RlGauge {
  RL_GAUGE_JOINT = 0,
  RL_GAUGE_U_MVD = 1,
  RL_GAUGE_V_MVD = 2,
} RlGauge;

/**
 * Output of a rank-loss search.
 */
typedef struct RlDetection RlDetection;

/**
 * Parametrized matrix family.
 */
typedef struct RlFamily RlFamily;

/**
 * Accrued phases around one loop.
 */
typedef struct RlPhaseReport RlPhaseReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into this library.
 */
const char *rl_last_error_message(void);

/**
 * Parses a family from its JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RlStatus rl_family_from_json(const char *json, struct RlFamily **out);

/**
 * # Safety
 * `f` must be null or a handle from [`rl_family_from_json`] not yet freed.
 */
void rl_family_free(struct RlFamily *f);

/**
 * # Safety
 * `f` must be a live family handle and `n` a valid pointer.
 */
enum RlStatus rl_family_dim(const struct RlFamily *f, size_t *n);

/**
 * Writes A(x, y) row-major as interleaved (re, im) pairs: `2 n²` values.
 *
 * # Safety
 * `f` must be a live family handle and `buf` must hold `len` doubles.
 */
enum RlStatus rl_family_eval(const struct RlFamily *f, double x, double y, double *buf, size_t len);

/**
 * Writes the `n` singular values of A(x, y) in descending order.
 *
 * # Safety
 * `f` must be a live family handle and `sigma` must hold `len` doubles.
 */
enum RlStatus rl_singular_values(const struct RlFamily *f,
                                 double x,
                                 double y,
                                 double *sigma,
                                 size_t len);

/**
 * Continues the SVD around a loop given as JSON and reports accrued phases.
 * `gauge` is one of the [`RlGauge`] values.
 *
 * # Safety
 * `f` must be a live family handle, `loop_json` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum RlStatus rl_loop_phases(const struct RlFamily *f,
                             const char *loop_json,
                             int32_t gauge,
                             struct RlPhaseReport **out);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
void rl_phase_report_free(struct RlPhaseReport *r);

/**
 * Number of phases, one per singular value.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
size_t rl_phase_report_len(const struct RlPhaseReport *r);

/**
 * Writes the accrued phases, each in (-pi, pi].
 *
 * # Safety
 * `r` must be a live report handle and `beta` must hold `len` doubles.
 */
enum RlStatus rl_phase_report_beta(const struct RlPhaseReport *r, double *beta, size_t len);

/**
 * Phase sum reduced to (-pi, pi], or NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
double rl_phase_report_sum(const struct RlPhaseReport *r);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
enum RlClassification rl_phase_report_classification(const struct RlPhaseReport *r);

/**
 * Searches a box for rank-loss points with default options, overridden by
 * `max_cells` when it is nonzero. On `RL_STATUS_BUDGET_EXCEEDED` the partial
 * result is still written to `out`.
 *
 * # Safety
 * `f` must be a live family handle and `out` a valid pointer.
 */
enum RlStatus rl_detect(const struct RlFamily *f,
                        double xmin,
                        double xmax,
                        double ymin,
                        double ymax,
                        size_t max_cells,
                        struct RlDetection **out);

/**
 * # Safety
 * `d` must be null or a live detection handle.
 */
void rl_detection_free(struct RlDetection *d);

/**
 * # Safety
 * `d` must be null or a live detection handle.
 */
size_t rl_detection_len(const struct RlDetection *d);

/**
 * # Safety
 * `d` must be null or a live detection handle.
 */
size_t rl_detection_inconclusive_len(const struct RlDetection *d);

/**
 * Location of point `index` and whether it passed the genericity test.
 *
 * # Safety
 * `d` must be a live detection handle; `x`, `y` and `generic` valid pointers.
 */
enum RlStatus rl_detection_point(const struct RlDetection *d,
                                 size_t index,
                                 double *x,
                                 double *y,
                                 bool *generic);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANKLOOP_H */

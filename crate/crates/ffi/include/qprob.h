#ifndef QPROB_H
#define QPROB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum QpStatus {
  QP_STATUS_OK = 0,
  QP_STATUS_NULL_POINTER = 1,
  QP_STATUS_INVALID_UTF8 = 2,
  QP_STATUS_SYNTAX = 3,
  QP_STATUS_UNKNOWN_NAME = 4,
  QP_STATUS_INVARIANT_VIOLATION = 5,
  QP_STATUS_DIM_MISMATCH = 6,
  QP_STATUS_NUMERICAL = 7,
  QP_STATUS_NOT_FOUND = 8,
  QP_STATUS_PANIC = 9,
  QP_STATUS_OTHER = 10,
} QpStatus;

/**
 * Evaluated rows of a scenario.
 */
typedef struct QpReport QpReport;

/**
 * Parsed scenario document.
 */
typedef struct QpScenario QpScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread and must not be freed.
 */
const char *qp_last_error_message(void);

/**
 * Parses a scenario document from a NUL-terminated JSON string.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum QpStatus qp_scenario_parse(const char *json, struct QpScenario **out);

/**
 * Overrides the reduced Planck constant of a parsed scenario.
 *
 * # Safety
 * `s` must come from [`qp_scenario_parse`].
 */
enum QpStatus qp_scenario_set_hbar(struct QpScenario *s, double hbar);

/**
 * # Safety
 * `s` must come from [`qp_scenario_parse`] or be null.
 */
void qp_scenario_free(struct QpScenario *s);

/**
 * Evaluates every query. Row failures are recorded in the report and do not
 * fail the call.
 *
 * # Safety
 * `s` must come from [`qp_scenario_parse`] and `out` must be valid.
 */
enum QpStatus qp_scenario_run(const struct QpScenario *s, struct QpReport **out);

/**
 * Number of rows, or 0 for a null report.
 *
 * # Safety
 * `r` must come from [`qp_scenario_run`] or be null.
 */
size_t qp_report_len(const struct QpReport *r);

/**
 * Whether every row evaluated without error.
 *
 * # Safety
 * `r` must come from [`qp_scenario_run`] or be null.
 */
bool qp_report_all_passed(const struct QpReport *r);

/**
 * Value of row `index`. `zero_denominator` may be null.
 *
 * # Safety
 * `r` must come from [`qp_scenario_run`]; `value` must be valid.
 */
enum QpStatus qp_report_value(const struct QpReport *r,
                              size_t index,
                              double *value,
                              bool *zero_denominator);

/**
 * Label of row `index`, or null if out of range.
 *
 * # Safety
 * `r` must come from [`qp_scenario_run`] or be null.
 */
char *qp_report_label(const struct QpReport *r, size_t index);

/**
 * Report as JSON lines, one object per row.
 *
 * # Safety
 * `r` must come from [`qp_scenario_run`] or be null.
 */
char *qp_report_to_json(const struct QpReport *r);

/**
 * # Safety
 * `r` must come from [`qp_scenario_run`] or be null.
 */
void qp_report_free(struct QpReport *r);

/**
 * # Safety
 * `s` must be a string returned by this library or null.
 */
void qp_string_free(char *s);

/**
 * `‖E_n ⋯ E_1 ψ‖²` for `n_events` projectors of size `dim × dim`.
 *
 * `events` holds the projectors back to back, each row-major with
 * interleaved real and imaginary parts (`2 · dim²` doubles per event).
 * `psi` holds `dim` interleaved complex entries and must have unit norm.
 *
 * # Safety
 * Buffers must have the stated lengths; `out` must be valid.
 */
enum QpStatus qp_consecutive_pure(size_t dim,
                                  const double *events,
                                  size_t n_events,
                                  const double *psi,
                                  double *out);

/**
 * Monte Carlo estimate for the sampling query `label`. A zero `trials` or
 * negative `seed` keeps the document's value.
 *
 * # Safety
 * `s` must come from [`qp_scenario_parse`]; `label` must be a C string;
 * `frequency` must be valid and `analytic` valid or null.
 */
enum QpStatus qp_sample(const struct QpScenario *s,
                        const char *label,
                        uint64_t trials,
                        int64_t seed,
                        double *frequency,
                        double *analytic);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPROB_H */

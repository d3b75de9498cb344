#ifndef VWLAB_H
#define VWLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum VwlabStatus {
  VWLAB_STATUS_OK = 0,
  /**
   * The run finished but a check missed its threshold.
   */
  VWLAB_STATUS_CHECK_FAILED = 1,
  /**
   * Null pointer, bad UTF-8 or unknown name.
   */
  VWLAB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A setting failed validation.
   */
  VWLAB_STATUS_INVALID_CONFIG = 3,
  /**
   * Linear algebra or shape failure.
   */
  VWLAB_STATUS_NUMERICAL = 4,
  VWLAB_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  VWLAB_STATUS_PANIC = 6,
} VwlabStatus;

/**
 * Experiment settings.
 */
typedef struct VwlabConfig VwlabConfig;

/**
 * Finished experiment.
 */
typedef struct VwlabReport VwlabReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next call.
 */
const char *vwlab_last_error(void);

/**
 * Report schema tag, a static string.
 */
const char *vwlab_schema_version(void);

/**
 * New configuration with the defaults of `command`
 * (`verify-lemmas`, `check-identities`, `solve`, `spectrum`, `convergence`).
 *
 * # Safety
 * `command` must be a NUL-terminated string and `out` a valid pointer.
 */
enum VwlabStatus vwlab_config_new(const char *command, struct VwlabConfig **out);

/**
 * Apply one `key = value` setting, with the same keys as the config file.
 *
 * # Safety
 * `cfg` must come from `vwlab_config_new`; strings must be NUL-terminated.
 */
enum VwlabStatus vwlab_config_set(struct VwlabConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must come from `vwlab_config_new` or be null.
 */
void vwlab_config_free(struct VwlabConfig *cfg);

/**
 * Run the experiment. On `VWLAB_STATUS_OK` and `VWLAB_STATUS_CHECK_FAILED`
 * a report is stored in `out`; otherwise `out` is set to null.
 *
 * # Safety
 * `cfg` must come from `vwlab_config_new`; `out` must be valid.
 */
enum VwlabStatus vwlab_run(const struct VwlabConfig *cfg, struct VwlabReport **out);

/**
 * Report as JSON; free with `vwlab_string_free`. Null on failure.
 *
 * # Safety
 * `report` must come from `vwlab_run`.
 */
char *vwlab_report_json(const struct VwlabReport *report);

/**
 * # Safety
 * `report` must come from `vwlab_run`.
 */
bool vwlab_report_passed(const struct VwlabReport *report);

/**
 * Name of the first failing check, or null. Free with `vwlab_string_free`.
 *
 * # Safety
 * `report` must come from `vwlab_run`.
 */
char *vwlab_report_failing_check(const struct VwlabReport *report);

/**
 * # Safety
 * `report` must come from `vwlab_run` or be null.
 */
void vwlab_report_free(struct VwlabReport *report);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void vwlab_string_free(char *s);

/**
 * Run one pointwise lemma check (`lemma` 1, 2, 3 for the three lemmas,
 * 4 for the radial identities) on `samples` seeded inputs.
 *
 * # Safety
 * `max_err` and `failures` must be valid pointers.
 */
enum VwlabStatus vwlab_lemma_run(uint32_t lemma,
                                 uint64_t seed,
                                 uint64_t samples,
                                 double *max_err,
                                 uint64_t *failures);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VWLAB_H */

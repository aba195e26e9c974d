#ifndef THEORY_ARENA_H
#define THEORY_ARENA_H

/* Generated by cbindgen; do not edit. Regenerate with `cargo build -p theory-arena-ffi --features cbindgen`. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ArenaStatus {
  ARENA_STATUS_OK = 0,
  ARENA_STATUS_NULL_POINTER = 1,
  ARENA_STATUS_INVALID_UTF8 = 2,
  ARENA_STATUS_CONFIG = 3,
  ARENA_STATUS_SCHEMA = 4,
  ARENA_STATUS_INVALID_BUDGET = 5,
  ARENA_STATUS_INVALID_TYPE = 6,
  ARENA_STATUS_INVALID_SPACE = 7,
  ARENA_STATUS_THEORY_MISMATCH = 8,
  ARENA_STATUS_PARAMETER_OUT_OF_BOUNDS = 9,
  ARENA_STATUS_INVALID_LAPSE = 10,
  ARENA_STATUS_DEGENERATE_PARTICLES = 11,
  ARENA_STATUS_DESIGN_MISMATCH = 12,
  ARENA_STATUS_UNKNOWN_THEORY = 13,
  ARENA_STATUS_EMPTY_POOL = 14,
  ARENA_STATUS_INVALID_DESIGN = 15,
  ARENA_STATUS_AGENT_UNAVAILABLE = 16,
  ARENA_STATUS_IO = 17,
  ARENA_STATUS_PANIC = 18,
} ArenaStatus;

/**
 * Run configuration handle.
 */
typedef struct ArenaConfig ArenaConfig;

/**
 * Result of one adjudication run.
 */
typedef struct ArenaTrace ArenaTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; never free it.
 */
const char *arena_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *arena_last_error_message(void);

/**
 * Default configuration: all three theories, fiducial GCM truth, ε = 0.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ArenaStatus arena_config_default(struct ArenaConfig **out);

/**
 * Parses a TOML configuration document and validates it.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` valid for writes.
 */
enum ArenaStatus arena_config_from_toml(const char *toml, struct ArenaConfig **out);

/**
 * Replaces the ground truth (`"GCM"`, `"RULEX"` or `"SUSTAIN"`) and its lapse rate.
 *
 * # Safety
 * `config` must come from this library; `theory` must be a NUL-terminated string.
 */
enum ArenaStatus arena_config_set_truth(struct ArenaConfig *config,
                                        const char *theory,
                                        double epsilon);

/**
 * # Safety
 * `config` must come from this library.
 */
enum ArenaStatus arena_config_set_seed(struct ArenaConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` is null or came from this library and has not been freed.
 */
void arena_config_free(struct ArenaConfig *config);

/**
 * Runs one adjudication.
 *
 * # Safety
 * `config` must come from this library and `out` be valid for writes.
 */
enum ArenaStatus arena_run(const struct ArenaConfig *config, struct ArenaTrace **out);

/**
 * Winning theory name; free with [`arena_string_free`].
 *
 * # Safety
 * `trace` must come from [`arena_run`] and `out` be valid for writes.
 */
enum ArenaStatus arena_trace_winner(const struct ArenaTrace *trace, char **out);

/**
 * P(truth) minus the largest rival posterior.
 *
 * # Safety
 * `trace` must come from [`arena_run`] and `out` be valid for writes.
 */
enum ArenaStatus arena_trace_margin(const struct ArenaTrace *trace, double *out);

/**
 * # Safety
 * `trace` must come from [`arena_run`] and `out` be valid for writes.
 */
enum ArenaStatus arena_trace_recovered(const struct ArenaTrace *trace, bool *out);

/**
 * # Safety
 * `trace` must come from [`arena_run`] and `out` be valid for writes.
 */
enum ArenaStatus arena_trace_cycles(const struct ArenaTrace *trace, size_t *out);

/**
 * Full trace as JSON; free with [`arena_string_free`].
 *
 * # Safety
 * `trace` must come from [`arena_run`] and `out` be valid for writes.
 */
enum ArenaStatus arena_trace_to_json(const struct ArenaTrace *trace, char **out);

/**
 * # Safety
 * `trace` is null or came from [`arena_run`] and has not been freed.
 */
void arena_trace_free(struct ArenaTrace *trace);

/**
 * Checks a JSON design against the configuration's stimulus space (the
 * default space when `config` is null) and writes the validity report as
 * JSON, e.g. `{"valid":false,"violations":["CONFLICTING_LABEL"]}`. Malformed
 * JSON is reported as `ARENA_STATUS_SCHEMA`.
 *
 * # Safety
 * `config` is null or from this library; `design_json` is a NUL-terminated
 * string; `out` is valid for writes.
 */
enum ArenaStatus arena_validate_design(const struct ArenaConfig *config,
                                       const char *design_json,
                                       char **out);

/**
 * First `budget` designs of the canonical enumeration, as a JSON array.
 *
 * # Safety
 * `config` is null or from this library; `out` is valid for writes.
 */
enum ArenaStatus arena_enumerate_designs(const struct ArenaConfig *config,
                                         size_t budget,
                                         char **out);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void arena_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THEORY_ARENA_H */

#ifndef PANEMON_H
#define PANEMON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PanemonMode {
  PANEMON_MODE_VARIABLE = 0,
  PANEMON_MODE_FIXED = 1,
} PanemonMode;

typedef enum PanemonStatus {
  PANEMON_STATUS_OK = 0,
  PANEMON_STATUS_NULL_ARGUMENT = 1,
  PANEMON_STATUS_INVALID_UTF8 = 2,
  PANEMON_STATUS_SPEC_ERROR = 3,
  /**
   * Memory cannot be bounded statically.
   */
  PANEMON_STATUS_UNBOUNDED = 4,
  PANEMON_STATUS_UNKNOWN_INPUT = 5,
  PANEMON_STATUS_TYPE_MISMATCH = 6,
  PANEMON_STATUS_OUT_OF_ORDER = 7,
  /**
   * A value was set or an event committed without a pending event.
   */
  PANEMON_STATUS_NO_PENDING_EVENT = 8,
  PANEMON_STATUS_INVALID_ARGUMENT = 9,
  PANEMON_STATUS_INTERNAL = 10,
} PanemonStatus;

/**
 * Opaque monitor handle.
 */
typedef struct PanemonMonitor PanemonMonitor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Compiles `spec` and creates a monitor.
 *
 * `frequency` is the clock of unclocked outputs in fixed mode (for example
 * `"1Hz"`) and must be null in variable mode.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum PanemonStatus panemon_monitor_new(const char *spec,
                                       enum PanemonMode mode,
                                       const char *frequency,
                                       bool allow_unbounded,
                                       struct PanemonMonitor **out);

/**
 * # Safety
 * `monitor` must be null or a handle from [`panemon_monitor_new`] not yet freed.
 */
void panemon_monitor_free(struct PanemonMonitor *monitor);

/**
 * Starts a new event at `ts_seconds`, discarding any uncommitted one.
 *
 * # Safety
 * `monitor` must be a live handle.
 */
enum PanemonStatus panemon_begin_event(struct PanemonMonitor *monitor, double ts_seconds);

/**
 * # Safety
 * `monitor` must be a live handle and `input` NUL-terminated.
 */
enum PanemonStatus panemon_set_bool(struct PanemonMonitor *monitor, const char *input, bool value);

/**
 * # Safety
 * `monitor` must be a live handle and `input` NUL-terminated.
 */
enum PanemonStatus panemon_set_int(struct PanemonMonitor *monitor,
                                   const char *input,
                                   int64_t value);

/**
 * # Safety
 * `monitor` must be a live handle and `input` NUL-terminated.
 */
enum PanemonStatus panemon_set_double(struct PanemonMonitor *monitor,
                                      const char *input,
                                      double value);

/**
 * Processes the clock ticks up to the pending event, then the event.
 *
 * # Safety
 * `monitor` must be a live handle.
 */
enum PanemonStatus panemon_commit_event(struct PanemonMonitor *monitor);

/**
 * Processes the clock ticks up to and including `ts_seconds`.
 *
 * # Safety
 * `monitor` must be a live handle.
 */
enum PanemonStatus panemon_advance(struct PanemonMonitor *monitor, double ts_seconds);

/**
 * Moves the collected verdicts out as newline-terminated JSON records.
 * Free the string with [`panemon_string_free`].
 *
 * # Safety
 * `monitor` must be a live handle and `out` writable.
 */
enum PanemonStatus panemon_take_verdicts(struct PanemonMonitor *monitor, char **out);

/**
 * Highest number of value-slots retained so far.
 *
 * # Safety
 * `monitor` must be a live handle and `out` writable.
 */
enum PanemonStatus panemon_peak_slots(struct PanemonMonitor *monitor, uint64_t *out);

/**
 * Analyzes `spec` and writes the memory report as JSON to `out`.
 * Returns `Unbounded` (with the report written) when memory cannot be bounded.
 *
 * # Safety
 * `spec` must be NUL-terminated and `out` writable.
 */
enum PanemonStatus panemon_analyze_json(const char *spec, char **out);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void panemon_string_free(char *s);

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *panemon_last_error(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PANEMON_H */

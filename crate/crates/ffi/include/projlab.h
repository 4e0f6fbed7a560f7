#ifndef PROJLAB_H
#define PROJLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_UTF8 = 2,
  PL_STATUS_INVALID_ARGUMENT = 3,
  PL_STATUS_DIMENSION_MISMATCH = 4,
  PL_STATUS_NOT_IN_SET = 5,
  PL_STATUS_PROJECTION_FAILED = 6,
  PL_STATUS_BUFFER_TOO_SMALL = 7,
  PL_STATUS_PANIC = 8,
  PL_STATUS_OTHER = 9,
} PlStatus;

typedef enum PlStopReason {
  PL_STOP_REASON_MAX_ITER = 0,
  PL_STOP_REASON_STATIONARY = 1,
  PL_STOP_REASON_DIVERGED = 2,
} PlStopReason;

// Opaque set handle.
typedef struct PlSet PlSet;

// Opaque trace handle.
typedef struct PlTrace PlTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t pl_last_error(char *buf, size_t len);

// Parses a JSON set descriptor.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum PlStatus pl_set_from_json(const char *json, struct PlSet **out);

// # Safety
// `set` must be null or a handle from [`pl_set_from_json`] not yet freed.
void pl_set_free(struct PlSet *set);

// Ambient dimension of a set, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t pl_set_dimension(const struct PlSet *set);

// Projects `q` onto `set`, writing the chosen nearest point to `out`.
// `distance` and `multivalued` may be null.
//
// # Safety
// `q` must hold `n` values and `out` room for `out_len`.
enum PlStatus pl_set_project(const struct PlSet *set,
                             const double *q,
                             size_t n,
                             double *out,
                             size_t out_len,
                             double *distance,
                             bool *multivalued);

// Alternating projections from `a0` (a point of the first set).
//
// # Safety
// Handles must be live, `a0` must hold `n` values and `out` be valid.
enum PlStatus pl_run_alternating(const struct PlSet *a,
                                 const struct PlSet *b,
                                 const double *a0,
                                 size_t n,
                                 size_t max_iter,
                                 struct PlTrace **out);

// Douglas-Rachford from `x0`. Trace record `k` holds the iterate and its
// projection onto the second set.
//
// # Safety
// As for [`pl_run_alternating`].
enum PlStatus pl_run_douglas_rachford(const struct PlSet *a,
                                      const struct PlSet *b,
                                      const double *x0,
                                      size_t n,
                                      size_t max_iter,
                                      struct PlTrace **out);

// # Safety
// `trace` must be null or a live handle.
void pl_trace_free(struct PlTrace *trace);

// Number of records, or 0 for a null handle.
//
// # Safety
// `trace` must be null or a live handle.
size_t pl_trace_len(const struct PlTrace *trace);

// Dimension of the trace points.
//
// # Safety
// `trace` must be null or a live handle.
size_t pl_trace_dimension(const struct PlTrace *trace);

// # Safety
// `trace` must be a live handle and `out` valid.
enum PlStatus pl_trace_stop_reason(const struct PlTrace *trace, enum PlStopReason *out);

// Copies record `index` (0-based): its two points and the distance
// between them. Any of `a`, `b` and `r` may be null to skip it.
//
// # Safety
// `a` and `b` must be null or hold `len` values.
enum PlStatus pl_trace_record(const struct PlTrace *trace,
                              size_t index,
                              double *a,
                              double *b,
                              size_t len,
                              double *r);

// Reach of `set` at `b` along the unit direction `d`. When no obstruction
// is found up to `r_max`, `*infinite` is set and `*value` is `r_max`.
//
// # Safety
// `b` and `d` must hold `n` values; `value` and `infinite` must be valid.
enum PlStatus pl_reach(const struct PlSet *set,
                       const double *b,
                       const double *d,
                       size_t n,
                       double r_max,
                       double tol,
                       double *value,
                       bool *infinite);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROJLAB_H */

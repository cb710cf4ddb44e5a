#ifndef SINEGORDON_H
#define SINEGORDON_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_ARGUMENT = 2,
  SG_STATUS_CONFIG = 3,
  SG_STATUS_NUMERICAL = 4,
  SG_STATUS_BUFFER_TOO_SMALL = 5,
  SG_STATUS_PANIC = 6,
} SgStatus;

typedef enum SgField {
  SG_FIELD_U = 0,
  SG_FIELD_V = 1,
  SG_FIELD_R = 2,
} SgField;

// Opaque simulation handle.
typedef struct SgSimulation SgSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a simulation of a named problem (`"ring"`, `"double-pole-1d"`, ...)
// with scheme `"li-leps"` or `"ep-fds"` on an `n1 x n2` mesh (`n2 = 1` in 1D).
//
// # Safety
// `problem` and `scheme` must be NUL-terminated strings; `out` must be a
// valid pointer. On success `*out` owns a handle to pass to `sg_simulation_free`.
enum SgStatus sg_simulation_new(const char *problem,
                                const char *scheme,
                                size_t n1,
                                size_t n2,
                                double tau,
                                struct SgSimulation **out);

// # Safety
// `sim` must be null or a handle from `sg_simulation_new` not yet freed.
void sg_simulation_free(struct SgSimulation *sim);

// Advances `steps` time levels. On a numerical failure the handle keeps the
// last good level.
//
// # Safety
// `sim` must be a live handle.
enum SgStatus sg_simulation_step(struct SgSimulation *sim, size_t steps);

// # Safety
// `sim` must be a live handle; `t` and `step` must be valid pointers.
enum SgStatus sg_simulation_time(const struct SgSimulation *sim, double *t, size_t *step);

// Number of mesh nodes, the length of every field buffer.
//
// # Safety
// `sim` must be a live handle; `len` must be a valid pointer.
enum SgStatus sg_simulation_node_count(const struct SgSimulation *sim, size_t *len);

// Copies a field into `buf` in j2-outer, j1-inner order.
//
// # Safety
// `sim` must be a live handle; `buf` must point to `len` writable doubles.
enum SgStatus sg_simulation_copy_field(const struct SgSimulation *sim,
                                       enum SgField field,
                                       double *buf,
                                       size_t len);

// The scheme's conserved energy and the original sine-Gordon energy.
//
// # Safety
// `sim` must be a live handle; `conserved` and `original` must be valid pointers.
enum SgStatus sg_simulation_energy(const struct SgSimulation *sim,
                                   double *conserved,
                                   double *original);

// L2, max and H1 errors of `u` against the exact solution, for problems that have one.
//
// # Safety
// `sim` must be a live handle; the output pointers must be valid.
enum SgStatus sg_simulation_errors(const struct SgSimulation *sim,
                                   double *l2,
                                   double *linf,
                                   double *h1);

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into this library on the same thread.
const char *sg_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SINEGORDON_H */

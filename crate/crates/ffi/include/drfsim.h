#ifndef DRFSIM_H
#define DRFSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  DRF_STATUS_OK = 0,
  DRF_STATUS_NULL_POINTER = 1,
  DRF_STATUS_DOMAIN = 2,
  DRF_STATUS_ACCURACY = 3,
  DRF_STATUS_CONVERGENCE = 4,
  DRF_STATUS_CONSISTENCY = 5,
  DRF_STATUS_BUFFER_TOO_SMALL = 6,
  DRF_STATUS_PANIC = 7,
} DrfStatus;

/**
 * A spin-`j` frame evolving under repeated probe measurements whose
 * outcomes are discarded.
 */
typedef struct DrfFrame DrfFrame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *drf_version(void);

/**
 * Static description of a status code.
 */
const char *drf_status_message(DrfStatus status);

/**
 * Message of the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *drf_last_error_message(void);

/**
 * Closed-form fidelity after `n` measurements of a frame of spin `twice_j / 2`.
 *
 * # Safety
 * `out` must be null or valid for one `double` write.
 */
DrfStatus drf_closed_form_fidelity(uint32_t twice_j, uint64_t n, double *out);

/**
 * Classical kick angle (radians) that reproduces the quantum decay.
 *
 * # Safety
 * `out` must be null or valid for one `double` write.
 */
DrfStatus drf_fitted_step(uint32_t twice_j, double *out);

/**
 * Number of measurements after which the decaying fidelity term halves.
 *
 * # Safety
 * `out` must be null or valid for one `double` write.
 */
DrfStatus drf_half_life(uint32_t twice_j, double *out);

/**
 * Creates a frame aligned with its reference axis.
 *
 * # Safety
 * `out` must be null or valid for one pointer write. The handle written
 * there must be released with [`drf_frame_free`].
 */
DrfStatus drf_frame_new(uint32_t twice_j, DrfFrame **out);

/**
 * Releases a frame. Null is ignored.
 *
 * # Safety
 * `frame` must be null or a handle from [`drf_frame_new`] not yet freed.
 */
void drf_frame_free(DrfFrame *frame);

/**
 * Applies `n` further measurements to the frame.
 *
 * # Safety
 * `frame` must be null or a live handle.
 */
DrfStatus drf_frame_step(DrfFrame *frame, uint64_t n);

/**
 * Number of measurements applied so far.
 *
 * # Safety
 * `frame` must be null or a live handle; `out` null or valid for one write.
 */
DrfStatus drf_frame_steps_taken(const DrfFrame *frame, uint64_t *out);

/**
 * Current measurement fidelity of the frame.
 *
 * # Safety
 * `frame` must be null or a live handle; `out` null or valid for one write.
 */
DrfStatus drf_frame_fidelity(const DrfFrame *frame, double *out);

/**
 * Copies the `2j + 1` populations (ascending `m`) into `buffer`. The
 * required length is always written to `written` when it is non-null, so a
 * call with `len = 0` queries the size.
 *
 * # Safety
 * `frame` must be null or a live handle; `buffer` must be valid for `len`
 * writes when `len > 0`; `written` null or valid for one write.
 */
DrfStatus drf_frame_populations(const DrfFrame *frame, double *buffer, size_t len, size_t *written);

/**
 * Classical-walk fidelity for `n = 0..=n_max`, written to `buffer`
 * (`n_max + 1` entries). A non-positive or NaN `alpha` selects the fitted step.
 *
 * # Safety
 * `buffer` must be valid for `len` writes.
 */
DrfStatus drf_classical_fidelity_series(uint32_t twice_j,
                                        double alpha,
                                        uint64_t n_max,
                                        double *buffer,
                                        size_t len);

/**
 * Residual of the best non-negative coherent-state fit to the frame after
 * `n` measurements, on a grid of `nodes` polar angles.
 *
 * # Safety
 * `out` must be null or valid for one `double` write.
 */
DrfStatus drf_convexity_residual(uint32_t twice_j, uint64_t n, size_t nodes, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRFSIM_H */

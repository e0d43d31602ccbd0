#ifndef STJD_H
#define STJD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every C API call.
 */
enum StjdStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  STJD_STATUS_OK = 0,
  STJD_STATUS_NULL_POINTER = 1,
  STJD_STATUS_INVALID_ARGUMENT = 2,
  STJD_STATUS_PARSE = 3,
  STJD_STATUS_SHAPE_MISMATCH = 4,
  STJD_STATUS_NUMERIC = 5,
  STJD_STATUS_BUFFER_TOO_SMALL = 6,
  STJD_STATUS_INTERNAL = 7,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum StjdStatus StjdStatus;
#else
typedef int32_t StjdStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque skeleton sequence.
 */
typedef struct StjdSequence StjdSequence;

typedef struct StjdTTest {
  double t_value;
  size_t degrees_freedom;
  double critical_value;
  double p_value;
  bool reject;
} StjdTTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf`. Returns the message length in bytes excluding the terminator, so a
 * caller can size the buffer with a first call using `len = 0`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null when `len` is 0.
 */
size_t stjd_last_error_message(char *buf, size_t len);

/**
 * Parses a sequence from the JSON exchange format.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
StjdStatus stjd_sequence_from_json(const char *json, struct StjdSequence **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `seq` must come from [`stjd_sequence_from_json`] and not be used afterwards.
 */
void stjd_sequence_free(struct StjdSequence *seq);

/**
 * Writes the channel, joint and frame counts.
 *
 * # Safety
 * All pointers must be valid.
 */
StjdStatus stjd_sequence_shape(const struct StjdSequence *seq,
                               size_t *channels,
                               size_t *joints,
                               size_t *frames);

/**
 * Raw and normalized density change, both frames x joints row-major.
 *
 * `bandwidths` may be null, in which case they are fitted to the sequence
 * (`fit_bandwidths`) or set to the rule-of-thumb value. `per_frame`
 * selects one softmax per frame instead of one over the whole field.
 *
 * # Safety
 * Buffers must be valid for their stated lengths.
 */
StjdStatus stjd_density_change(const struct StjdSequence *seq,
                               const double *bandwidths,
                               size_t n_bandwidths,
                               bool fit_bandwidths,
                               size_t delta_t,
                               bool per_frame,
                               double *raw_out,
                               double *normalized_out,
                               size_t out_len);

/**
 * Thresholds a normalized field at `beta` into `mask_out` (0/1 per entry),
 * promoting the maximum when nothing passes; `fallback_out` may be null.
 *
 * # Safety
 * Buffers must hold `frames * joints` values.
 */
StjdStatus stjd_detect_prime(const double *normalized,
                             size_t frames,
                             size_t joints,
                             double beta,
                             uint8_t *mask_out,
                             bool *fallback_out);

/**
 * Draws a masking plan; writes `(frame, joint)` pairs flattened into
 * `indices_out` (capacity in pairs) and their number into `count_out`.
 *
 * # Safety
 * `indices_out` must hold `2 * capacity` values.
 */
StjdStatus stjd_mask_plan(const double *normalized,
                          size_t frames,
                          size_t joints,
                          double ratio,
                          double temperature,
                          uint64_t seed,
                          size_t *indices_out,
                          size_t capacity,
                          size_t *count_out);

/**
 * Paired two-tailed t-test of `a - b`.
 *
 * # Safety
 * `a` and `b` must hold `n` values; `out` must be writable.
 */
StjdStatus stjd_paired_t_test(const double *a,
                              const double *b,
                              size_t n,
                              double alpha,
                              struct StjdTTest *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STJD_H */

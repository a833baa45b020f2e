/* Generated by cbindgen from crates/ffi/src/lib.rs. */

#ifndef MARSTRAND_H
#define MARSTRAND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MstStatus {
  MST_STATUS_OK = 0,
  MST_STATUS_NULL_POINTER = 1,
  MST_STATUS_INVALID_UTF8 = 2,
  MST_STATUS_INVALID_ARGUMENT = 3,
  MST_STATUS_PARSE = 4,
  MST_STATUS_SCHEDULE_OVERFLOW = 5,
  MST_STATUS_PRECISION_EXHAUSTED = 6,
  MST_STATUS_DECODE_MISMATCH = 7,
  MST_STATUS_OUT_OF_RANGE = 8,
  MST_STATUS_IO = 9,
  MST_STATUS_PANIC = 10,
} MstStatus;

/**
 * A finished build with everything needed to audit it.
 */
typedef struct MstBuild MstBuild;

/**
 * An audit report.
 */
typedef struct MstReport MstReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The library version, a static string.
 */
const char *mst_version(void);

/**
 * The message of the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *mst_last_error(void);

/**
 * Zero-coding build. `schedule` is `"paper"` or `"scaled:B"`; `conds` holds
 * `n_conds` multiplier specs.
 *
 * # Safety
 * Pointers must be valid for their stated lengths; strings NUL-terminated.
 */
enum MstStatus mst_build_zero_coding(const char *schedule,
                                     uint64_t stages,
                                     const char *const *conds,
                                     size_t n_conds,
                                     uint64_t oracle_seed,
                                     uint64_t bit_budget,
                                     struct MstBuild **out);

/**
 * Block-coding build with a target of density `eps` (`"p/q"`).
 *
 * # Safety
 * As for [`mst_build_zero_coding`].
 */
enum MstStatus mst_build_block_coding(const char *schedule,
                                      uint64_t stages,
                                      const char *const *conds,
                                      size_t n_conds,
                                      const char *eps,
                                      uint64_t seed,
                                      uint64_t oracle_seed,
                                      uint64_t bit_budget,
                                      struct MstBuild **out);

/**
 * # Safety
 * `build` must come from a build function and not be freed yet.
 */
enum MstStatus mst_build_len(const struct MstBuild *build, uint64_t *out);

/**
 * Copies bits `start .. start + len` of `x` into `buf`, one byte (0 or 1) per bit.
 *
 * # Safety
 * `buf` must hold `len` bytes.
 */
enum MstStatus mst_build_copy_bits(const struct MstBuild *build,
                                   uint64_t start,
                                   uint64_t len,
                                   uint8_t *buf);

/**
 * `x` in the `len:N;bits:…` text form; release with [`mst_string_free`].
 *
 * # Safety
 * `build` must be live; `out` writable.
 */
enum MstStatus mst_build_text(const struct MstBuild *build, char **out);

/**
 * The stage traces as JSON; release with [`mst_string_free`].
 *
 * # Safety
 * `build` must be live; `out` writable.
 */
enum MstStatus mst_build_trace_json(const struct MstBuild *build, char **out);

/**
 * Audits the build. `max_profile_len = 0` keeps the default density cap.
 *
 * # Safety
 * `build` must be live; `out` writable.
 */
enum MstStatus mst_build_audit(const struct MstBuild *build,
                               uint64_t max_profile_len,
                               struct MstReport **out);

/**
 * # Safety
 * `report` must be live; `out` writable.
 */
enum MstStatus mst_report_passed(const struct MstReport *report, bool *out);

/**
 * Number of decoded bits that disagree with the target.
 *
 * # Safety
 * `report` must be live; `out` writable.
 */
enum MstStatus mst_report_decode_mismatches(const struct MstReport *report, uint64_t *out);

/**
 * The full report as JSON; release with [`mst_string_free`].
 *
 * # Safety
 * `report` must be live; `out` writable.
 */
enum MstStatus mst_report_json(const struct MstReport *report, char **out);

/**
 * The LZ76 estimate `c·⌈log₂(c + 1)⌉` of `len` bits, one byte per bit.
 *
 * # Safety
 * `bits` must hold `len` bytes.
 */
enum MstStatus mst_lz_estimate(const uint8_t *bits, size_t len, uint64_t *out);

/**
 * Points `2^-level·z` in the open ball of radius `2^-level(1 + √2)` about
 * `(x_num/2^x_exp, y_num/2^y_exp)`.
 *
 * # Safety
 * `out` writable.
 */
enum MstStatus mst_count_dyadics_in_ball(int64_t x_num,
                                         uint64_t x_exp,
                                         int64_t y_num,
                                         uint64_t y_exp,
                                         uint64_t level,
                                         uint64_t *out);

/**
 * # Safety
 * `build` must come from a build function, or be null.
 */
void mst_build_free(struct MstBuild *build);

/**
 * # Safety
 * `report` must come from [`mst_build_audit`], or be null.
 */
void mst_report_free(struct MstReport *report);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void mst_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARSTRAND_H */

#ifndef PARITYBET_H
#define PARITYBET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PbStatus {
  PB_STATUS_OK = 0,
  PB_STATUS_NULL_POINTER = 1,
  PB_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed input: JSON, rational or bit-string syntax, missing states.
   */
  PB_STATUS_PARSE = 3,
  /**
   * Well-formed input that fails a domain check.
   */
  PB_STATUS_DOMAIN = 4,
  PB_STATUS_PANIC = 5,
} PbStatus;

/**
 * Opaque strategy table.
 */
typedef struct PbTable PbTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *pb_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void pb_string_free(char *s);

/**
 * Parses a table document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PbStatus pb_table_from_json(const char *json, struct PbTable **out);

/**
 * Releases a table handle. Null is ignored.
 *
 * # Safety
 * `t` must come from this library and not be freed twice.
 */
void pb_table_free(struct PbTable *t);

/**
 * Serializes a table document.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum PbStatus pb_table_to_json(const struct PbTable *t, char **out);

/**
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum PbStatus pb_table_depth(const struct PbTable *t, size_t *out);

/**
 * Capital at a state given as bit text (`""` for the empty state).
 *
 * # Safety
 * `t` must be a live handle, `bits` NUL-terminated, `out` writable.
 */
enum PbStatus pb_table_value(const struct PbTable *t, const char *bits, char **out);

/**
 * Validates a table; `out_valid` receives whether it meets its declared kind
 * and tags, `out_json` (optional) the full diagnosis.
 *
 * # Safety
 * `t` must be a live handle; `out_valid` writable; `out_json` null or writable.
 */
enum PbStatus pb_table_validate(const struct PbTable *t, bool *out_valid, char **out_json);

/**
 * Parses and validates a table document in one call.
 *
 * # Safety
 * `json` must be NUL-terminated; `out_valid` writable; `out_json` null or writable.
 */
enum PbStatus pb_validate_json(const char *json, bool *out_valid, char **out_json);

/**
 * Splits a martingale into its odd-betting factor `E` and even-betting
 * factor `O`, so that `M = M(λ)·E·O`.
 *
 * # Safety
 * `t` must be a live handle; both outputs writable.
 */
enum PbStatus pb_parity_factorize(const struct PbTable *t,
                                  struct PbTable **out_e,
                                  struct PbTable **out_o);

/**
 * The least odd-betting block martingale with the given values at `00`
 * and `10`.
 *
 * # Safety
 * Inputs NUL-terminated; `out` writable.
 */
enum PbStatus pb_block_min_even(const char *m00, const char *m10, struct PbTable **out);

/**
 * `x(0) y(0) x(1) y(1) …` for `|x| ∈ {|y|, |y|+1}`.
 *
 * # Safety
 * Inputs NUL-terminated; `out` writable.
 */
enum PbStatus pb_interleave(const char *x, const char *y, char **out);

/**
 * Stage-construction parameters for `n = 0..=n_max` as a JSON array.
 *
 * # Safety
 * `out` must be writable.
 */
enum PbStatus pb_params(size_t n_max, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARITYBET_H */

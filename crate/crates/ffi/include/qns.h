#ifndef QNS_H
#define QNS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QnsStatus {
  QNS_STATUS_OK = 0,
  QNS_STATUS_INVALID_ARGUMENT = 1,
  QNS_STATUS_PARSE_ERROR = 2,
  QNS_STATUS_CONSTRUCTION = 3,
  QNS_STATUS_SEQUENCE_CONSTRAINT = 4,
  QNS_STATUS_NOT_CONTAINED = 5,
  QNS_STATUS_INTERNAL = 6,
  QNS_STATUS_PANIC = 7,
} QnsStatus;

/**
 * The gap counterexample domain with default sequences.
 */
typedef struct QnsCounterexample QnsCounterexample;

/**
 * A radius set parsed from JSON.
 */
typedef struct QnsRadiusSet QnsRadiusSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next qns call on this thread.
 */
const char *qns_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qns_string_free(char *s);

/**
 * `m₂(B(0,1) ∩ B((−1,0),1))/π`.
 */
double qns_lens_constant(void);

/**
 * Area of the intersection of disks with radii `r1`, `r2` whose centers are
 * `d` apart.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QnsStatus qns_lens_area(double r1, double r2, double d, double *out);

/**
 * Parses a radius set from its JSON form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid for writes.
 */
enum QnsStatus qns_radius_set_from_json(const char *json, struct QnsRadiusSet **out);

/**
 * Writes 1 to `out` if `r` belongs to the set, 0 otherwise.
 *
 * # Safety
 * `set` must be a live handle; `out` must be valid for writes.
 */
enum QnsStatus qns_radius_set_contains(const struct QnsRadiusSet *set, double r, int32_t *out);

/**
 * Classification report as JSON; release it with `qns_string_free`.
 *
 * # Safety
 * `set` must be a live handle; `out_json` must be valid for writes.
 */
enum QnsStatus qns_radius_set_classify(const struct QnsRadiusSet *set, char **out_json);

/**
 * # Safety
 * `set` must be NULL or a handle that has not been freed.
 */
void qns_radius_set_free(struct QnsRadiusSet *set);

/**
 * Builds the counterexample with `count` balls and default sequences
 * `b_m = 16^(−m²)`, `a_m = b_m/(4·n0·m)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QnsStatus qns_counterexample_new(uint32_t n0, uint32_t count, struct QnsCounterexample **out);

/**
 * The domain (sequences, centers, Ω and X) as JSON.
 *
 * # Safety
 * `cx` must be a live handle; `out_json` must be valid for writes.
 */
enum QnsStatus qns_counterexample_domain_json(const struct QnsCounterexample *cx, char **out_json);

/**
 * Runs both certifications with closed-form means and writes
 * `{"not_qns": ..., "restricted": ...}`. `passed` receives 1 when both pass.
 *
 * # Safety
 * `cx` must be a live handle; `out_json` and `passed` must be valid for writes.
 */
enum QnsStatus qns_counterexample_certify(const struct QnsCounterexample *cx,
                                          uint64_t seed,
                                          uint32_t workers,
                                          char **out_json,
                                          int32_t *passed);

/**
 * # Safety
 * `cx` must be NULL or a handle that has not been freed.
 */
void qns_counterexample_free(struct QnsCounterexample *cx);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNS_H */

#ifndef MATCIRCUIT_H
#define MATCIRCUIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum McStatus {
  MC_STATUS_OK = 0,
  /**
   * The assignment does not satisfy the instance.
   */
  MC_STATUS_UNSATISFIED = 1,
  MC_STATUS_NULL_POINTER = 2,
  MC_STATUS_INVALID_ARGUMENT = 3,
  MC_STATUS_PARSE = 4,
  MC_STATUS_SHAPE = 5,
  MC_STATUS_SYNTHESIS = 6,
  MC_STATUS_PANIC = 7,
} McStatus;

/**
 * Opaque variable assignment.
 */
typedef struct McAssignment McAssignment;

/**
 * Opaque constraint system.
 */
typedef struct McInstance McInstance;

typedef struct McInstanceStats {
  size_t n_constraints;
  size_t n_variables;
  size_t n_public;
  size_t a_nonzeros;
  size_t b_nonzeros;
  size_t c_nonzeros;
  size_t left_wire_count;
  size_t product_rows;
} McInstanceStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *mc_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void mc_string_free(char *s);

/**
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum McStatus mc_instance_from_json(const char *json, struct McInstance **out);

/**
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum McStatus mc_instance_to_json(const struct McInstance *inst, char **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library, not yet freed.
 */
void mc_instance_free(struct McInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum McStatus mc_instance_stats(const struct McInstance *inst, struct McInstanceStats *out);

/**
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum McStatus mc_assignment_from_json(const char *json, struct McAssignment **out);

/**
 * # Safety
 * `asg` must be a live handle; `out` must be writable.
 */
enum McStatus mc_assignment_to_json(const struct McAssignment *asg, char **out);

/**
 * # Safety
 * `asg` must be null or a handle from this library, not yet freed.
 */
void mc_assignment_free(struct McAssignment *asg);

/**
 * Returns `Ok` or `Unsatisfied`. `failing_row`, if not null, receives the
 * first failing row, or `SIZE_MAX` when satisfied.
 *
 * # Safety
 * Both handles must be live; `failing_row` must be null or writable.
 */
enum McStatus mc_check(const struct McInstance *inst,
                       const struct McAssignment *asg,
                       size_t *failing_row);

/**
 * Synthesizes an `a x n` by `n x b` product circuit. `modulus` is decimal;
 * `encoding` is one of `naive`, `naive-psq`, `crpc`, `crpc-psq`. The
 * challenge encodings need a nonempty `challenge_seed`; others ignore it.
 *
 * # Safety
 * String arguments must be nul-terminated (`challenge_seed` may be null);
 * `out` must be writable.
 */
enum McStatus mc_matmul_compile(const char *modulus,
                                size_t a,
                                size_t n,
                                size_t b,
                                const char *encoding,
                                const char *challenge_seed,
                                struct McInstance **out);

/**
 * Computes `Y = X W` and a satisfying assignment for an instance made by
 * [`mc_matmul_compile`]. `x_json` and `w_json` are matrix documents; `y_json`
 * may be null if the product is not wanted.
 *
 * # Safety
 * `inst` must be live; strings nul-terminated; out-parameters writable.
 */
enum McStatus mc_matmul_witness(const struct McInstance *inst,
                                const char *x_json,
                                const char *w_json,
                                struct McAssignment **assignment,
                                char **y_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATCIRCUIT_H */

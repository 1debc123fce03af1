/* C interface of the cealab cellular evolutionary algorithm laboratory. */

#ifndef CEALAB_H
#define CEALAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C API call.
 */
typedef enum CealabStatus {
  CEALAB_STATUS_OK = 0,
  CEALAB_STATUS_NULL_ARGUMENT = 1,
  CEALAB_STATUS_INVALID_ARGUMENT = 2,
  CEALAB_STATUS_PARSE_ERROR = 3,
  CEALAB_STATUS_IO_ERROR = 4,
  CEALAB_STATUS_SIZE_LIMIT = 5,
  CEALAB_STATUS_INTERNAL_ERROR = 6,
} CealabStatus;

/**
 * Opaque NK-landscape instance.
 */
typedef struct CealabNk CealabNk;

/**
 * Opaque quadratic-assignment instance.
 */
typedef struct CealabQap CealabQap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never freed.
 */
const char *cealab_version(void);

/**
 * Load a QAP instance from a QAPLIB-format text file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_instance` a valid
 * pointer. On `CEALAB_STATUS_OK` the caller owns the handle and must
 * release it with `cealab_qap_free`.
 */
enum CealabStatus cealab_qap_load(const char *path, struct CealabQap **out_instance);

/**
 * Number of facilities of a loaded instance.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum CealabStatus cealab_qap_size(const struct CealabQap *instance, size_t *out_size);

/**
 * Assignment cost of a permutation given as `len` facility locations.
 *
 * # Safety
 * `assignment` must point to `len` readable entries; the other pointers
 * must be valid.
 */
enum CealabStatus cealab_qap_cost(const struct CealabQap *instance,
                                  const uint32_t *assignment,
                                  size_t len,
                                  double *out_cost);

/**
 * Release a QAP handle; a null pointer is ignored.
 *
 * # Safety
 * `instance` must come from `cealab_qap_load` and not be used afterwards.
 */
void cealab_qap_free(struct CealabQap *instance);

/**
 * Load an NK landscape from its text serialization.
 *
 * # Safety
 * As `cealab_qap_load`; release with `cealab_nk_free`.
 */
enum CealabStatus cealab_nk_load(const char *path, struct CealabNk **out_instance);

/**
 * Bit-string length of a loaded landscape.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum CealabStatus cealab_nk_size(const struct CealabNk *instance, size_t *out_size);

/**
 * Fitness of a bit string given as `len` bytes holding 0 or 1.
 *
 * # Safety
 * `bits` must point to `len` readable bytes; the other pointers must be
 * valid.
 */
enum CealabStatus cealab_nk_fitness(const struct CealabNk *instance,
                                    const uint8_t *bits,
                                    size_t len,
                                    double *out_fitness);

/**
 * Release an NK handle; a null pointer is ignored.
 *
 * # Safety
 * `instance` must come from `cealab_nk_load` and not be used afterwards.
 */
void cealab_nk_free(struct CealabNk *instance);

/**
 * Run the cellular EA on a QAP instance and report the best cost found.
 *
 * # Safety
 * `instance` and `out_best_cost` must be valid pointers.
 */
enum CealabStatus cealab_run_qap(const struct CealabQap *instance,
                                 size_t width,
                                 size_t height,
                                 double beta,
                                 uint64_t generations,
                                 uint64_t seed,
                                 double *out_best_cost);

/**
 * Run the cellular EA on an NK landscape and report the best fitness found.
 *
 * # Safety
 * `instance` and `out_best_fitness` must be valid pointers.
 */
enum CealabStatus cealab_run_nk(const struct CealabNk *instance,
                                size_t width,
                                size_t height,
                                double beta,
                                uint64_t generations,
                                uint64_t seed,
                                double *out_best_fitness);

/**
 * Selection-only takeover time on a `side x side` grid; writes -1 when the
 * run hits `max_generations` without converging (always at `beta = 1` on
 * grids larger than one cell).
 *
 * # Safety
 * `out_takeover_time` must be a valid pointer.
 */
enum CealabStatus cealab_takeover_time(size_t side,
                                       double beta,
                                       uint64_t max_generations,
                                       uint64_t seed,
                                       int64_t *out_takeover_time);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CEALAB_H */

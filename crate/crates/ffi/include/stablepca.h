#ifndef STABLEPCA_H
#define STABLEPCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpcaStatus {
  SPCA_STATUS_OK = 0,
  SPCA_STATUS_NULL_POINTER = 1,
  SPCA_STATUS_INVALID_PARAMETER = 2,
  SPCA_STATUS_SHAPE_MISMATCH = 3,
  SPCA_STATUS_UNSUPPORTED = 4,
  SPCA_STATUS_ZERO_VECTOR = 5,
  SPCA_STATUS_FAMILY_MISMATCH = 6,
  SPCA_STATUS_DEGENERATE_DENOMINATOR = 7,
  SPCA_STATUS_INVALID_DATA = 8,
  SPCA_STATUS_EMPTY_MODEL = 9,
  SPCA_STATUS_BUFFER_TOO_SMALL = 10,
  /**
   * A Rust panic was caught at the boundary.
   */
  SPCA_STATUS_INTERNAL = 11,
} SpcaStatus;

typedef enum SpcaVariant {
  SPCA_VARIANT_EXHAUSTIVE = 0,
  SPCA_VARIANT_FORWARD = 1,
} SpcaVariant;

/**
 * Opaque spectral model.
 */
typedef struct SpcaModel SpcaModel;

/**
 * Opaque PCA result.
 */
typedef struct SpcaSolution SpcaSolution;

/**
 * Solver settings. Obtain defaults from [`spca_solver_options_default`].
 */
typedef struct SpcaSolverOptions {
  size_t restarts;
  size_t max_iters;
  double tol;
  uint64_t seed;
  size_t threads;
} SpcaSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next call into the library from this thread.
 */
const char *spca_last_error(void);

struct SpcaSolverOptions spca_solver_options_default(void);

/**
 * Builds a Frechet model from a row-major `d x n` atom matrix and `n` masses.
 *
 * # Safety
 * `nu` must point to `d * n` doubles, `mu` to `n` doubles, `out` to writable storage.
 */
enum SpcaStatus spca_model_new(size_t d,
                               size_t n,
                               const double *nu,
                               const double *mu,
                               double alpha,
                               struct SpcaModel **out_model);

/**
 * Parses a model from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be a valid C string, `out_model` writable.
 */
enum SpcaStatus spca_model_from_json(const char *json, struct SpcaModel **out_model);

/**
 * # Safety
 * `model` must come from this library and not be freed twice. Null is ignored.
 */
void spca_model_free(struct SpcaModel *model);

/**
 * # Safety
 * `model` must be valid; `d` and `n` writable.
 */
enum SpcaStatus spca_model_dims(const struct SpcaModel *model, size_t *d, size_t *n);

/**
 * Joint distribution function at `x` (length `d`).
 *
 * # Safety
 * `x` must point to `len` doubles, `value` writable.
 */
enum SpcaStatus spca_model_cdf(const struct SpcaModel *model,
                               const double *x,
                               size_t len,
                               double *value);

/**
 * Writes the `d` margin scale coefficients into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum SpcaStatus spca_model_scale_coefficients(const struct SpcaModel *model,
                                              double *buf,
                                              size_t len);

/**
 * Max-linear PCA with `p` columns. `options` may be null for defaults.
 *
 * # Safety
 * `model` must be valid, `options` null or valid, `out_solution` writable.
 */
enum SpcaStatus spca_pca(const struct SpcaModel *model,
                         size_t p,
                         enum SpcaVariant variant,
                         const struct SpcaSolverOptions *options,
                         struct SpcaSolution **out_solution);

/**
 * # Safety
 * `solution` must come from this library and not be freed twice. Null is ignored.
 */
void spca_solution_free(struct SpcaSolution *solution);

/**
 * # Safety
 * `solution` must be valid; `value` writable.
 */
enum SpcaStatus spca_solution_objective(const struct SpcaSolution *solution, double *value);

/**
 * # Safety
 * `solution` must be valid; `converged` writable.
 */
enum SpcaStatus spca_solution_converged(const struct SpcaSolution *solution, bool *converged);

/**
 * # Safety
 * `solution` must be valid; `d` and `p` writable.
 */
enum SpcaStatus spca_solution_dims(const struct SpcaSolution *solution, size_t *d, size_t *p);

/**
 * Copies the `d x p` basis, column-major, into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum SpcaStatus spca_solution_basis(const struct SpcaSolution *solution, double *buf, size_t len);

/**
 * Copies the `n` per-atom inner distances into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum SpcaStatus spca_solution_atom_distances(const struct SpcaSolution *solution,
                                             double *buf,
                                             size_t len);

/**
 * The full result as JSON. Release the string with [`spca_string_free`].
 *
 * # Safety
 * `solution` must be valid; `json` writable.
 */
enum SpcaStatus spca_solution_to_json(const struct SpcaSolution *solution, char **json);

/**
 * # Safety
 * `s` must come from this library. Null is ignored.
 */
void spca_string_free(char *s);

/**
 * Distance from `u` to the max-linear span of a `d x p` column-major basis
 * (columns are rescaled to unit sup norm first). The `p` optimal
 * coefficients go to `coefficients`, which may be null.
 *
 * # Safety
 * `basis` must hold `d * p` doubles, `u` `d` doubles, `coefficients` null or `p` writable doubles.
 */
enum SpcaStatus spca_inner_distance(size_t d,
                                    size_t p,
                                    const double *basis,
                                    const double *u,
                                    double *distance,
                                    double *coefficients);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLEPCA_H */

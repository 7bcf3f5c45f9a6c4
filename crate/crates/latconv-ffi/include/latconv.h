#ifndef LATCONV_H
#define LATCONV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum LatconvStatus {
  LATCONV_STATUS_OK = 0,
  LATCONV_STATUS_NULL_POINTER = 1,
  LATCONV_STATUS_INVALID_ARGUMENT = 2,
  LATCONV_STATUS_PARSE = 3,
  LATCONV_STATUS_RESOURCE = 4,
  LATCONV_STATUS_NOT_NORMALIZED = 5,
  LATCONV_STATUS_ANALYSIS_FAILED = 6,
  LATCONV_STATUS_HYPOTHESIS_VIOLATION = 7,
  LATCONV_STATUS_NOT_PROBABILITY = 8,
  LATCONV_STATUS_NUMERICAL = 9,
  LATCONV_STATUS_IO = 10,
  LATCONV_STATUS_PANIC = 11,
} LatconvStatus;

/*
 Power algorithm selector.
 */
typedef enum LatconvMethod {
  LATCONV_METHOD_DIRECT = 0,
  LATCONV_METHOD_FAST = 1,
  LATCONV_METHOD_SPECTRAL = 2,
} LatconvMethod;

/*
 Classification of a unit-modulus point.
 */
typedef enum LatconvVerdict {
  LATCONV_VERDICT_POSITIVE_HOMOGENEOUS_TYPE = 0,
  LATCONV_VERDICT_NOT_POSITIVE_HOMOGENEOUS_TYPE = 1,
  LATCONV_VERDICT_INDETERMINATE = 2,
} LatconvVerdict;

/*
 Outcome of a stability report.
 */
typedef enum LatconvStability {
  LATCONV_STABILITY_STABLE = 0,
  LATCONV_STABILITY_UNSTABLE = 1,
  LATCONV_STABILITY_INCONCLUSIVE = 2,
} LatconvStability;

/*
 Unit-modulus points of a function and their classification.
 */
typedef struct LatconvAnalysis LatconvAnalysis;

/*
 A finitely supported function on `Z^d`.
 */
typedef struct LatconvFunction LatconvFunction;

/*
 Values on a rectangular lattice box, row-major with the last axis fastest.
 */
typedef struct LatconvGrid LatconvGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the next failure.
 */
const char *latconv_last_error(void);

/*
 Library version as a static string.
 */
const char *latconv_version(void);

/*
 Builds a function from `count` points: `coords` holds `count * dim` integers, point-major.

 # Safety
 `coords`, `re` and `im` must point to arrays of the stated lengths; `out` must be writable.
 */
enum LatconvStatus latconv_function_new(size_t dim,
                                        size_t count,
                                        const int64_t *coords,
                                        const double *re,
                                        const double *im,
                                        struct LatconvFunction **out);

/*
 Builds a builtin example such as `"intro"` or `"srw:2"`.

 # Safety
 `name` must be a nul-terminated string; `out` must be writable.
 */
enum LatconvStatus latconv_function_builtin(const char *name, struct LatconvFunction **out);

/*
 Parses the text function format.

 # Safety
 `text` must be a nul-terminated string; `out` must be writable.
 */
enum LatconvStatus latconv_function_parse(const char *text, struct LatconvFunction **out);

/*
 # Safety
 `f` must come from this library and not be freed twice; null is ignored.
 */
void latconv_function_free(struct LatconvFunction *f);

/*
 Dimension, or 0 for null.

 # Safety
 `f` must be null or a live handle.
 */
size_t latconv_function_dim(const struct LatconvFunction *f);

/*
 Number of support points, or 0 for null.

 # Safety
 `f` must be null or a live handle.
 */
size_t latconv_function_len(const struct LatconvFunction *f);

/*
 `f^(n)` on its bounding box.

 # Safety
 `f` must be a live handle; `out` must be writable.
 */
enum LatconvStatus latconv_power(const struct LatconvFunction *f,
                                 uint64_t n,
                                 enum LatconvMethod method,
                                 struct LatconvGrid **out);

/*
 # Safety
 `g` must come from this library and not be freed twice; null is ignored.
 */
void latconv_grid_free(struct LatconvGrid *g);

/*
 Dimension, or 0 for null.

 # Safety
 `g` must be null or a live handle.
 */
size_t latconv_grid_dim(const struct LatconvGrid *g);

/*
 Number of stored values, or 0 for null.

 # Safety
 `g` must be null or a live handle.
 */
size_t latconv_grid_len(const struct LatconvGrid *g);

/*
 Writes the lower corner and the side lengths, `dim` entries each.

 # Safety
 `g` must be a live handle; `lo` and `shape` must hold `dim` entries.
 */
enum LatconvStatus latconv_grid_bounds(const struct LatconvGrid *g, int64_t *lo, size_t *shape);

/*
 Copies the values into `re` and `im`, each of length `len` (must equal the grid length).

 # Safety
 `g` must be a live handle; `re` and `im` must hold `len` entries.
 */
enum LatconvStatus latconv_grid_values(const struct LatconvGrid *g,
                                       double *re,
                                       double *im,
                                       size_t len);

/*
 Locates and classifies the unit-modulus points of `f`.

 # Safety
 `f` must be a live handle; `out` must be writable.
 */
enum LatconvStatus latconv_analyze(const struct LatconvFunction *f, struct LatconvAnalysis **out);

/*
 # Safety
 `a` must come from this library and not be freed twice; null is ignored.
 */
void latconv_analysis_free(struct LatconvAnalysis *a);

/*
 Overall verdict and, when every point is of positive homogeneous type, the decay
 exponent as `numer / denom` (both set to 0 otherwise).

 # Safety
 `a` must be a live handle; the output pointers must be writable.
 */
enum LatconvStatus latconv_analysis_summary(const struct LatconvAnalysis *a,
                                            enum LatconvVerdict *overall,
                                            int64_t *mu_numer,
                                            int64_t *mu_denom);

/*
 Number of unit-modulus points, or 0 for null.

 # Safety
 `a` must be null or a live handle.
 */
size_t latconv_analysis_point_count(const struct LatconvAnalysis *a);

/*
 Location, verdict and drift of point `k`. `xi` and `drift` hold `dim` entries; the drift
 is filled with NaN when the point is not of positive homogeneous type.

 # Safety
 `a` must be a live handle; the output pointers must be writable.
 */
enum LatconvStatus latconv_analysis_point(const struct LatconvAnalysis *a,
                                          size_t k,
                                          double *xi,
                                          double *drift,
                                          enum LatconvVerdict *point_verdict);

/*
 Stability report up to `n_max`: the verdict and the late-to-early `l^1` ratio.

 # Safety
 `f` must be a live handle; the output pointers must be writable.
 */
enum LatconvStatus latconv_stability(const struct LatconvFunction *f,
                                     uint64_t n_max,
                                     enum LatconvStability *result,
                                     double *ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATCONV_H */

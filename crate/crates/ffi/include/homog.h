#ifndef HOMOG_H
#define HOMOG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HomogStatus {
  HOMOG_STATUS_OK = 0,
  HOMOG_STATUS_NULL_POINTER = 1,
  HOMOG_STATUS_INVALID_ARGUMENT = 2,
  /*
   Geometry or mesh not supported for the requested discretisation.
   */
  HOMOG_STATUS_UNSUPPORTED = 3,
  HOMOG_STATUS_NON_CONVERGENCE = 4,
  /*
   Indefinite operator or preconditioner breakdown.
   */
  HOMOG_STATUS_SOLVER_FAILURE = 5,
  HOMOG_STATUS_IO = 6,
  /*
   A Rust panic was caught at the boundary.
   */
  HOMOG_STATUS_PANIC = 7,
} HomogStatus;

typedef enum HomogGeometry {
  HOMOG_GEOMETRY_SQUARE = 0,
  HOMOG_GEOMETRY_PYRAMID = 1,
  /*
   Disk (d = 2) or ball (d = 3); needs a radius in (0, 1/2).
   */
  HOMOG_GEOMETRY_CIRCLE = 2,
} HomogGeometry;

typedef enum HomogMethod {
  HOMOG_METHOD_FFTH_GA = 0,
  /*
   Reports the plain value and the a-posteriori upper bound.
   */
  HOMOG_METHOD_FFTH_GANI = 1,
  HOMOG_METHOD_FEM_P1 = 2,
  HOMOG_METHOD_FEM_P2 = 3,
} HomogMethod;

/*
 Opaque material description.
 */
typedef struct HomogMaterial HomogMaterial;

/*
 Opaque solve result.
 */
typedef struct HomogResult HomogResult;

/*
 Solver settings; pass NULL to `homog_solve` for the defaults.
 */
typedef struct HomogSolveOptions {
  /*
   Relative residual tolerance (default 1e-10).
   */
  double rtol;
  /*
   Iteration cap, 0 for `10 * unknowns`.
   */
  size_t max_iter;
  /*
   IC(0) preconditioning; FEM only.
   */
  bool precondition;
} HomogSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *homog_version(void);

/*
 Message of the last failed call on this thread, or NULL after a
 successful one. Valid until the next call on the same thread.
 */
const char *homog_last_error(void);

/*
 Analytic inclusion material `A(x) = M_d + contrast * f(x) I` on a
 `d`-dimensional cell. `geometry` is a [`HomogGeometry`] value; `radius`
 is read for circles only.

 # Safety
 `out` must be valid for writing one pointer.
 */
enum HomogStatus homog_material_new(size_t d,
                                    double contrast,
                                    int32_t geometry,
                                    double radius,
                                    struct HomogMaterial **out);

/*
 Isotropic voxel material. `phases` holds `prod(resolution)` phase ids
 with the first axis varying fastest; phase `phase_ids[i]` has
 conductivity `conductivities[i]`.

 # Safety
 `resolution` must point to `d` values, `phases` to the voxel count,
 `phase_ids` and `conductivities` to `n_phases` values each.
 */
enum HomogStatus homog_material_new_voxel(size_t d,
                                          const size_t *resolution,
                                          const uint8_t *phases,
                                          const uint8_t *phase_ids,
                                          const double *conductivities,
                                          size_t n_phases,
                                          struct HomogMaterial **out);

/*
 # Safety
 `material` must be NULL or a handle from a `homog_material_new*`
 function that has not been freed.
 */
void homog_material_free(struct HomogMaterial *material);

/*
 Solves the cell problem for `E = e_1` on grid `n` (Fourier methods) or
 an `n^d` mesh (finite elements). `method` is a [`HomogMethod`] value.

 # Safety
 `material` must be a live handle, `options` NULL or valid, and `out`
 valid for writing one pointer.
 */
enum HomogStatus homog_solve(const struct HomogMaterial *material,
                             int32_t method,
                             size_t n,
                             const struct HomogSolveOptions *options,
                             struct HomogResult **out);

/*
 Homogenised value `A_11` (for GaNi the plain, unbounded approximation).

 # Safety
 `result` must be a live handle and `out` valid for writing.
 */
enum HomogStatus homog_result_value(const struct HomogResult *result, double *out);

/*
 Guaranteed upper bound on the homogenised value.

 # Safety
 `result` must be a live handle and `out` valid for writing.
 */
enum HomogStatus homog_result_upper_bound(const struct HomogResult *result, double *out);

/*
 Conjugate-gradient iterations performed.

 # Safety
 `result` must be a live handle and `out` valid for writing.
 */
enum HomogStatus homog_result_iterations(const struct HomogResult *result, size_t *out);

/*
 Reported system size and memory count (in floating point numbers).

 # Safety
 `result` must be a live handle; `size` and `memory` valid for writing.
 */
enum HomogStatus homog_result_accounting(const struct HomogResult *result,
                                         uint64_t *size,
                                         uint64_t *memory);

/*
 Homogenised value after each CG iteration, starting with the initial
 guess. Writes the trace length to `len`; copies `min(len, capacity)`
 values into `buffer`, which may be NULL when `capacity` is 0.

 # Safety
 `result` must be a live handle, `buffer` valid for `capacity` values
 and `len` valid for writing.
 */
enum HomogStatus homog_result_trace(const struct HomogResult *result,
                                    double *buffer,
                                    size_t capacity,
                                    size_t *len);

/*
 # Safety
 `result` must be NULL or a handle from `homog_solve` that has not been
 freed.
 */
void homog_result_free(struct HomogResult *result);

/*
 Copies the last error message into a caller buffer, truncating and
 NUL-terminating; returns the full message length (0 if none).

 # Safety
 `buffer` must be valid for `capacity` bytes, or NULL with capacity 0.
 */
size_t homog_last_error_copy(char *buffer, size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOMOG_H */

#ifndef NULLMETRIC_H
#define NULLMETRIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NmStatus {
  NM_STATUS_OK = 0,
  NM_STATUS_NULL_POINTER = 1,
  NM_STATUS_INVALID_ARGUMENT = 2,
  NM_STATUS_NOT_POSITIVE_DEFINITE = 3,
  NM_STATUS_DISCONNECTED = 4,
  NM_STATUS_RESOURCE_CAP = 5,
  NM_STATUS_INFEASIBLE = 6,
  NM_STATUS_UNKNOWN_EXAMPLE = 7,
  NM_STATUS_INVALID_MESH = 8,
  NM_STATUS_IO = 9,
  /**
   * A Rust panic was caught; the handle arguments are left untouched.
   */
  NM_STATUS_PANIC = 10,
} NmStatus;

typedef struct NmDistanceMatrix NmDistanceMatrix;

/**
 * Causal grid for the oracle null distance.
 */
typedef struct NmGrid NmGrid;

/**
 * Spatial mesh.
 */
typedef struct NmMesh NmMesh;

/**
 * Static slab `[t0, t1] x M`.
 */
typedef struct NmSpacetime NmSpacetime;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *nm_last_error_message(void);

/**
 * Uniform polar mesh of the unit disk.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum NmStatus nm_mesh_disk(uint32_t level, struct NmMesh **out);

/**
 * # Safety
 * `mesh` must be a live handle or null.
 */
size_t nm_mesh_vertex_count(const struct NmMesh *mesh);

/**
 * # Safety
 * `mesh` must come from this library and not be used afterwards.
 */
void nm_mesh_free(struct NmMesh *mesh);

/**
 * Flat slab `[0, 1] x mesh`.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for writes.
 */
enum NmStatus nm_spacetime_flat(const struct NmMesh *mesh, struct NmSpacetime **out);

/**
 * The `j`-th member of an example family (`ex31-space-collapse`,
 * `ex32-time-blowup`, `ex33-bubble`, `ex34-spline`) on its own graded mesh.
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` valid for writes.
 */
enum NmStatus nm_spacetime_example(const char *id,
                                   double j,
                                   uint32_t level,
                                   struct NmSpacetime **out);

/**
 * # Safety
 * `st` must be a live handle or null.
 */
size_t nm_spacetime_vertex_count(const struct NmSpacetime *st);

/**
 * # Safety
 * `st` must come from this library and not be used afterwards.
 */
void nm_spacetime_free(struct NmSpacetime *st);

/**
 * Spatial distances of the reduced metric `sigma / h^2` between the given
 * vertices. Row and column `i` belong to `sources[i]`.
 *
 * # Safety
 * `sources` must point to `count` readable indices; `st` must be live and
 * `out` valid for writes.
 */
enum NmStatus nm_distance_matrix(const struct NmSpacetime *st,
                                 const size_t *sources,
                                 size_t count,
                                 struct NmDistanceMatrix **out);

/**
 * # Safety
 * `m` must be a live handle or null.
 */
size_t nm_distance_matrix_size(const struct NmDistanceMatrix *m);

/**
 * # Safety
 * `m` must be live and `out` valid for writes.
 */
enum NmStatus nm_distance_matrix_get(const struct NmDistanceMatrix *m,
                                     size_t i,
                                     size_t j,
                                     double *out);

/**
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void nm_distance_matrix_free(struct NmDistanceMatrix *m);

/**
 * `max(d(x, y), |s - t|)` with `x`, `y` indices into the matrix.
 *
 * # Safety
 * `d` must be live and `out` valid for writes.
 */
enum NmStatus nm_null_distance_static(const struct NmDistanceMatrix *d,
                                      double t,
                                      size_t x,
                                      double s,
                                      size_t y,
                                      double *out);

/**
 * Riemannian volume of the spatial metric.
 *
 * # Safety
 * `st` must be live and `out` valid for writes.
 */
enum NmStatus nm_volume(const struct NmSpacetime *st, double *out);

/**
 * Boundary area (length in two dimensions) of the spatial metric.
 *
 * # Safety
 * `st` must be live and `out` valid for writes.
 */
enum NmStatus nm_boundary_area(const struct NmSpacetime *st, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum NmStatus nm_area_factor(uint32_t n, double *out);

/**
 * Intrinsic flat upper bound for a slab of height `h` in dimension `n + 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum NmStatus nm_flat_bound(uint32_t n,
                            double v,
                            double vp,
                            double a,
                            double h,
                            double delta,
                            double *out);

/**
 * Causal grid with time step `time_step` (dividing the slab height) and a
 * cone reach of `window` steps.
 *
 * # Safety
 * `st` must be live and `out` valid for writes.
 */
enum NmStatus nm_grid_new(const struct NmSpacetime *st,
                          double time_step,
                          uint32_t window,
                          struct NmGrid **out);

/**
 * Grid null distance between `(t, x)` and `(s, y)`; times must be grid levels.
 *
 * # Safety
 * `grid` must be live and `out` valid for writes.
 */
enum NmStatus nm_grid_null_distance(const struct NmGrid *grid,
                                    double t,
                                    size_t x,
                                    double s,
                                    size_t y,
                                    double *out);

/**
 * # Safety
 * `grid` must come from this library and not be used afterwards.
 */
void nm_grid_free(struct NmGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NULLMETRIC_H */

#ifndef FHS_H
#define FHS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FhsStatus {
  FHS_STATUS_OK = 0,
  FHS_STATUS_NULL_POINTER = 1,
  FHS_STATUS_INVALID_ARGUMENT = 2,
  FHS_STATUS_INADMISSIBLE = 3,
  FHS_STATUS_NUMERICAL = 4,
  FHS_STATUS_IO = 5,
  FHS_STATUS_PANIC = 6,
} FhsStatus;

// Opaque convex body.
typedef struct FhsBody FhsBody;

// Opaque boundary mesh.
typedef struct FhsMesh FhsMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *fhs_last_error(void);

// # Safety
// `out` must be valid for writes.
enum FhsStatus fhs_body_ball(size_t n, double radius, struct FhsBody **out);

// Semi-axes beyond `n + 1` are ignored.
//
// # Safety
// `out` must be valid for writes.
enum FhsStatus fhs_body_ellipsoid(size_t n, double a, double b, double c, struct FhsBody **out);

// # Safety
// `out` must be valid for writes.
enum FhsStatus fhs_body_cylinder(size_t n,
                                 double radius,
                                 double half_height,
                                 double rounding,
                                 struct FhsBody **out);

// # Safety
// `out` must be valid for writes.
enum FhsStatus fhs_body_cube(size_t n, double half_side, struct FhsBody **out);

// Parses a body description such as `"ball:1@0,0,-0.5"`.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be valid for writes.
enum FhsStatus fhs_body_parse(size_t n, const char *spec, struct FhsBody **out);

// A new body equal to `body` translated by `(x, y, z)`.
//
// # Safety
// `body` must be a live handle; `out` must be valid for writes.
enum FhsStatus fhs_body_translated(const struct FhsBody *body,
                                   double x,
                                   double y,
                                   double z,
                                   struct FhsBody **out);

// # Safety
// `body` must be NULL or a handle not yet freed.
void fhs_body_free(struct FhsBody *body);

// # Safety
// `body` must be a live handle; `out` must be valid for writes.
enum FhsStatus fhs_mesh_boundary(const struct FhsBody *body, double target_h, struct FhsMesh **out);

// # Safety
// `mesh` must be a live handle; `out` must be valid for writes.
enum FhsStatus fhs_mesh_refine(const struct FhsMesh *mesh, struct FhsMesh **out);

// # Safety
// `mesh` must be NULL or a handle not yet freed.
void fhs_mesh_free(struct FhsMesh *mesh);

// # Safety
// `mesh` must be a live handle; `out` must be valid for writes.
enum FhsStatus fhs_mesh_element_count(const struct FhsMesh *mesh, size_t *out);

// # Safety
// `mesh` must be a live handle; `out` must be valid for writes.
enum FhsStatus fhs_mesh_total_area(const struct FhsMesh *mesh, double *out);

// Element centroids as `3 * count` doubles.
//
// # Safety
// `mesh` must be a live handle; `out` must hold `len` doubles.
enum FhsStatus fhs_mesh_centroids(const struct FhsMesh *mesh, double *out, size_t len);

// `int |x|^{-beta}` over the whole mesh.
//
// # Safety
// `mesh` must be a live handle; `out` must be valid for writes.
enum FhsStatus fhs_weighted_area(const struct FhsMesh *mesh, double beta, double *out);

// # Safety
// `out` must be valid for writes.
enum FhsStatus fhs_paper_constant(size_t n, double beta, double epsilon, double *out);

// `[u]^p` for per-element values `values[0..len]`.
//
// # Safety
// `mesh` must be a live handle, `values` must hold `len` doubles and `out`
// must be valid for writes.
enum FhsStatus fhs_seminorm(const struct FhsMesh *mesh,
                            const double *values,
                            size_t len,
                            double s,
                            double p,
                            double *out);

// Boundary-form fractional mean curvature at every element.
//
// # Safety
// `mesh` must be a live handle and `out` must hold `len` doubles.
enum FhsStatus fhs_curvature_boundary(const struct FhsMesh *mesh,
                                      double alpha,
                                      double *out,
                                      size_t len);

// # Safety
// `out` must be valid for writes.
enum FhsStatus fhs_derive_tau(size_t n,
                              double s,
                              double p,
                              double q,
                              double a,
                              double gamma,
                              double *out);

// Runs the end-to-end verification and returns the report as JSON.
// `field` and `params` use the same syntax as the command line.
//
// # Safety
// `body` must be a live handle, `field` and `params` NUL-terminated
// strings, and `out` valid for writes. Release the result with
// [`fhs_string_free`].
enum FhsStatus fhs_verify_json(const struct FhsBody *body,
                               const char *field,
                               const char *params,
                               double resolution,
                               size_t refinements,
                               char **out);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void fhs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FHS_H */

#ifndef CMCDEFORM_H
#define CMCDEFORM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result codes of the C interface.
typedef enum CmcStatus {
  CMC_STATUS_OK = 0,
  // A required pointer argument was null.
  CMC_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  CMC_STATUS_INVALID_UTF8 = 2,
  // Bad expressions, grid or options.
  CMC_STATUS_CONFIG = 3,
  // Factorization, integration or masking failure.
  CMC_STATUS_NUMERICAL = 4,
  CMC_STATUS_IO = 5,
  // The output buffer is too small.
  CMC_STATUS_BUFFER_TOO_SMALL = 6,
  // An internal panic was caught.
  CMC_STATUS_PANIC = 7,
} CmcStatus;

// A generated surface and the Hopf differential of its data.
typedef struct CmcMesh CmcMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Surface from classical data `(μ, ν)` on `[-half, half]²` with `n × n`
// nodes, basepoint 0. `h = 0` gives the minimal surface.
//
// # Safety
// `mu` and `nu` are NUL-terminated strings; `out` points to writable
// storage for one handle.
enum CmcStatus cmc_mesh_classical(const char *mu,
                                  const char *nu,
                                  double h,
                                  double half,
                                  size_t n,
                                  struct CmcMesh **out);

// Surface from normalized data `(a, Q)`; otherwise as
// [`cmc_mesh_classical`].
//
// # Safety
// As for [`cmc_mesh_classical`].
enum CmcStatus cmc_mesh_normalized(const char *a,
                                   const char *q,
                                   double h,
                                   double half,
                                   size_t n,
                                   struct CmcMesh **out);

// Member `index` of a gallery family such as `"catenoid"` or `"smyth-2"`,
// on its default grid.
//
// # Safety
// `name` is a NUL-terminated string; `out` points to writable storage.
enum CmcStatus cmc_mesh_gallery(const char *name, size_t index, struct CmcMesh **out);

// Releases a mesh. Null is ignored.
//
// # Safety
// `mesh` is null or a handle from a `cmc_mesh_*` constructor that has not
// been freed.
void cmc_mesh_free(struct CmcMesh *mesh);

// Grid size in nodes along x and y.
//
// # Safety
// `mesh` is null or a live handle; `nx`, `ny` are null or writable.
enum CmcStatus cmc_mesh_dims(const struct CmcMesh *mesh, size_t *nx, size_t *ny);

// Number of unmasked nodes.
//
// # Safety
// `mesh` is null or a live handle.
size_t cmc_mesh_valid_count(const struct CmcMesh *mesh);

// Copies `nx·ny` positions as `x, y, z` triples in row-major node order
// (`i` fastest). Masked nodes are NaN. `len` counts doubles.
//
// # Safety
// `mesh` is a live handle and `buf` holds `len` doubles.
enum CmcStatus cmc_mesh_positions(const struct CmcMesh *mesh, double *buf, size_t len);

// As [`cmc_mesh_positions`] for unit normals.
//
// # Safety
// As for [`cmc_mesh_positions`].
enum CmcStatus cmc_mesh_normals(const struct CmcMesh *mesh, double *buf, size_t len);

// Writes the mesh as OBJ.
//
// # Safety
// `mesh` is a live handle and `path` a NUL-terminated string.
enum CmcStatus cmc_mesh_write_obj(const struct CmcMesh *mesh, const char *path);

// Curvature and diagnostics report as JSON. Release with
// [`cmc_string_free`]. Null on failure.
//
// # Safety
// `mesh` is null or a live handle.
char *cmc_mesh_report_json(const struct CmcMesh *mesh);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` is null or came from [`cmc_mesh_report_json`].
void cmc_string_free(char *s);

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *cmc_last_error(void);

// Library version as a static string.
const char *cmc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CMCDEFORM_H */

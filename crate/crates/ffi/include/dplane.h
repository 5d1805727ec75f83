#ifndef DPLANE_H
#define DPLANE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Chart families, passed to [`dp_chart_new`] as plain integers.
typedef enum DpChartKind {
  // Lines in the plane.
  DP_CHART_KIND_LINE2 = 0,
  // Lines in space.
  DP_CHART_KIND_LINE3 = 1,
  // Planes in space.
  DP_CHART_KIND_PLANE3 = 2,
} DpChartKind;

// Result code of every fallible call.
typedef enum DpStatus {
  DP_STATUS_OK = 0,
  DP_STATUS_NULL_POINTER = 1,
  DP_STATUS_INVALID_INPUT = 2,
  DP_STATUS_CONFIG = 3,
  DP_STATUS_GEOMETRY = 4,
  DP_STATUS_NUMERICAL = 5,
  DP_STATUS_FORMAT = 6,
  DP_STATUS_IO = 7,
  DP_STATUS_PANIC = 8,
} DpStatus;

// Sampling grid of flats.
typedef struct DpChart DpChart;

// Values on a regular image grid.
typedef struct DpImage DpImage;

// Scene of disjoint convex bodies with optional smooth background.
typedef struct DpScene DpScene;

// Values on a chart.
typedef struct DpSinogram DpSinogram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dp_version(void);

// Copy the calling thread's last error message into `buf` (truncated,
// always NUL-terminated when `len > 0`). Returns the full message length
// in bytes, excluding the terminator.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t dp_last_error(char *buf, size_t len);

// Build a scene from the `[scene]` table of a TOML run configuration.
// Relative scene file references resolve against the working directory.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum DpStatus dp_scene_from_toml(const char *toml, struct DpScene **out);

// # Safety
// `scene` must be null or a handle from this library, freed once.
void dp_scene_free(struct DpScene *scene);

// Uniform chart of [`DpChartKind`] `kind` with `directions` direction
// samples and `offsets` samples per offset axis on `[-extent, extent]`.
//
// # Safety
// `out` must be a valid pointer.
enum DpStatus dp_chart_new(int32_t kind,
                           size_t directions,
                           size_t offsets,
                           double extent,
                           struct DpChart **out);

// # Safety
// `chart` must be null or a handle from this library, freed once.
void dp_chart_free(struct DpChart *chart);

// Number of flats in the chart.
//
// # Safety
// `chart` must be a valid handle.
size_t dp_chart_len(const struct DpChart *chart);

// Sinogram of the scene's metal indicator, plus its background when
// `include_background` is set.
//
// # Safety
// Handles must be valid and `out` a valid pointer.
enum DpStatus dp_forward(const struct DpScene *scene,
                         const struct DpChart *chart,
                         bool include_background,
                         struct DpSinogram **out);

// Polychromatic measurement and metal term of the scene.
//
// # Safety
// Handles must be valid and both out pointers valid.
enum DpStatus dp_beam_harden(const struct DpScene *scene,
                             const struct DpChart *chart,
                             double e0,
                             double epsilon,
                             double alpha,
                             struct DpSinogram **measurement,
                             struct DpSinogram **metal_term);

// `-log(sinh t / t)`.
//
// # Safety
// `out` must be a valid pointer.
enum DpStatus dp_metal_term(double t, double *out);

// # Safety
// `sino` must be a valid handle.
size_t dp_sinogram_len(const struct DpSinogram *sino);

// Copy the values, direction-major, into `buf`.
//
// # Safety
// `sino` must be a valid handle and `buf` valid for `len` values.
enum DpStatus dp_sinogram_values(const struct DpSinogram *sino, double *buf, size_t len);

// # Safety
// `sino` must be a valid handle and `path` NUL-terminated.
enum DpStatus dp_sinogram_write(const struct DpSinogram *sino, const char *path);

// # Safety
// `path` must be NUL-terminated and `out` a valid pointer.
enum DpStatus dp_sinogram_read(const char *path, struct DpSinogram **out);

// # Safety
// `sino` must be null or a handle from this library, freed once.
void dp_sinogram_free(struct DpSinogram *sino);

// Filtered back-projection onto a cube of `size` cells per axis over
// `[-extent, extent]`.
//
// # Safety
// `sino` must be a valid handle and `out` a valid pointer.
enum DpStatus dp_fbp(const struct DpSinogram *sino,
                     size_t size,
                     double extent,
                     struct DpImage **out);

// Artifact image from a metal-term sinogram, same grid convention as
// [`dp_fbp`].
//
// # Safety
// `metal_term` must be a valid handle and `out` a valid pointer.
enum DpStatus dp_artifact(const struct DpSinogram *metal_term,
                          size_t size,
                          double extent,
                          struct DpImage **out);

// Cells per axis; unused axes report 1.
//
// # Safety
// `image` must be a valid handle and `shape` valid for 3 values.
enum DpStatus dp_image_shape(const struct DpImage *image, size_t *shape);

// Copy the values, row-major with the last axis fastest, into `buf`.
//
// # Safety
// `image` must be a valid handle and `buf` valid for `len` values.
enum DpStatus dp_image_values(const struct DpImage *image, double *buf, size_t len);

// # Safety
// `image` must be a valid handle and `path` NUL-terminated.
enum DpStatus dp_image_write(const struct DpImage *image, const char *path);

// # Safety
// `path` must be NUL-terminated and `out` a valid pointer.
enum DpStatus dp_image_read(const char *path, struct DpImage **out);

// # Safety
// `image` must be null or a handle from this library, freed once.
void dp_image_free(struct DpImage *image);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPLANE_H */

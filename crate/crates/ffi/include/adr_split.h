#ifndef ADR_SPLIT_H
#define ADR_SPLIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum AdrStatus {
  ADR_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ADR_STATUS_NULL_POINTER = 1,
  /**
   * Bad configuration or argument.
   */
  ADR_STATUS_VALIDATION = 2,
  /**
   * The solve failed numerically.
   */
  ADR_STATUS_NUMERICAL = 3,
  /**
   * Reading or writing a file failed.
   */
  ADR_STATUS_IO = 4,
  /**
   * A buffer was too small or a point lay outside the grid.
   */
  ADR_STATUS_OUT_OF_RANGE = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  ADR_STATUS_PANIC = 6,
} AdrStatus;

/**
 * Opaque run configuration.
 */
typedef struct AdrConfig AdrConfig;

/**
 * Opaque solution grid.
 */
typedef struct AdrGrid AdrGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t adr_last_error(char *buf, size_t len);

/**
 * Loads a config file, or a shipped config by name.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum AdrStatus adr_config_load(const char *path, struct AdrConfig **out);

/**
 * Parses config text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum AdrStatus adr_config_from_string(const char *text, struct AdrConfig **out);

/**
 * Sets the worker count used by later solves.
 *
 * # Safety
 * `config` must come from this library.
 */
enum AdrStatus adr_config_set_workers(struct AdrConfig *config, size_t workers);

/**
 * # Safety
 * `config` must be null or come from this library, and not be used again.
 */
void adr_config_free(struct AdrConfig *config);

/**
 * Runs the splitting method and returns the final grid.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum AdrStatus adr_solve(const struct AdrConfig *config, struct AdrGrid **out);

/**
 * Runs the 2D reference solver.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum AdrStatus adr_reference(const struct AdrConfig *config, struct AdrGrid **out);

/**
 * Runs both solvers and reports the relative errors. `passed` is set to 1
 * when both are within the configured tolerances.
 *
 * # Safety
 * `config` must come from this library; the output pointers must be
 * writable.
 */
enum AdrStatus adr_compare(const struct AdrConfig *config,
                           double *linf,
                           double *l1,
                           int32_t *passed);

/**
 * Node counts of the grid.
 *
 * # Safety
 * `grid` must come from this library; `nx` and `ny` must be writable.
 */
enum AdrStatus adr_grid_dims(const struct AdrGrid *grid, size_t *nx, size_t *ny);

/**
 * Copies the nodal values, row-major with x fastest, into `buf`.
 *
 * # Safety
 * `grid` must come from this library; `buf` must hold `len` doubles.
 */
enum AdrStatus adr_grid_values(const struct AdrGrid *grid, double *buf, size_t len);

/**
 * Bilinear value at `(x, y)`.
 *
 * # Safety
 * `grid` must come from this library; `out` must be writable.
 */
enum AdrStatus adr_grid_sample(const struct AdrGrid *grid, double x, double y, double *out);

/**
 * Writes the grid as `x,y,u` CSV.
 *
 * # Safety
 * `grid` must come from this library; `path` must be a NUL-terminated
 * string.
 */
enum AdrStatus adr_grid_write_csv(const struct AdrGrid *grid, const char *path);

/**
 * # Safety
 * `grid` must be null or come from this library, and not be used again.
 */
void adr_grid_free(struct AdrGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADR_SPLIT_H */

#ifndef TRANSONIC_H
#define TRANSONIC_H

#include <stddef.h>
#include <stdint.h>

// Result codes of the C interface.
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  // A null pointer, a non-UTF-8 string or a buffer of the wrong length.
  TS_STATUS_INVALID_ARGUMENT = 1,
  // The configuration is malformed or violates a constraint.
  TS_STATUS_CONFIG = 2,
  // The iteration left the small-perturbation regime or hit the sweep cap.
  TS_STATUS_DIVERGED = 3,
  // Writing result files failed.
  TS_STATUS_IO = 4,
  // Any other solver error.
  TS_STATUS_SOLVER = 5,
  // A Rust panic was caught at the boundary.
  TS_STATUS_PANIC = 6,
} TsStatus;

// Nodal fields of a solution, each stored row-major as `n_y × n_t` doubles.
typedef enum TsField {
  TS_FIELD_UX = 0,
  TS_FIELD_UR = 1,
  TS_FIELD_UTHETA = 2,
  TS_FIELD_RHO = 3,
  TS_FIELD_P = 4,
  TS_FIELD_ENTROPY = 5,
  TS_FIELD_LAMBDA = 6,
  TS_FIELD_PHI = 7,
  TS_FIELD_PSI = 8,
} TsField;

// Run configuration.
typedef struct TsConfig TsConfig;

// Converged solution together with the inflow it was computed for.
typedef struct TsSolution TsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread. Valid until the next failing call on
// the same thread; empty when nothing has failed.
const char *ts_last_error(void);

// Library version as a static string.
const char *ts_version(void);

// Default configuration: reference background, no perturbation, 129×65 grid.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum TsStatus ts_config_default(struct TsConfig **out);

// Parses a JSON configuration.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum TsStatus ts_config_from_json(const char *json, struct TsConfig **out);

// Applies a dotted `key=value` override. The configuration is left unchanged on failure.
//
// # Safety
// `config` must be a live handle and `assignment` a NUL-terminated string.
enum TsStatus ts_config_set(struct TsConfig *config, const char *assignment);

// Canonical JSON of the configuration with all defaults filled. Release with
// [`ts_string_free`].
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum TsStatus ts_config_to_json(const struct TsConfig *config, char **out);

// # Safety
// `config` must be null or a handle from this library that has not been freed.
void ts_config_free(struct TsConfig *config);

// # Safety
// `s` must be null or a string returned by this library that has not been freed.
void ts_string_free(char *s);

// Builds the inflow and runs the solver. On divergence `*out` is set to null and the
// message names the failed smallness proxy.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum TsStatus ts_solve(const struct TsConfig *config, struct TsSolution **out);

// Solves and writes the result files to `dir`, or a failure report when the run diverges.
//
// # Safety
// `config` must be a live handle and `dir` a NUL-terminated path.
enum TsStatus ts_run(const struct TsConfig *config, const char *dir);

// # Safety
// `solution` must be null or a handle from [`ts_solve`] that has not been freed.
void ts_solution_free(struct TsSolution *solution);

// Grid dimensions.
//
// # Safety
// `solution` must be a live handle; `n_y` and `n_t` valid pointers.
enum TsStatus ts_solution_grid(const struct TsSolution *solution, size_t *n_y, size_t *n_t);

// Copies the shock position `f(r_j)` at the `n_t` radial nodes into `out`.
//
// # Safety
// `solution` must be a live handle and `out` must hold `len` doubles.
enum TsStatus ts_solution_shock(const struct TsSolution *solution, double *out, size_t len);

// Copies one nodal field, row-major over `(y, t)`, into `out`. `field` is a [`TsField`]
// value.
//
// # Safety
// `solution` must be a live handle and `out` must hold `len` doubles.
enum TsStatus ts_solution_field(const struct TsSolution *solution,
                                int field,
                                double *out,
                                size_t len);

// Iteration report and diagnostics as JSON. Release with [`ts_string_free`].
//
// # Safety
// `solution` must be a live handle and `out` a valid pointer.
enum TsStatus ts_solution_report_json(const struct TsSolution *solution, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSONIC_H */

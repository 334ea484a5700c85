#ifndef PLAPMEM_H
#define PLAPMEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define PLAPMEM_OK 0

/*
 Invalid configuration or parameter.
 */
#define PLAPMEM_ERR_CONFIG 2

/*
 The fixed-point iteration did not converge.
 */
#define PLAPMEM_ERR_DIVERGED 3

/*
 Singular or ill-posed linear system, or non-finite input data.
 */
#define PLAPMEM_ERR_SOLVE 4

#define PLAPMEM_ERR_IO 5

/*
 Null pointer, invalid UTF-8 or an index out of range.
 */
#define PLAPMEM_ERR_ARGUMENT 6

/*
 The caller's buffer is shorter than the data to copy.
 */
#define PLAPMEM_ERR_BUFFER_TOO_SMALL 7

/*
 A Rust panic was caught at the boundary.
 */
#define PLAPMEM_ERR_PANIC 8

/*
 A finished solver run.
 */
typedef struct PlapmemRun PlapmemRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *plapmem_version(void);

/*
 Message of the last failed call on this thread, or null if none. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *plapmem_last_error_message(void);

/*
 Regularised flux `(ξ² + ε²)^{(p−2)/2} ξ`.

 # Safety
 `out` must be null or point to writable memory for one `double`.
 */
int32_t plapmem_flux(double xi, double p, double epsilon, double *out);

/*
 Parses a JSON configuration, runs it to `T` and stores a new handle in `*out`.

 # Safety
 `config_json` must be a NUL-terminated string and `out` a writable pointer.
 */
int32_t plapmem_run_from_config_json(const char *config_json, struct PlapmemRun **out);

/*
 Releases a run. Null is ignored.

 # Safety
 `run` must come from `plapmem_run_from_config_json` and not be freed twice.
 */
void plapmem_run_free(struct PlapmemRun *run);

/*
 Number of time steps `N`; 0 for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
size_t plapmem_run_num_steps(const struct PlapmemRun *run);

/*
 Number of interior degrees of freedom; 0 for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
size_t plapmem_run_num_dofs(const struct PlapmemRun *run);

/*
 Copies the `N + 1` time levels.

 # Safety
 `run` must be a live handle and `buf` writable for `len` doubles.
 */
int32_t plapmem_run_times(const struct PlapmemRun *run, double *buf, size_t len);

/*
 Copies the interior node coordinates.

 # Safety
 `run` must be a live handle and `buf` writable for `len` doubles.
 */
int32_t plapmem_run_nodes(const struct PlapmemRun *run, double *buf, size_t len);

/*
 Copies `b(t_k) = ‖U_h(t_k)‖²` for `k = 0..=N`.

 # Safety
 `run` must be a live handle and `buf` writable for `len` doubles.
 */
int32_t plapmem_run_energy(const struct PlapmemRun *run, double *buf, size_t len);

/*
 Copies the coefficients of `u_h` at step `step`.

 # Safety
 `run` must be a live handle and `buf` writable for `len` doubles.
 */
int32_t plapmem_run_solution(const struct PlapmemRun *run, size_t step, double *buf, size_t len);

/*
 Copies the coefficients of the memory term `y_h` at step `step`.

 # Safety
 `run` must be a live handle and `buf` writable for `len` doubles.
 */
int32_t plapmem_run_memory(const struct PlapmemRun *run, size_t step, double *buf, size_t len);

/*
 `L²` errors of `u_h` and `y_h` at `T`; fails with `PLAPMEM_ERR_CONFIG` when the problem
 has no exact solution.

 # Safety
 `run` must be a live handle; `err_u` and `err_y` writable for one double each.
 */
int32_t plapmem_run_l2_errors(const struct PlapmemRun *run, double *err_u, double *err_y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLAPMEM_H */

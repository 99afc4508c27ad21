#ifndef SLENDERLAP_H
#define SLENDERLAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum SlpStatus {
  SLP_STATUS_OK = 0,
  SLP_STATUS_NULL_POINTER = 1,
  SLP_STATUS_INVALID_ARGUMENT = 2,
  SLP_STATUS_DOMAIN = 3,
  SLP_STATUS_GEOMETRY = 4,
  SLP_STATUS_ILL_CONDITIONED = 5,
  SLP_STATUS_SINGULAR = 6,
  SLP_STATUS_NO_CONVERGENCE = 7,
  SLP_STATUS_DIMENSION = 8,
  SLP_STATUS_IO = 9,
  SLP_STATUS_PANIC = 10,
} SlpStatus;

// Backend selector for [`slp_system_new`].
typedef enum SlpBackend {
  SLP_BACKEND_DIRECT = 0,
  SLP_BACKEND_SPLIT = 1,
} SlpBackend;

// Factorized slender-body system on one grid.
typedef struct SlpSystem SlpSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t slp_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *slp_version(void);

// Build and factorize the system for a curve, radius and grid.
//
// `curve` is a preset name (`circle`, `perturbed_circle`) or a curve JSON
// document; null selects the circle.
//
// # Safety
// `curve` must be null or a valid NUL-terminated string; `out` must be a
// valid pointer. The handle must be released with [`slp_system_free`].
enum SlpStatus slp_system_new(const char *curve,
                              double epsilon,
                              size_t n_s,
                              size_t n_theta,
                              enum SlpBackend backend,
                              struct SlpSystem **out);

// Release a handle from [`slp_system_new`]; null is ignored.
//
// # Safety
// `sys` must be null or a handle not yet freed.
void slp_system_free(struct SlpSystem *sys);

// Grid size `(n_s, n_theta)` and the condition estimate of `S_h`.
//
// # Safety
// `sys` must be a live handle; output pointers may be null.
enum SlpStatus slp_system_info(const struct SlpSystem *sys,
                               size_t *n_s,
                               size_t *n_theta,
                               double *condition);

// Dirichlet-to-Neumann map: `v[0..n] -> f[0..n]` at `s_i = i/n`.
//
// # Safety
// `sys` must be a live handle; `v` and `f` must hold `n` values each.
enum SlpStatus slp_dtn(const struct SlpSystem *sys, const double *v, size_t n, double *f);

// Neumann-to-Dirichlet map: `f[0..n] -> v[0..n]`.
//
// # Safety
// `sys` must be a live handle; `f` and `v` must hold `n` values each.
enum SlpStatus slp_ntd(const struct SlpSystem *sys, const double *f, size_t n, double *v);

// Straight-cylinder symbols. `which`: 0 `m_eps_inv(k)`, 1 `m_eps(k)`,
// 2 `m_S(k,l)`, 3 `m_D(k,l)`, 4 `m_S_inv(k)`.
//
// # Safety
// `out` must be a valid pointer.
enum SlpStatus slp_symbol(int32_t which, double epsilon, int64_t k, int64_t l, double *out);

// Modified Bessel functions: `kind` 0 for `I_n`, 1 for `K_n`.
//
// # Safety
// `out` must be a valid pointer.
enum SlpStatus slp_bessel(int32_t kind, uint32_t order, double z, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLENDERLAP_H */

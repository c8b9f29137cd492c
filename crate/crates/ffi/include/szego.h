#ifndef SZEGO_H
#define SZEGO_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SzStatus {
  SZ_STATUS_OK = 0,
  SZ_STATUS_NULL_POINTER = 1,
  SZ_STATUS_INVALID_ARGUMENT = 2,
  SZ_STATUS_CUTOFF_MISMATCH = 3,
  SZ_STATUS_LEFT_MANIFOLD = 4,
  SZ_STATUS_UNSTABLE = 5,
  SZ_STATUS_SVD_FAILED = 6,
  SZ_STATUS_NO_ROOT = 7,
  SZ_STATUS_INFEASIBLE = 8,
  SZ_STATUS_NO_EXPONENTIAL_REGIME = 9,
  SZ_STATUS_BUFFER_TOO_SMALL = 10,
  SZ_STATUS_PANIC = 11,
} SzStatus;

typedef enum SzIntegrator {
  SZ_INTEGRATOR_RK4 = 0,
  SZ_INTEGRATOR_GAUSS_LEGENDRE6 = 1,
} SzIntegrator;

/**
 * Truncated spectrum `û(0..=N)`.
 */
typedef struct SzSpectrum SzSpectrum;

/**
 * Monitored trajectory plus the last state reached.
 */
typedef struct SzTrajectory SzTrajectory;

/**
 * `u = b + cz/(1 − pz)`.
 */
typedef struct SzRational {
  double b_re;
  double b_im;
  double c_re;
  double c_im;
  double p_re;
  double p_im;
} SzRational;

typedef struct SzConserved {
  double q;
  double m;
  double e;
  double j_re;
  double j_im;
} SzConserved;

typedef struct SzFlowConfig {
  double dt;
  /**
   * Negative values run backward in time.
   */
  double t_end;
  size_t cutoff;
  size_t monitor_stride;
  size_t spectrum_rank;
  enum SzIntegrator integrator;
} SzFlowConfig;

/**
 * One monitor row; the singular values are read with
 * [`sz_trajectory_sigma`].
 */
typedef struct SzRow {
  double t;
  double q;
  double m;
  double e;
  double abs_j;
  double h12;
  double h1;
  double bmo_proxy;
  double trace_norm_k;
  double tail;
} SzRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static version string.
 */
const char *sz_version(void);

/**
 * Builds a spectrum from `len ≥ 1` coefficients; the cutoff is `len − 1`.
 *
 * # Safety
 * `re` and `im` must point to `len` readable doubles; `out` must be writable.
 */
enum SzStatus sz_spectrum_new(const double *re,
                              const double *im,
                              size_t len,
                              struct SzSpectrum **out);

/**
 * Samples `b + cz/(1 − pz)` into modes `0..=cutoff`.
 *
 * # Safety
 * `state` must be readable and `out` writable.
 */
enum SzStatus sz_spectrum_from_rational(const struct SzRational *state,
                                        size_t cutoff,
                                        struct SzSpectrum **out);

/**
 * # Safety
 * `u` must be NULL or a handle from this library not yet freed.
 */
void sz_spectrum_free(struct SzSpectrum *u);

/**
 * Cutoff `N`, or 0 for NULL.
 *
 * # Safety
 * `u` must be NULL or a live handle.
 */
size_t sz_spectrum_cutoff(const struct SzSpectrum *u);

/**
 * Copies the `N + 1` coefficients into `re`/`im` (each of length `len`).
 *
 * # Safety
 * `u` must be a live handle; `re`/`im` must hold `len` writable doubles.
 */
enum SzStatus sz_spectrum_coeffs(const struct SzSpectrum *u, double *re, double *im, size_t len);

/**
 * `Q`, `M`, `E` and `J`.
 *
 * # Safety
 * `u` must be a live handle and `out` writable.
 */
enum SzStatus sz_conserved(const struct SzSpectrum *u, struct SzConserved *out);

/**
 * Singular values of the `size × size` section of `K_u`, descending.
 * `written` receives `size`.
 *
 * # Safety
 * `u` must be a live handle; `out` must hold `len` doubles; `written` may
 * be NULL.
 */
enum SzStatus sz_sigma_k(const struct SzSpectrum *u,
                         size_t size,
                         double *out,
                         size_t len,
                         size_t *written);

/**
 * Max-entry Lax residual on the leading `size × size` block.
 *
 * # Safety
 * `u` must be a live handle and `out` writable.
 */
enum SzStatus sz_lax_residual(const struct SzSpectrum *u, double dt, size_t size, double *out);

/**
 * Integrates from `u0`. On a numerical abort the partial trajectory is
 * still stored in `out` and the abort status is returned; on a config
 * error `out` is untouched.
 *
 * # Safety
 * `u0` and `cfg` must be readable, `out` writable.
 */
enum SzStatus sz_evolve(const struct SzSpectrum *u0,
                        const struct SzFlowConfig *cfg,
                        struct SzTrajectory **out);

/**
 * # Safety
 * `tr` must be NULL or a handle from [`sz_evolve`] not yet freed.
 */
void sz_trajectory_free(struct SzTrajectory *tr);

/**
 * Number of monitor rows, or 0 for NULL.
 *
 * # Safety
 * `tr` must be NULL or a live handle.
 */
size_t sz_trajectory_len(const struct SzTrajectory *tr);

/**
 * # Safety
 * `tr` must be a live handle and `out` writable.
 */
enum SzStatus sz_trajectory_row(const struct SzTrajectory *tr, size_t index, struct SzRow *out);

/**
 * The `spectrum_rank` leading singular values of `K_u` at row `index`.
 *
 * # Safety
 * `tr` must be a live handle and `out` must hold `len` doubles.
 */
enum SzStatus sz_trajectory_sigma(const struct SzTrajectory *tr,
                                  size_t index,
                                  double *out,
                                  size_t len);

/**
 * Copies the last state reached into a new spectrum handle.
 *
 * # Safety
 * `tr` must be a live handle and `out` writable.
 */
enum SzStatus sz_trajectory_final_state(const struct SzTrajectory *tr, struct SzSpectrum **out);

/**
 * A resonant `L(1)` state with the given `Q`, `M` and `|p|`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SzStatus sz_find_blowup_initial(double q, double m, double p_abs, struct SzRational *out);

/**
 * `E − ½Q³` of an `L(1)` state.
 *
 * # Safety
 * `state` must be readable and `out` writable.
 */
enum SzStatus sz_resonance_residual(const struct SzRational *state, double *out);

/**
 * `κ = Q^{3/2}√(4M − Q)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SzStatus sz_kappa(double q, double m, double *out);

/**
 * Signed blow-up time of the mean-mode model.
 *
 * # Safety
 * `out` must be writable.
 */
enum SzStatus sz_tilde_e_demo(double x0, double y0, double q, double dt, double *out);

/**
 * Message for the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread
 * or [`sz_clear_error`].
 */
const char *sz_last_error_message(void);

void sz_clear_error(void);

/**
 * Static name of a status code.
 */
const char *sz_status_name(enum SzStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SZEGO_H */

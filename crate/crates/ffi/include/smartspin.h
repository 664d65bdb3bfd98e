#ifndef SMARTSPIN_H
#define SMARTSPIN_H

/* Generated by cbindgen from the smartspin-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SmartStatus {
  SMART_STATUS_OK = 0,
  SMART_STATUS_INVALID_ARGUMENT = 1,
  SMART_STATUS_NUMERICAL_FAILURE = 2,
  SMART_STATUS_IO_FAILURE = 3,
  SMART_STATUS_PANIC = 4,
} SmartStatus;

/**
 * Opaque simulation context: drive strength, global-field variant and
 * integration resolution.
 */
typedef struct SmartContext SmartContext;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *smartspin_version(void);

/**
 * Last error message for this thread, or NULL when none is recorded.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *smartspin_last_error_message(void);

/**
 * Create a context. Returns NULL when the arguments are invalid
 * (`omega_r_mhz <= 0` or `steps_per_period < 64`).
 */
struct SmartContext *smartspin_context_new(double omega_r_mhz,
                                           bool cosine_variant,
                                           uint32_t steps_per_period);

/**
 * Destroy a context created by `smartspin_context_new`.
 *
 * # Safety
 * `ctx` must be a pointer previously returned by `smartspin_context_new`
 * that has not been freed yet (NULL is ignored).
 */
void smartspin_context_free(struct SmartContext *ctx);

/**
 * i-th positive zero of the zeroth-order Bessel function.
 */
enum SmartStatus smartspin_bessel_j0_zero(uint32_t index, double *out);

/**
 * Optimal modulation frequency `Ω_R√2 / j_i` in MHz.
 */
enum SmartStatus smartspin_optimal_mod_frequency(double omega_r_mhz,
                                                 uint32_t root_index,
                                                 double *out);

/**
 * Calibrated harmonic-pair coefficients for `sqrt_x`/`sqrt_y` (and daggers).
 */
enum SmartStatus smartspin_gate_coefficients(const struct SmartContext *ctx,
                                             const char *gate,
                                             uint32_t n_periods,
                                             double *out_nu_v_mhz,
                                             double *out_nu_w_mhz);

/**
 * Zero-noise-calibrated gate fidelity at one quasi-static offset pair.
 */
enum SmartStatus smartspin_gate_fidelity(const struct SmartContext *ctx,
                                         const char *gate,
                                         uint32_t n_periods,
                                         double delta_nu_mhz,
                                         double delta_omega,
                                         double *out_fidelity);

/**
 * Gaussian-averaged identity-gate fidelity at noise levels `(σ_ν, σ_Ω)`,
 * using an offset grid of `grid_points`² cells spanning ±`grid_half_width`.
 */
enum SmartStatus smartspin_identity_noise_average(const struct SmartContext *ctx,
                                                  uint32_t n_periods,
                                                  double sigma_nu_mhz,
                                                  double sigma_omega,
                                                  double *out_fidelity);

/**
 * Validate a scenario config file without running it.
 */
enum SmartStatus smartspin_validate_config(const char *path);

/**
 * Run a scenario config file (TOML config or manifest.json re-run).
 */
enum SmartStatus smartspin_run_config(const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMARTSPIN_H */

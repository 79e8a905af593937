#ifndef ANC_FFI_H
#define ANC_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

typedef enum AncStatus {
  ANC_STATUS_OK = 0,
  ANC_STATUS_NULL_POINTER = 1,
  ANC_STATUS_INVALID_ARGUMENT = 2,
  ANC_STATUS_DIMENSION = 3,
  ANC_STATUS_UNSTABLE = 4,
  ANC_STATUS_IMPROPER = 5,
  ANC_STATUS_SINGULAR = 6,
  ANC_STATUS_CONFIG = 7,
  ANC_STATUS_IO = 8,
  ANC_STATUS_PANIC = 9,
} AncStatus;

typedef struct AncAdaptive AncAdaptive;

typedef struct AncLift AncLift;

typedef struct AncPlant AncPlant;

typedef struct AncComparisonResult {
  double e_norm_proposed;
  double e_norm_conventional;
  double d_norm;
  /**
   * `e_norm_proposed / e_norm_conventional`
   */
  double ratio;
  bool diverged_proposed;
  bool diverged_conventional;
} AncComparisonResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *anc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *anc_version(void);

/**
 * `Π 1/(s+p_i) · Σ_k g_k ω_k² / (s² + 2ζ_k ω_k s + ω_k²)`.
 *
 * # Safety
 * Array arguments must point to at least the stated number of doubles;
 * `out` must be a valid pointer.
 */
enum AncStatus anc_plant_from_bank(const double *gains,
                                   const double *dampings,
                                   const double *frequencies,
                                   size_t n_sections,
                                   const double *poles,
                                   size_t n_poles,
                                   struct AncPlant **out);

/**
 * Plant from row-major `A` (n×n), `B` (n×1), `C` (1×n) and scalar `D`.
 *
 * # Safety
 * `a` must hold `n*n` doubles, `b` and `c` `n` doubles; `out` must be valid.
 */
enum AncStatus anc_plant_from_state_space(const double *a,
                                          const double *b,
                                          const double *c,
                                          double d,
                                          size_t n,
                                          struct AncPlant **out);

/**
 * # Safety
 * `plant` must come from this library and not be used afterwards.
 */
void anc_plant_free(struct AncPlant *plant);

/**
 * State dimension, 0 for a null handle.
 *
 * # Safety
 * `plant` must be null or a live handle.
 */
size_t anc_plant_state_dim(const struct AncPlant *plant);

/**
 * `F(jω)` of a SISO plant.
 *
 * # Safety
 * `plant` must be a live handle; `re` and `im` valid pointers.
 */
enum AncStatus anc_plant_freq_response(const struct AncPlant *plant,
                                       double omega,
                                       double *re,
                                       double *im);

/**
 * Lifted discretization of `plant` with period `h` and ratio `l`.
 *
 * # Safety
 * `plant` must be a live handle; `out` a valid pointer.
 */
enum AncStatus anc_lift_new(const struct AncPlant *plant, double h, size_t l, struct AncLift **out);

/**
 * # Safety
 * `lift` must come from this library and not be used afterwards.
 */
void anc_lift_free(struct AncLift *lift);

/**
 * # Safety
 * `lift` must be null or a live handle.
 */
size_t anc_lift_state_dim(const struct AncLift *lift);

/**
 * # Safety
 * `lift` must be null or a live handle.
 */
size_t anc_lift_ratio(const struct AncLift *lift);

/**
 * One step of the block filter: `η⁺ = A_h η + B_h x`, `U = C_h η + D_h x`.
 * `eta_in` and `eta_out` may alias.
 *
 * # Safety
 * `eta_in`/`eta_out` must hold `eta_len` doubles and `u_out` `u_len`.
 */
enum AncStatus anc_lift_fh_step(const struct AncLift *lift,
                                const double *eta_in,
                                size_t eta_len,
                                double x,
                                double *eta_out,
                                double *u_out,
                                size_t u_len);

/**
 * Adaptive filter state bound to a copy of `lift`, starting from `alpha0`.
 *
 * # Safety
 * `alpha0` must hold `n_taps` doubles; `out` must be valid.
 */
enum AncStatus anc_adaptive_new(const struct AncLift *lift,
                                const double *alpha0,
                                size_t n_taps,
                                struct AncAdaptive **out);

/**
 * # Safety
 * `state` must come from this library and not be used afterwards.
 */
void anc_adaptive_free(struct AncAdaptive *state);

/**
 * `α ← α + μ δ`, then `δ` takes in the error block (`L` samples) of the
 * period that started with noise sample `x_d`.
 *
 * # Safety
 * `e_block` must hold `len` doubles.
 */
enum AncStatus anc_adaptive_step(struct AncAdaptive *state,
                                 double mu,
                                 const double *e_block,
                                 size_t len,
                                 double x_d);

/**
 * Copies the current taps into `out` (`len` must equal the tap count).
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum AncStatus anc_adaptive_taps(const struct AncAdaptive *state, double *out, size_t len);

/**
 * Solves `Φ α = β` for a row-major `n×n` symmetric `Φ`.
 *
 * # Safety
 * `phi` must hold `n*n` doubles, `beta` and `alpha_out` `n` doubles.
 */
enum AncStatus anc_wiener_solve(const double *phi, const double *beta, size_t n, double *alpha_out);

/**
 * Runs the proposed and conventional updates for a configuration given as
 * text (the `anc-sim` config format; empty text means the defaults).
 *
 * # Safety
 * `config_text` must be a NUL-terminated UTF-8 string; `out` valid.
 */
enum AncStatus anc_run_comparison(const char *config_text, struct AncComparisonResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANC_FFI_H */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef LATTICE_BELL_H
#define LATTICE_BELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// No selection: the parity of every outcome counts.
#define LB_POSTSELECT_OFF 0

// Expectation conditioned on one atom per well.
#define LB_POSTSELECT_CONDITIONAL 1

// Selected outcomes weighted by `p * 2^(N-1)`.
#define LB_POSTSELECT_NOMINAL 2

typedef enum LbStatus {
  LB_STATUS_OK = 0,
  LB_STATUS_INVALID_ARGUMENT = 1,
  LB_STATUS_NULL_POINTER = 2,
  // Basis or enumeration larger than allowed.
  LB_STATUS_CAPACITY = 3,
  // Non-Hermitian generator, empty projection or undefined ratio.
  LB_STATUS_NUMERICAL = 4,
  LB_STATUS_BUFFER_TOO_SMALL = 5,
  // A Rust panic was caught at the boundary.
  LB_STATUS_INTERNAL = 6,
} LbStatus;

// Opaque simulator handle.
typedef struct LbSimulator LbSimulator;

// Coefficients of the symmetric two-setting Bell expression.
typedef struct LbBellCoefficients {
  double alpha;
  double beta;
  double gamma;
  double delta;
  double epsilon;
  double classical_bound;
} LbBellCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lb_version(void);

// Message of the last failed call on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *lb_last_error(void);

// Dimension of the `N`-atom sector on `2N` modes.
//
// # Safety
// `out` must be null or point to writable memory.
enum LbStatus lb_basis_dimension(size_t n_wells, uint64_t *out);

// Builds the exact simulator for `n_wells` wells. `dimension_cap` of zero
// selects the default cap.
//
// # Safety
// `out` must be null or point to writable memory. The handle written there
// must be released with [`lb_simulator_free`].
enum LbStatus lb_simulator_new(size_t n_wells,
                               double chi,
                               uint32_t postselect_mode,
                               size_t dimension_cap,
                               struct LbSimulator **out);

// Releases a simulator. Null is accepted.
//
// # Safety
// `sim` must be null or a handle from [`lb_simulator_new`] not yet freed.
void lb_simulator_free(struct LbSimulator *sim);

// Number of basis states of the simulator.
//
// # Safety
// `sim` must be a live handle; `out` must be null or writable.
enum LbStatus lb_simulator_dimension(const struct LbSimulator *sim, size_t *out);

// Probability of one atom per well after the first splitter; 1 when the
// simulator does not post-select.
//
// # Safety
// `sim` must be a live handle; `out` must be null or writable.
enum LbStatus lb_simulator_postselect_probability(const struct LbSimulator *sim, double *out);

// Parity correlator for `n_phases` phases, one per well.
//
// # Safety
// `sim` must be a live handle, `phases` must hold `n_phases` values and
// `out` must be null or writable.
enum LbStatus lb_simulator_parity_correlator(const struct LbSimulator *sim,
                                             const double *phases,
                                             size_t n_phases,
                                             double *out);

// Final state amplitudes in basis order, split into real and imaginary
// parts. `capacity` is the length of each output array; the dimension is
// written to `written` even when the buffers are too small.
//
// # Safety
// `sim` must be a live handle, `phases` must hold `n_phases` values,
// `re` and `im` must each hold `capacity` writable values and `written`
// must be null or writable.
enum LbStatus lb_simulator_final_state(const struct LbSimulator *sim,
                                       const double *phases,
                                       size_t n_phases,
                                       double *re,
                                       double *im,
                                       size_t capacity,
                                       size_t *written);

// `cos(sum phases)`, the post-selected correlator without interactions.
//
// # Safety
// `phases` must hold `n_phases` values and `out` must be null or writable.
enum LbStatus lb_closed_form_correlator(const double *phases, size_t n_phases, double *out);

// Bell expression coefficients for `n_parties >= 2`.
//
// # Safety
// `out` must be null or writable.
enum LbStatus lb_bell_coefficients(size_t n_parties, struct LbBellCoefficients *out);

// Bell value of the settings `(theta, phi)`. Uses the simulator when `sim`
// is non-null and the closed form otherwise.
//
// # Safety
// `sim` must be null or a live handle, `theta` and `phi` must each hold
// `n_wells` values and `out` must be null or writable.
enum LbStatus lb_bell_value(const struct LbSimulator *sim,
                            const double *theta,
                            const double *phi,
                            size_t n_wells,
                            double *out);

// CHSH combination for two wells. Uses the simulator when `sim` is
// non-null and the closed form otherwise.
//
// # Safety
// `sim` must be null or a live two-well handle and `out` must be null or
// writable.
enum LbStatus lb_chsh_value(const struct LbSimulator *sim,
                            double theta1,
                            double theta2,
                            double phi1,
                            double phi2,
                            double *out);

// Minimum of the Bell expression over deterministic local strategies.
// Limited to small party counts.
//
// # Safety
// `out` must be null or writable.
enum LbStatus lb_lhv_minimum(size_t n_parties, double *out);

// Minimizes the Bell value over per-well phases with the default genetic
// algorithm settings and the given seed.
//
// # Safety
// `sim` must be null or a live handle, `theta_out` and `phi_out` must each
// hold `n_wells` writable values and `value_out` must be null or writable.
enum LbStatus lb_optimize_free_phases(const struct LbSimulator *sim,
                                      size_t n_wells,
                                      uint64_t seed,
                                      double *theta_out,
                                      double *phi_out,
                                      double *value_out);

// Minimizes the Bell value over one `(theta, phi)` pair shared by all
// wells: a `grid_steps` x `grid_steps` scan followed by local refinement.
//
// # Safety
// `sim` must be null or a live handle and the out pointers must be null or
// writable.
enum LbStatus lb_optimize_global_phases(const struct LbSimulator *sim,
                                        size_t n_wells,
                                        size_t grid_steps,
                                        double *theta_out,
                                        double *phi_out,
                                        double *value_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATTICE_BELL_H */

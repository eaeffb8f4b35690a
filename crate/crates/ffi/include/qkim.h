#ifndef QKIM_H
#define QKIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum QkimStatus {
  QKIM_STATUS_OK = 0,
  QKIM_STATUS_NULL_POINTER = 1,
  QKIM_STATUS_INVALID_ARGUMENT = 2,
  QKIM_STATUS_TOO_LARGE = 3,
  QKIM_STATUS_UNSUPPORTED = 4,
  QKIM_STATUS_NUMERICAL = 5,
  QKIM_STATUS_PARSE = 6,
  QKIM_STATUS_IO = 7,
  QKIM_STATUS_BUFFER_TOO_SMALL = 8,
  QKIM_STATUS_PANIC = 9,
} QkimStatus;

typedef enum QkimBoundary {
  QKIM_BOUNDARY_PERIODIC = 0,
  QKIM_BOUNDARY_OPEN = 1,
} QkimBoundary;

/**
 * An MPS ground state of an open-chain H_τ.
 */
typedef struct QkimGroundState QkimGroundState;

/**
 * A dense sector Hamiltonian H_τ.
 */
typedef struct QkimHamiltonian QkimHamiltonian;

/**
 * Model parameters (N, boundary, γ, δ, Γ).
 */
typedef struct QkimParams QkimParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated and
 * truncated to `cap` bytes. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null with `cap == 0`.
 */
size_t qkim_last_error_message(char *buf, size_t cap);

/**
 * Creates parameters with J = 1 and β = atanh(γ)/2. `boundary` is a
 * [`QkimBoundary`] value.
 *
 * # Safety
 * `out_params` must be a valid pointer.
 */
enum QkimStatus qkim_params_new(size_t n_sites,
                                double gamma,
                                double delta,
                                uint32_t boundary,
                                double rate_scale,
                                struct QkimParams **out_params);

/**
 * # Safety
 * `params` must come from [`qkim_params_new`] or be null.
 */
void qkim_params_free(struct QkimParams *params);

/**
 * Detailed-balance check of the Glauber rates.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QkimStatus qkim_dbc_check(const struct QkimParams *params, bool *holds, double *max_violation);

/**
 * Builds the dense H_τ for τ given as bits (bit i set ⇔ τ_i = −1).
 *
 * # Safety
 * `params` and `out_h` must be valid pointers.
 */
enum QkimStatus qkim_hamiltonian_build(const struct QkimParams *params,
                                       uint64_t tau_bits,
                                       struct QkimHamiltonian **out_h);

/**
 * # Safety
 * `h` must be a valid handle.
 */
enum QkimStatus qkim_hamiltonian_dim(const struct QkimHamiltonian *h, size_t *dim);

/**
 * Row-major matrix entries (dim² values).
 *
 * # Safety
 * `buf` must hold `*len` doubles.
 */
enum QkimStatus qkim_hamiltonian_matrix(const struct QkimHamiltonian *h, double *buf, size_t *len);

/**
 * Eigenvalues in ascending order.
 *
 * # Safety
 * `buf` must hold `*len` doubles.
 */
enum QkimStatus qkim_hamiltonian_eigenvalues(const struct QkimHamiltonian *h,
                                             double *buf,
                                             size_t *len);

/**
 * # Safety
 * `h` must come from [`qkim_hamiltonian_build`] or be null.
 */
void qkim_hamiltonian_free(struct QkimHamiltonian *h);

/**
 * Imaginary-time TEBD ground state of the open-chain H_τ; `tau` is a
 * '+'/'-' string of length N. Fails with `QKIM_STATUS_NUMERICAL` when the
 * energy does not converge.
 *
 * # Safety
 * `params`, `tau` (NUL-terminated) and `out_gs` must be valid.
 */
enum QkimStatus qkim_ground_state(const struct QkimParams *params,
                                  const char *tau,
                                  size_t chi_max,
                                  struct QkimGroundState **out_gs);

/**
 * # Safety
 * `gs` and `energy` must be valid.
 */
enum QkimStatus qkim_ground_state_energy(const struct QkimGroundState *gs, double *energy);

/**
 * Base-2 entropies S(L) for L = 1..N−1.
 *
 * # Safety
 * `buf` must hold `*len` doubles.
 */
enum QkimStatus qkim_ground_state_entropy(struct QkimGroundState *gs, double *buf, size_t *len);

/**
 * # Safety
 * `gs` must come from [`qkim_ground_state`] or be null.
 */
void qkim_ground_state_free(struct QkimGroundState *gs);

/**
 * Evolves a named initial state ("ghz", "ghz-minus", "thermal", "uniform")
 * under the Lindbladian for time `t` and writes ρ(t) row-major as separate
 * real and imaginary parts (4^N values each; `t` may be +inf). `*len` is the
 * capacity of each buffer on input and 4^N on output.
 *
 * # Safety
 * `params`, `initial` and `len` must be valid; `re` and `im` must each hold
 * `*len` doubles.
 */
enum QkimStatus qkim_evolve_density(const struct QkimParams *params,
                                    const char *initial,
                                    double t,
                                    double *re,
                                    double *im,
                                    size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QKIM_H */

#ifndef STARQ_H
#define STARQ_H

/* Generated by cbindgen from starq-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum StarqStatus {
  StarqStatus_Ok = 0,
  StarqStatus_InvalidArgument = 1,
  StarqStatus_NumericalFailure = 2,
  StarqStatus_NullPointer = 3,
} StarqStatus;

/**
 * Opaque device handle.
 */
typedef struct StarqDevice StarqDevice;

/**
 * Gate counts of a (transpiled) circuit.
 */
typedef struct StarqGateCounts {
  uint64_t moves;
  uint64_t czs;
  uint64_t logical_czs;
  uint64_t rots;
  uint64_t vzs;
  uint64_t measures;
} StarqGateCounts;

/**
 * Dressed frequencies and effective couplings of one qubit-coupler-
 * resonator trio configuration.
 */
typedef struct StarqEffectiveParams {
  double omega_q_dressed_ghz;
  double omega_r_dressed_ghz;
  double g_move_mhz;
  double g_cz_mhz;
  double dispersive_ratio_qc;
  double dispersive_ratio_rc;
} StarqEffectiveParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message of this thread, or null. Caller frees with
 * `starq_string_free`.
 */
char *starq_last_error_message(void);

/**
 * Release a string allocated by this library.
 *
 * # Safety
 * `ptr` must come from this library and not be freed twice.
 */
void starq_string_free(char *ptr);

/**
 * Library version string (static, do not free).
 */
const char *starq_version(void);

/**
 * Create a device from a built-in preset name (`paper-qpu`).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string or null.
 */
struct StarqDevice *starq_device_new_preset(const char *name);

/**
 * Load a device from a JSON file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string or null.
 */
struct StarqDevice *starq_device_load(const char *path);

/**
 * # Safety
 * `dev` must be a live handle from this library (or null).
 */
void starq_device_free(struct StarqDevice *dev);

/**
 * Serialized device parameters as JSON.
 *
 * # Safety
 * `dev` must be a live handle.
 */
char *starq_device_to_json(const struct StarqDevice *dev);

/**
 * Lower a logical circuit (text format) to the native gate set and
 * resolve phases. On success `out_circuit` receives the native text and
 * `out_counts` the gate counts.
 *
 * # Safety
 * Pointers must be valid; `circuit_text` NUL-terminated.
 */
enum StarqStatus starq_transpile(const struct StarqDevice *dev,
                                 const char *circuit_text,
                                 bool use_reuse_pass,
                                 bool frame_tracking,
                                 char **out_circuit,
                                 struct StarqGateCounts *out_counts);

/**
 * Schrieffer-Wolff effective parameters at a gate configuration
 * (frequencies in GHz).
 *
 * # Safety
 * Pointers must be valid; `qubit` NUL-terminated.
 */
enum StarqStatus starq_effective_params(const struct StarqDevice *dev,
                                        const char *qubit,
                                        double f_q_ghz,
                                        double f_c_ghz,
                                        struct StarqEffectiveParams *out);

/**
 * Longitudinal ZZ coupling (MHz) at a coupler frequency and bare
 * detuning delta = f_r - f_q (GHz).
 *
 * # Safety
 * Pointers must be valid; `qubit` NUL-terminated.
 */
enum StarqStatus starq_zz_coupling(const struct StarqDevice *dev,
                                   const char *qubit,
                                   double f_c_ghz,
                                   double delta_ghz,
                                   double *out_zeta_mhz);

/**
 * GHZ coherence budget. `mode` 0 = coherence-limit, 1 = measured
 * fidelities. Outputs the bare limit and the readout-multiplied one.
 *
 * # Safety
 * Pointers must be valid; `move_qubit` NUL-terminated.
 */
enum StarqStatus starq_ghz_budget(const struct StarqDevice *dev,
                                  const char *move_qubit,
                                  uint32_t n_qubits,
                                  uint32_t mode,
                                  bool thermal,
                                  bool zero_resonator_decay,
                                  double *out_total,
                                  double *out_with_readout);

/**
 * Simulate a native circuit and accumulate sampled measurement outcomes
 * into `out_counts` (length 2^qubits, bitstring order with the first
 * declared qubit as the most significant bit).
 *
 * # Safety
 * Pointers must be valid; `out_counts` must hold `counts_len` entries.
 */
enum StarqStatus starq_simulate_counts(const struct StarqDevice *dev,
                                       const char *circuit_text,
                                       uint64_t shots,
                                       uint64_t seed,
                                       bool noisy,
                                       uint64_t trajectories,
                                       uint64_t *out_counts,
                                       uint64_t counts_len);

/**
 * GHZ fidelity through the multiple-quantum-coherences protocol.
 *
 * # Safety
 * Pointers must be valid; `move_qubit` NUL-terminated.
 */
enum StarqStatus starq_mqc_ghz_fidelity(const struct StarqDevice *dev,
                                        uint32_t n_qubits,
                                        const char *move_qubit,
                                        bool noisy,
                                        bool mitigate,
                                        uint64_t shots,
                                        uint64_t trajectories,
                                        uint64_t seed,
                                        double *out_fidelity);

/**
 * Build the native N-qubit GHZ preparation circuit in text form.
 *
 * # Safety
 * `move_qubit` must be NUL-terminated or null.
 */
char *starq_ghz_circuit_text(const struct StarqDevice *dev,
                             uint32_t n_qubits,
                             const char *move_qubit,
                             bool with_measurement);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STARQ_H */

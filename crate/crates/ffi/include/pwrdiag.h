#ifndef PWRDIAG_H
#define PWRDIAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PwrdiagStatus {
  PWRDIAG_STATUS_OK = 0,
  PWRDIAG_STATUS_NULL_POINTER = 1,
  PWRDIAG_STATUS_INVALID_ARGUMENT = 2,
  PWRDIAG_STATUS_IO = 3,
  PWRDIAG_STATUS_PARSE = 4,
  PWRDIAG_STATUS_UNSUPPORTED_VERSION = 5,
  PWRDIAG_STATUS_SHAPE = 6,
  PWRDIAG_STATUS_DIAGNOSIS = 7,
  PWRDIAG_STATUS_PANIC = 8,
} PwrdiagStatus;

typedef enum PwrdiagFaultKind {
  PWRDIAG_FAULT_KIND_NORMAL = 0,
  PWRDIAG_FAULT_KIND_SGTR_A = 1,
  PWRDIAG_FAULT_KIND_SGTR_B = 2,
  PWRDIAG_FAULT_KIND_LOCKED_ROTOR_PUMP1 = 3,
} PwrdiagFaultKind;

/**
 * Opaque trained model.
 */
typedef struct PwrdiagModel PwrdiagModel;

/**
 * Opaque simulator.
 */
typedef struct PwrdiagSimulator PwrdiagSimulator;

/**
 * Window diagnosis. `raw_size` and `raw_location` are the averaged
 * network outputs before clamping and rounding.
 */
typedef struct PwrdiagDiagnosis {
  double predicted_size;
  uint8_t predicted_location;
  double raw_size;
  double raw_location;
  size_t window_frames;
} PwrdiagDiagnosis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *pwrdiag_last_error(void);

/**
 * Library version as a static string.
 */
const char *pwrdiag_version(void);

/**
 * Number of simulator channels.
 */
size_t pwrdiag_channel_count(void);

/**
 * Static label of simulator channel `index`, or null when out of range.
 */
const char *pwrdiag_channel_label(size_t index);

/**
 * Load a model file. On success `*out` receives a handle to free with
 * [`pwrdiag_model_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PwrdiagStatus pwrdiag_model_load_file(const char *path, struct PwrdiagModel **out);

/**
 * Load a model from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PwrdiagStatus pwrdiag_model_load_json(const char *json, struct PwrdiagModel **out);

/**
 * Channels the model expects per frame; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t pwrdiag_model_channel_count(const struct PwrdiagModel *model);

/**
 * Diagnose a window of `n_frames` frames stored row-major, `n_channels`
 * values each, in the model's channel order.
 *
 * # Safety
 * `model` must be a live handle, `frames` must point to
 * `n_frames * n_channels` doubles, and `out` must be valid.
 */
enum PwrdiagStatus pwrdiag_model_diagnose(const struct PwrdiagModel *model,
                                          const double *frames,
                                          size_t n_frames,
                                          size_t n_channels,
                                          struct PwrdiagDiagnosis *out);

/**
 * # Safety
 * `model` must be null or a handle not freed before.
 */
void pwrdiag_model_free(struct PwrdiagModel *model);

/**
 * Create a simulator from scenario JSON (null for normal operation) with
 * the default plant parameters.
 *
 * # Safety
 * `scenario_json` must be null or NUL-terminated; `out` must be valid.
 */
enum PwrdiagStatus pwrdiag_simulator_new(const char *scenario_json, struct PwrdiagSimulator **out);

/**
 * Copy the current frame into `values` (at least
 * [`pwrdiag_channel_count`] doubles). `time` may be null.
 *
 * # Safety
 * `sim` must be a live handle and `values` must hold `len` doubles.
 */
enum PwrdiagStatus pwrdiag_simulator_frame(const struct PwrdiagSimulator *sim,
                                           double *values,
                                           size_t len,
                                           double *time);

/**
 * Advance one step and copy the new frame out.
 *
 * # Safety
 * `sim` must be a live handle and `values` must hold `len` doubles.
 */
enum PwrdiagStatus pwrdiag_simulator_step(struct PwrdiagSimulator *sim,
                                          double *values,
                                          size_t len,
                                          double *time);

/**
 * Start a fault at the simulator's current time.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PwrdiagStatus pwrdiag_simulator_inject(struct PwrdiagSimulator *sim,
                                            enum PwrdiagFaultKind kind,
                                            double severity_percent,
                                            bool eccs_enabled);

/**
 * # Safety
 * `sim` must be null or a handle not freed before.
 */
void pwrdiag_simulator_free(struct PwrdiagSimulator *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PWRDIAG_H */

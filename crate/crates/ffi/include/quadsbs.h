#ifndef QUADSBS_H
#define QUADSBS_H

/* Generated by cbindgen from the quadsbs-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every FFI entry point.
 */
typedef enum QsbsStatus {
  QSBS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QSBS_STATUS_NULL_ARGUMENT = 1,
  /**
   * Configuration text failed to parse or validate.
   */
  QSBS_STATUS_INVALID_CONFIG = 2,
  /**
   * A numeric argument was out of range or non-finite.
   */
  QSBS_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The controller or simulation failed at runtime.
   */
  QSBS_STATUS_RUNTIME_ERROR = 4,
  /**
   * Filesystem I/O failed.
   */
  QSBS_STATUS_IO_ERROR = 5,
} QsbsStatus;

/**
 * Receding-horizon sampling controller plus its gait clock.
 */
typedef struct QsbsController QsbsController;

/**
 * Completed-episode metrics.
 */
typedef struct QsbsSimResult QsbsSimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *qsbs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qsbs_version(void);

/**
 * Creates a controller from TOML configuration text.
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string and `out` a valid
 * pointer; the returned handle must be released with
 * [`qsbs_controller_free`].
 */
enum QsbsStatus qsbs_controller_new(const char *config_toml, struct QsbsController **out);

/**
 * Releases a controller handle. A null handle is a no-op.
 *
 * # Safety
 * `handle` must have come from [`qsbs_controller_new`] and must not be
 * used afterwards.
 */
void qsbs_controller_free(struct QsbsController *handle);

/**
 * Runs one control step.
 *
 * Inputs: `state` is the 12-vector (CoM position, CoM velocity, roll/
 * pitch/yaw, body angular rate), `foot_pos` the four world-frame foot
 * positions (leg-major x,y,z; swing legs should carry their predicted
 * touchdown targets), `stance` the four contact flags, and `cmd` the
 * commanded velocity plus yaw rate `(vx, vy, vz, yaw_rate)`.
 *
 * Outputs: `out_grf` receives the four ground-reaction forces (leg-major),
 * `out_contact` the four contact flags of the emitted input, and
 * `out_freq_hz` the step frequency the controller selected. The internal
 * gait clock advances by one control period.
 *
 * # Safety
 * All pointers must be valid for the documented lengths.
 */
enum QsbsStatus qsbs_controller_step(struct QsbsController *handle,
                                     const double *state,
                                     const double *foot_pos,
                                     const uint8_t *stance,
                                     const double *cmd,
                                     double *out_grf,
                                     uint8_t *out_contact,
                                     double *out_freq_hz);

/**
 * Runs one seeded closed-loop episode of the configured scenario.
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string and `out` a valid
 * pointer; the returned handle must be released with
 * [`qsbs_sim_result_free`].
 */
enum QsbsStatus qsbs_run_episode(const char *config_toml,
                                 uint64_t seed,
                                 struct QsbsSimResult **out);

/**
 * Releases an episode result handle. A null handle is a no-op.
 *
 * # Safety
 * `handle` must have come from [`qsbs_run_episode`] and must not be used
 * afterwards.
 */
void qsbs_sim_result_free(struct QsbsSimResult *handle);

/**
 * Number of control steps the episode ran before finishing or falling.
 *
 * # Safety
 * `handle` must be a live episode result.
 */
uintptr_t qsbs_sim_result_steps(const struct QsbsSimResult *handle);

/**
 * Whether the episode ended in a fall.
 *
 * # Safety
 * `handle` must be a live episode result.
 */
bool qsbs_sim_result_fell(const struct QsbsSimResult *handle);

/**
 * Per-step mean of the realized stage cost.
 *
 * # Safety
 * `handle` must be a live episode result.
 */
double qsbs_sim_result_mean_cost(const struct QsbsSimResult *handle);

/**
 * Mean 3-D velocity tracking error over the episode, m/s.
 *
 * # Safety
 * `handle` must be a live episode result.
 */
double qsbs_sim_result_mean_velocity_error(const struct QsbsSimResult *handle);

/**
 * Writes the episode time series as CSV to `path`.
 *
 * # Safety
 * `handle` must be a live episode result and `path` a valid
 * NUL-terminated string.
 */
enum QsbsStatus qsbs_sim_result_write_csv(const struct QsbsSimResult *handle, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUADSBS_H */

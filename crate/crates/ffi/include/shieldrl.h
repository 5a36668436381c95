#ifndef SHIELDRL_H
#define SHIELDRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShieldrlStatus {
  SHIELDRL_STATUS_OK = 0,
  SHIELDRL_STATUS_NULL_POINTER = 1,
  SHIELDRL_STATUS_INVALID_ARGUMENT = 2,
  SHIELDRL_STATUS_INVALID_STATE = 3,
  SHIELDRL_STATUS_INVALID_PARAMS = 4,
  SHIELDRL_STATUS_NON_FINITE_ACTION = 5,
  SHIELDRL_STATUS_DEGENERATE_GEOMETRY = 6,
  SHIELDRL_STATUS_INFEASIBLE_CONSTRAINTS = 7,
  SHIELDRL_STATUS_INVALID_CONFIG = 8,
  SHIELDRL_STATUS_EPISODE_DONE = 9,
  SHIELDRL_STATUS_BUFFER_TOO_SMALL = 10,
  SHIELDRL_STATUS_IO = 11,
  SHIELDRL_STATUS_PANIC = 12,
} ShieldrlStatus;

/**
 * Opaque environment handle.
 */
typedef struct ShieldrlEnv ShieldrlEnv;

/**
 * Opaque filter handle.
 */
typedef struct ShieldrlFilter ShieldrlFilter;

typedef struct ShieldrlBarrierParams {
  double alpha;
  double tau_lag;
  double a_max;
  double v_max;
} ShieldrlBarrierParams;

typedef struct ShieldrlVec2 {
  double x;
  double y;
} ShieldrlVec2;

typedef struct ShieldrlSafetyState {
  /**
   * Drone position minus obstacle center.
   */
  struct ShieldrlVec2 rel_position;
  struct ShieldrlVec2 drone_velocity;
  struct ShieldrlVec2 obstacle_velocity;
  double drone_radius;
  double obstacle_radius;
} ShieldrlSafetyState;

typedef struct ShieldrlFilterResult {
  struct ShieldrlVec2 safe_action;
  bool modified;
  double h_hard;
  double h_soft;
  bool active_hard;
  bool active_soft;
  bool box_clipped;
  bool box_fallback;
} ShieldrlFilterResult;

/**
 * `termination_reason` is -1 while the episode runs, otherwise 0 success,
 * 1 collision, 2 out of arena, 3 timeout.
 */
typedef struct ShieldrlStepResult {
  double reward;
  bool terminated;
  bool truncated;
  int32_t termination_reason;
} ShieldrlStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the thread's last error message into `buf` (NUL-terminated,
 * truncated to fit). Returns the full message length in bytes, excluding
 * the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t shieldrl_last_error(char *buf, size_t len);

/**
 * Length of an environment observation vector.
 */
size_t shieldrl_obs_dim(void);

struct ShieldrlBarrierParams shieldrl_barrier_params_default(void);

/**
 * Creates a filter. On success `*out` owns a handle for
 * [`shieldrl_filter_free`].
 *
 * # Safety
 * `params` must be null or point to a valid struct; `out` must be null or
 * writable.
 */
enum ShieldrlStatus shieldrl_filter_new(const struct ShieldrlBarrierParams *params,
                                        struct ShieldrlFilter **out);

/**
 * # Safety
 * `filter` must be null or a handle from [`shieldrl_filter_new`] that has
 * not been freed.
 */
void shieldrl_filter_free(struct ShieldrlFilter *filter);

/**
 * # Safety
 * Pointers must be null or valid; `filter` must be a live handle.
 */
enum ShieldrlStatus shieldrl_filter_action(const struct ShieldrlFilter *filter,
                                           const struct ShieldrlSafetyState *state,
                                           struct ShieldrlVec2 nominal,
                                           struct ShieldrlFilterResult *out);

/**
 * Filters `len` independent elements. Each element's status lands in
 * `statuses[i]` and a failing element never affects its neighbours; the
 * return value reports only argument errors.
 *
 * # Safety
 * `states`, `nominals`, `results` and `statuses` must each be valid for
 * `len` elements (they may be null when `len` is 0).
 */
enum ShieldrlStatus shieldrl_filter_action_batch(const struct ShieldrlFilter *filter,
                                                 const struct ShieldrlSafetyState *states,
                                                 const struct ShieldrlVec2 *nominals,
                                                 size_t len,
                                                 struct ShieldrlFilterResult *results,
                                                 enum ShieldrlStatus *statuses);

/**
 * Squared-distance barrier `‖r‖² − R²`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum ShieldrlStatus shieldrl_h_hard(const struct ShieldrlSafetyState *state, double *out);

/**
 * Predictive barrier `‖r‖ − R − D(‖v‖)`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum ShieldrlStatus shieldrl_h_soft(const struct ShieldrlSafetyState *state,
                                    const struct ShieldrlBarrierParams *params,
                                    double *out);

/**
 * Creates an environment from a JSON config (NUL-terminated UTF-8). Missing
 * fields take their defaults; unknown fields are rejected. The environment
 * is reset with the config's seed.
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; `out` null or writable.
 */
enum ShieldrlStatus shieldrl_env_new(const char *config_json, struct ShieldrlEnv **out);

/**
 * # Safety
 * `env` must be null or a live handle from [`shieldrl_env_new`].
 */
void shieldrl_env_free(struct ShieldrlEnv *env);

/**
 * Resets the episode. When `obs` is non-null it receives the first
 * observation and must hold at least [`shieldrl_obs_dim`] doubles.
 *
 * # Safety
 * `env` must be a live handle; `obs` null or valid for `obs_len` doubles.
 */
enum ShieldrlStatus shieldrl_env_reset(struct ShieldrlEnv *env,
                                       uint64_t seed,
                                       double *obs,
                                       size_t obs_len);

/**
 * Applies one action. `obs` (optional) receives the next observation.
 *
 * # Safety
 * `env` must be a live handle; `out` null or writable; `obs` null or valid
 * for `obs_len` doubles.
 */
enum ShieldrlStatus shieldrl_env_step(struct ShieldrlEnv *env,
                                      struct ShieldrlVec2 action,
                                      double *obs,
                                      size_t obs_len,
                                      struct ShieldrlStepResult *out);

/**
 * Safety state against the current critical obstacle.
 *
 * # Safety
 * `env` must be a live handle; `out` null or writable.
 */
enum ShieldrlStatus shieldrl_env_safety_state(const struct ShieldrlEnv *env,
                                              struct ShieldrlSafetyState *out);

/**
 * Streaming SHA-256 of a file. `out_hex` receives 64 lowercase hex digits
 * and a NUL terminator, so it must hold at least 65 bytes.
 *
 * # Safety
 * `path` must be NUL-terminated; `out_hex` valid for 65 bytes.
 */
enum ShieldrlStatus shieldrl_sha256_file(const char *path, char *out_hex);

/**
 * Crash-safe replace of `path` with `len` bytes: write `<path>.tmp`, sync,
 * rename over `path`, sync the directory.
 *
 * # Safety
 * `path` must be NUL-terminated; `bytes` valid for `len` bytes (may be null
 * when `len` is 0).
 */
enum ShieldrlStatus shieldrl_atomic_write(const char *path, const uint8_t *bytes, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHIELDRL_H */

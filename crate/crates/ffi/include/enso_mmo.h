#ifndef ENSO_MMO_H
#define ENSO_MMO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EnsoStatus {
  ENSO_STATUS_OK = 0,
  ENSO_STATUS_NULL_POINTER = 1,
  ENSO_STATUS_VALIDATION = 2,
  ENSO_STATUS_NUMERICAL = 3,
  ENSO_STATUS_BUFFER_TOO_SMALL = 4,
  ENSO_STATUS_PANIC = 5,
} EnsoStatus;

/**
 * Opaque parameter handle.
 */
typedef struct EnsoParams EnsoParams;

/**
 * Opaque trajectory handle.
 */
typedef struct EnsoTrajectory EnsoTrajectory;

/**
 * Dimensionless model parameters.
 */
typedef struct EnsoDimensionless {
  double delta;
  double rho;
  double a;
  double c;
  double k;
} EnsoDimensionless;

/**
 * Scale factors of a physical parameter set.
 */
typedef struct EnsoScales {
  /**
   * Temperature-difference scale [°C].
   */
  double s0;
  /**
   * Temperature scale [°C].
   */
  double t0;
  /**
   * Depth scale [m].
   */
  double h0;
  /**
   * Time scale [days].
   */
  double time0;
} EnsoScales;

/**
 * Folded singularity of the desingularized reduced flow.
 */
typedef struct EnsoFoldedSingularity {
  double x;
  double y;
  double z;
  /**
   * -1 for L-, +1 for L+.
   */
  int32_t side;
  /**
   * 0 node, 1 saddle, 2 focus, 3 degenerate.
   */
  int32_t kind;
  double mu_s_re;
  double mu_s_im;
  double mu_w_re;
  double mu_w_im;
} EnsoFoldedSingularity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *enso_last_error(void);

/**
 * Creates a handle from a named preset such as "table1" or "fig4".
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EnsoStatus enso_params_from_preset(const char *name, struct EnsoParams **out);

/**
 * Creates a handle from dimensionless values.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EnsoStatus enso_params_new(struct EnsoDimensionless values, struct EnsoParams **out);

/**
 * Releases a parameter handle. NULL is ignored.
 *
 * # Safety
 * `params` must come from this library and not be used afterwards.
 */
void enso_params_free(struct EnsoParams *params);

/**
 * Copies the dimensionless values out of a handle.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum EnsoStatus enso_params_get(const struct EnsoParams *params, struct EnsoDimensionless *out);

/**
 * Scale factors of a handle built from a physical preset. Fails with
 * `Validation` for purely dimensionless sets.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum EnsoStatus enso_params_scales(const struct EnsoParams *params, struct EnsoScales *out);

/**
 * Fold offset eta = arccosh(sqrt(c)); the fold curves are x + z = ±eta.
 * Fails with `Validation` when c ≤ 1.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum EnsoStatus enso_fold_eta(const struct EnsoParams *params, double *out);

/**
 * Writes up to `capacity` folded singularities into `buf` and the total
 * count into `count`. Returns `BufferTooSmall` when `capacity < count`;
 * pass a NULL buffer with zero capacity to query the count.
 *
 * # Safety
 * `buf` must hold `capacity` elements; the other pointers must be valid.
 */
enum EnsoStatus enso_folded_singularities(const struct EnsoParams *params,
                                          struct EnsoFoldedSingularity *buf,
                                          uintptr_t capacity,
                                          uintptr_t *count);

/**
 * Integrates the fast system over [t0, t1] from `init` (three values),
 * keeping samples after `t0 + transient`.
 *
 * # Safety
 * `init` must point to three doubles; the other pointers must be valid.
 */
enum EnsoStatus enso_simulate(const struct EnsoParams *params,
                              const double *init,
                              double t0,
                              double t1,
                              double transient,
                              double rtol,
                              double atol,
                              struct EnsoTrajectory **out);

/**
 * Number of stored samples; 0 for NULL.
 *
 * # Safety
 * `traj` must be NULL or a live handle.
 */
uintptr_t enso_trajectory_len(const struct EnsoTrajectory *traj);

/**
 * Copies sample `index` into `time` and `state` (three doubles).
 *
 * # Safety
 * `state` must hold three doubles; the other pointers must be valid.
 */
enum EnsoStatus enso_trajectory_sample(const struct EnsoTrajectory *traj,
                                       uintptr_t index,
                                       double *time,
                                       double *state);

/**
 * Writes the MMO signature (for example "1^5 1^5") as a NUL-terminated
 * string. `written` receives the length without the terminator; on
 * `BufferTooSmall` it holds the required length.
 *
 * # Safety
 * `buf` must hold `capacity` bytes; `written` must be valid.
 */
enum EnsoStatus enso_trajectory_signature(const struct EnsoTrajectory *traj,
                                          char *buf,
                                          uintptr_t capacity,
                                          uintptr_t *written);

/**
 * Releases a trajectory handle. NULL is ignored.
 *
 * # Safety
 * `traj` must come from this library and not be used afterwards.
 */
void enso_trajectory_free(struct EnsoTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENSO_MMO_H */

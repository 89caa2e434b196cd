#ifndef MANIPCTL_H
#define MANIPCTL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum MctlStatus {
  MCTL_STATUS_OK = 0,
  MCTL_STATUS_NULL_POINTER = 1,
  MCTL_STATUS_INVALID_ARGUMENT = 2,
  MCTL_STATUS_DIMENSION_MISMATCH = 3,
  MCTL_STATUS_SINGULAR = 4,
  MCTL_STATUS_DIVERGENCE = 5,
  MCTL_STATUS_UNSUPPORTED = 6,
  MCTL_STATUS_PRECONDITION = 7,
  MCTL_STATUS_PARSE = 8,
  MCTL_STATUS_BUFFER_TOO_SMALL = 9,
  MCTL_STATUS_PANIC = 10,
} MctlStatus;

// Recorded series of a simulation result.
typedef enum MctlSeries {
  // Sample times, one value per sample.
  MCTL_SERIES_TIME = 0,
  // Joint positions, `dof` values per sample.
  MCTL_SERIES_POSITION = 1,
  // Desired joint positions.
  MCTL_SERIES_DESIRED = 2,
  // Tracking error `q_d − q`.
  MCTL_SERIES_ERROR = 3,
  // Applied joint torques.
  MCTL_SERIES_TORQUE = 4,
  // Disturbance torques.
  MCTL_SERIES_DISTURBANCE = 5,
} MctlSeries;

// Opaque manipulator model.
typedef struct MctlModel MctlModel;

// Opaque parsed scenario.
typedef struct MctlScenario MctlScenario;

// Opaque simulation result.
typedef struct MctlSimResult MctlSimResult;

// Scalar summaries of a run.
typedef struct MctlMetrics {
  // RMS tracking error over the final 20% of the run, rad.
  double rms_error_tail;
  // Whether the error entered and stayed inside the settling band.
  bool settled;
  // Settling time in seconds; NaN when `settled` is false.
  double settling_time;
  // Integral of the squared torque norm.
  double control_energy;
} MctlMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL after a
// successful call. Valid until the next call into this library on the
// same thread.
const char *mctl_last_error(void);

// The stock two-link arm: two 1 kg, 1 m slender rods under g = 9.81 m/s².
// Release with [`mctl_model_free`].
struct MctlModel *mctl_model_stock_two_link(void);

// Builds an `n`-link planar revolute arm from per-link parameter arrays.
//
// # Safety
// Each of `mass`, `length`, `com_distance` and `inertia_zz` must point to
// `n` readable doubles; `out` must be writable.
enum MctlStatus mctl_model_new(size_t n,
                               const double *mass,
                               const double *length,
                               const double *com_distance,
                               const double *inertia_zz,
                               double gravity,
                               struct MctlModel **out);

// # Safety
// `model` must be NULL or a handle from this library not yet freed.
void mctl_model_free(struct MctlModel *model);

// Degrees of freedom, or 0 for a NULL handle.
//
// # Safety
// `model` must be NULL or a live handle.
size_t mctl_model_dof(const struct MctlModel *model);

// Writes the `n × n` inertia matrix `M(q)` row-major into `out`.
//
// # Safety
// `q` must hold `n` doubles and `out` room for `n * n`.
enum MctlStatus mctl_model_mass_matrix(const struct MctlModel *model,
                                       const double *q,
                                       size_t n,
                                       double *out);

// Writes the `n × n` Coriolis/centrifugal matrix `C(q, q̇)` row-major into `out`.
//
// # Safety
// `q` and `qdot` must hold `n` doubles and `out` room for `n * n`.
enum MctlStatus mctl_model_coriolis_matrix(const struct MctlModel *model,
                                           const double *q,
                                           const double *qdot,
                                           size_t n,
                                           double *out);

// Writes the gravity torque vector `g(q)` into `out`.
//
// # Safety
// `q` must hold `n` doubles and `out` room for `n`.
enum MctlStatus mctl_model_gravity_vector(const struct MctlModel *model,
                                          const double *q,
                                          size_t n,
                                          double *out);

// Torque `M q̈ + C q̇ + g` that produces the acceleration `qddot`.
//
// # Safety
// `q`, `qdot`, `qddot` must hold `n` doubles and `out` room for `n`.
enum MctlStatus mctl_model_inverse_dynamics(const struct MctlModel *model,
                                            const double *q,
                                            const double *qdot,
                                            const double *qddot,
                                            size_t n,
                                            double *out);

// Joint acceleration under torque `u` and disturbance `d` (`d` may be NULL
// for no disturbance).
//
// # Safety
// `q`, `qdot`, `u` (and `d` when non-NULL) must hold `n` doubles and `out`
// room for `n`.
enum MctlStatus mctl_model_forward_dynamics(const struct MctlModel *model,
                                            const double *q,
                                            const double *qdot,
                                            const double *u,
                                            const double *d,
                                            size_t n,
                                            double *out);

// Routh–Hurwitz test for `s³ + kd s² + kp s + ki`.
//
// # Safety
// `stable` and `margin` must be writable.
enum MctlStatus mctl_routh_stability(double kd, double kp, double ki, bool *stable, double *margin);

// Roots of `s³ + kd s² + kp s + ki`, sorted by real part.
//
// # Safety
// `re` and `im` must each have room for 3 doubles.
enum MctlStatus mctl_poles(double kd, double kp, double ki, double *re, double *im);

// Parses a scenario from NUL-terminated TOML text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum MctlStatus mctl_scenario_from_toml(const char *text, struct MctlScenario **out);

// Built-in scenario by name: `fig6`, `fig7`, `fig7-pd` or `fig8`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` writable.
enum MctlStatus mctl_scenario_preset(const char *name, struct MctlScenario **out);

// # Safety
// `scenario` must be NULL or a handle from this library not yet freed.
void mctl_scenario_free(struct MctlScenario *scenario);

// Runs the scenario's closed-loop simulation.
//
// # Safety
// `scenario` must be a live handle and `out` writable. Release the result
// with [`mctl_result_free`].
enum MctlStatus mctl_simulate(const struct MctlScenario *scenario, struct MctlSimResult **out);

// # Safety
// `result` must be NULL or a handle from this library not yet freed.
void mctl_result_free(struct MctlSimResult *result);

// Number of recorded samples, or 0 for a NULL handle.
//
// # Safety
// `result` must be NULL or a live handle.
size_t mctl_result_len(const struct MctlSimResult *result);

// Joint count of the run, or 0 for a NULL handle.
//
// # Safety
// `result` must be NULL or a live handle.
size_t mctl_result_dof(const struct MctlSimResult *result);

// # Safety
// `result` must be a live handle and `out` writable.
enum MctlStatus mctl_result_metrics(const struct MctlSimResult *result, struct MctlMetrics *out);

// Copies one recorded series into `out`, sample-major: `len` values for
// [`MctlSeries::Time`], `len * dof` for the others. `capacity` is the
// number of doubles available at `out`.
//
// # Safety
// `result` must be a live handle and `out` must have room for `capacity` doubles.
enum MctlStatus mctl_result_copy_series(const struct MctlSimResult *result,
                                        enum MctlSeries series,
                                        double *out,
                                        size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANIPCTL_H */

#ifndef COLLAPSE_LAB_H
#define COLLAPSE_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClStatus {
  CL_STATUS_OK = 0,
  /**
   * A required pointer was null or an index was out of range.
   */
  CL_STATUS_INVALID_ARGUMENT = 1,
  CL_STATUS_INVALID_STATE = 2,
  CL_STATUS_INVALID_PARAMETER = 3,
  CL_STATUS_INTEGRATION = 4,
  CL_STATUS_INVALID_DENSITY_MATRIX = 5,
  CL_STATUS_OFF_GRID = 6,
  CL_STATUS_PANIC = 99,
} ClStatus;

/**
 * Opaque ensemble configuration. Setters store values unchecked;
 * validation happens in [`cl_run_ensemble`].
 */
typedef struct ClEnsembleConfig ClEnsembleConfig;

/**
 * Opaque per-record ensemble moments.
 */
typedef struct ClMomentSeries ClMomentSeries;

typedef struct ClEntropyRecord {
  /**
   * Time in units of 1/J.
   */
  double t;
  double s_td;
  double s_ent_avg;
  double s_sum;
  double s_td_int;
  double weight;
  double coherence_re;
  double coherence_im;
} ClEntropyRecord;

typedef struct ClDensityMatrix {
  double rho00;
  double rho11;
  double rho01_re;
  double rho01_im;
} ClDensityMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *cl_last_error_message(void);

/**
 * Library version as a NUL-terminated string with static lifetime.
 */
const char *cl_version(void);

/**
 * New configuration with the library defaults. Free with [`cl_config_free`].
 */
struct ClEnsembleConfig *cl_config_new(void);

void cl_config_free(struct ClEnsembleConfig *config);

enum ClStatus cl_config_set_n_traj(struct ClEnsembleConfig *config, size_t n_traj);

enum ClStatus cl_config_set_initial_weight(struct ClEnsembleConfig *config, double alpha0_sq);

/**
 * `j`, `g`, `lambda` and the step `dt`, all in absolute units.
 */
enum ClStatus cl_config_set_model(struct ClEnsembleConfig *config,
                                  double j,
                                  double g,
                                  double lambda,
                                  double dt);

enum ClStatus cl_config_set_time_grid(struct ClEnsembleConfig *config,
                                      double t_max,
                                      double record_every);

enum ClStatus cl_config_set_seed(struct ClEnsembleConfig *config, uint64_t seed);

enum ClStatus cl_config_set_noise_frozen(struct ClEnsembleConfig *config, bool stratified);

enum ClStatus cl_config_set_noise_ou(struct ClEnsembleConfig *config, double tau, double g0);

enum ClStatus cl_config_set_noise_white(struct ClEnsembleConfig *config);

/**
 * Runs the ensemble on `workers` threads (0 picks the default) and stores
 * a new handle in `*series`, to be freed with [`cl_series_free`].
 */
enum ClStatus cl_run_ensemble(const struct ClEnsembleConfig *config,
                              size_t workers,
                              struct ClMomentSeries **series);

void cl_series_free(struct ClMomentSeries *series);

/**
 * Number of recorded times; 0 for a null handle.
 */
size_t cl_series_len(const struct ClMomentSeries *series);

enum ClStatus cl_series_entropy(const struct ClMomentSeries *series,
                                size_t index,
                                struct ClEntropyRecord *record_out);

/**
 * Trajectories that ended in |00⟩ and |11⟩ by record `index`.
 */
enum ClStatus cl_series_outcome_counts(const struct ClMomentSeries *series,
                                       size_t index,
                                       uint64_t *n_00,
                                       uint64_t *n_11);

/**
 * Ensemble density matrix at time `t` (in units of 1/J); `t` must lie on
 * the recorded grid.
 */
enum ClStatus cl_series_density_matrix_at(const struct ClMomentSeries *series,
                                          double t,
                                          struct ClDensityMatrix *rho_out);

/**
 * `−p ln p − (1−p) ln(1−p)` in nats; NaN outside [0, 1].
 */
double cl_binary_entropy(double p);

enum ClStatus cl_von_neumann_entropy(const struct ClDensityMatrix *rho, double *entropy);

/**
 * Entanglement entropy of `α|00⟩ + β|11⟩`; the amplitudes must be normalized.
 */
enum ClStatus cl_entanglement_entropy(double alpha_re,
                                      double alpha_im,
                                      double beta_re,
                                      double beta_im,
                                      double *entropy);

/**
 * Entropy left after projecting onto the product basis with populations `p`, `q`.
 */
enum ClStatus cl_interrupt_entropy(double p, double q, double *entropy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLAPSE_LAB_H */

#ifndef CPT_H
#define CPT_H

/* Generated by cbindgen from the cpt-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CptStatus {
  CPT_STATUS_OK = 0,
  CPT_STATUS_NULL_POINTER = 1,
  CPT_STATUS_SCHEMA = 2,
  CPT_STATUS_DOMAIN = 3,
  CPT_STATUS_REGIME = 4,
  CPT_STATUS_NUMERICAL = 5,
  CPT_STATUS_USAGE = 6,
  CPT_STATUS_PANIC = 7,
} CptStatus;

/**
 * Bath configuration.
 */
typedef struct CptBath CptBath;

/**
 * Real 9×9 generator.
 */
typedef struct CptGenerator CptGenerator;

/**
 * Evaluated susceptivities.
 */
typedef struct CptSusceptivities CptSusceptivities;

/**
 * Sampled trajectory.
 */
typedef struct CptTrajectory CptTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *cpt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cpt_version(void);

/**
 * Parses a bath configuration from a NUL-terminated JSON document.
 */
enum CptStatus cpt_bath_from_json(const char *json, struct CptBath **bath);

/**
 * Default bath: gaussian formfactors, Planck occupation at `β = 1`.
 */
struct CptBath *cpt_bath_default(void);

void cpt_bath_free(struct CptBath *bath);

/**
 * Evaluates all susceptivities of `bath`.
 */
enum CptStatus cpt_susceptivities_build(const struct CptBath *bath, struct CptSusceptivities **set);

/**
 * One susceptivity. Indices are 0-based; `sign` is 0 for `+` and 1 for `-`.
 */
enum CptStatus cpt_susceptivities_get(const struct CptSusceptivities *set,
                                      size_t polarization,
                                      size_t alpha,
                                      size_t beta,
                                      uint32_t sign,
                                      double *re,
                                      double *im);

enum CptStatus cpt_susceptivities_einstein_ratio(const struct CptSusceptivities *set,
                                                 double *ratio);

void cpt_susceptivities_free(struct CptSusceptivities *set);

/**
 * Builds the generator of the master equation.
 */
enum CptStatus cpt_generator_build(const struct CptSusceptivities *set,
                                   struct CptGenerator **generator);

/**
 * Copies the 81 generator entries in row-major order.
 */
enum CptStatus cpt_generator_matrix(const struct CptGenerator *generator, double *entries);

void cpt_generator_free(struct CptGenerator *generator);

/**
 * `exp(t L) ρ0`. The initial state must be a density matrix.
 */
enum CptStatus cpt_evolve_exact(const struct CptGenerator *generator,
                                const double *rho0,
                                double t,
                                double *rho);

/**
 * Fixed-step Runge-Kutta trajectory with `samples` evenly spaced samples.
 */
enum CptStatus cpt_evolve_rk(const struct CptGenerator *generator,
                             const double *rho0,
                             double horizon,
                             double dt,
                             size_t samples,
                             struct CptTrajectory **trajectory);

/**
 * Number of samples, 0 for a null handle.
 */
size_t cpt_trajectory_len(const struct CptTrajectory *trajectory);

enum CptStatus cpt_trajectory_sample(const struct CptTrajectory *trajectory,
                                     size_t index,
                                     double *t,
                                     double *rho);

void cpt_trajectory_free(struct CptTrajectory *trajectory);

/**
 * Stationary family member at Einstein ratio `r` and ground coherence `s`.
 */
enum CptStatus cpt_family_state(double r, double s, double *rho);

/**
 * Limit state reached from `rho0` under thermal susceptivities.
 */
enum CptStatus cpt_predict_stationary(const struct CptSusceptivities *set,
                                      const double *rho0,
                                      double *rho);

enum CptStatus cpt_min_ground_population(double n, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPT_H */

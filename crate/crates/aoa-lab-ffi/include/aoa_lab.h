#ifndef AOA_LAB_H
#define AOA_LAB_H

/* Generated by cbindgen from aoa-lab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every C-ABI call.
 */
typedef enum AoaStatus {
  /**
   * Success.
   */
  AOA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  AOA_STATUS_NULL_POINTER = 1,
  /**
   * The scenario JSON failed parsing or validation.
   */
  AOA_STATUS_INVALID_SCHEMA = 2,
  /**
   * An argument was outside its documented domain.
   */
  AOA_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The direct link never succeeds; every age metric is infinite.
   */
  AOA_STATUS_INFEASIBLE = 4,
  /**
   * Not enough data for the requested statistic.
   */
  AOA_STATUS_INSUFFICIENT_DATA = 5,
  /**
   * The result is valid but the optimizer raised a numerical caveat
   * (grid fallback or closed-form/grid mismatch); details via
   * `aoa_last_error`.
   */
  AOA_STATUS_NUMERICAL_FLAG = 6,
  /**
   * Unexpected internal failure (including caught panics).
   */
  AOA_STATUS_INTERNAL = 7,
} AoaStatus;

/**
 * Opaque scenario handle: a validated configuration plus the simulation
 * defaults carried by the file it came from.
 */
typedef struct AoaScenario AoaScenario;

/**
 * Closed-form analysis of a scenario at its configured operating point.
 */
typedef struct AoaAnalysis {
  /**
   * Activation probability of the status-update transmitter.
   */
  double q1;
  /**
   * Activation probability of the power transmitter.
   */
  double q2;
  /**
   * Data success, status link alone.
   */
  double p_d1;
  /**
   * Data success, both links active.
   */
  double p_d12;
  /**
   * Energy success, power link alone.
   */
  double p_e2;
  /**
   * Energy success, both links active.
   */
  double p_e12;
  /**
   * Joint per-slot outcome probabilities and their marginals.
   */
  double p_de;
  double p_dne;
  double p_nde;
  double p_ndne;
  double p_d;
  double p_e;
  /**
   * Steady-state probability the battery is empty, and its complement.
   */
  double p_empty;
  double p_nonempty;
  /**
   * Average ages in slots; may be infinity.
   */
  double avg_aoi;
  double avg_aoa;
  /**
   * True when energy arrivals are the bottleneck.
   */
  bool energy_limited;
} AoaAnalysis;

/**
 * Headline statistics of one simulation run.
 */
typedef struct AoaSimStats {
  double mean_aoi;
  double mean_aoa;
  /**
   * Fraction of counted slots with an actuation.
   */
  double actuation_rate;
  /**
   * Fraction of counted slots that began with an empty battery.
   */
  double p_empty_hat;
  /**
   * Slots contributing to the statistics (horizon minus warmup).
   */
  uint64_t slots_counted;
  uint64_t actuations;
  /**
   * Seed actually used, for reproduction.
   */
  uint64_t seed;
} AoaSimStats;

/**
 * An optimization result.
 */
typedef struct AoaOptimum {
  double q1_star;
  double q2_star;
  /**
   * Average age at the optimum; may be infinity.
   */
  double value;
  /**
   * True when the point came from grid search rather than closed form.
   */
  bool grid_search;
  /**
   * True when a numerical caveat was raised (status is then
   * `NumericalFlag`).
   */
  bool flagged;
} AoaOptimum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failing call on this thread, or null.
 *
 * The pointer stays valid until the next call into this library from the
 * same thread.
 */
const char *aoa_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *aoa_version(void);

/**
 * Parse a scenario from a JSON document.
 *
 * On success writes a freshly allocated handle to `out`; release it with
 * [`aoa_scenario_free`].
 *
 * # Safety
 * `json` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum AoaStatus aoa_scenario_from_json(const char *json, struct AoaScenario **out);

/**
 * Load a scenario from a JSON file on disk.
 *
 * # Safety
 * `path` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum AoaStatus aoa_scenario_load(const char *path, struct AoaScenario **out);

/**
 * Release a handle returned by the constructors; null is a no-op.
 *
 * # Safety
 * `scenario` must have come from this library and not be freed twice.
 */
void aoa_scenario_free(struct AoaScenario *scenario);

/**
 * Closed-form analysis at the scenario's configured (q1, q2).
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum AoaStatus aoa_analyze(const struct AoaScenario *scenario, struct AoaAnalysis *out);

/**
 * Simulate the scenario.
 *
 * `horizon == 0` means "use the horizon and warmup from the scenario
 * file (or their defaults)"; otherwise the caller's values are used.
 * The seed is always the caller's.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum AoaStatus aoa_simulate(const struct AoaScenario *scenario,
                            uint64_t horizon,
                            uint64_t warmup,
                            uint64_t seed,
                            struct AoaSimStats *out);

/**
 * Best (q1, q2) for average information age.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum AoaStatus aoa_optimize_aoi(const struct AoaScenario *scenario, struct AoaOptimum *out);

/**
 * Best (q1, q2) for average actuation age under the scenario's battery
 * model; finite batteries use grid search at the file's grid step.
 *
 * `out` is filled whenever the return is `Ok` or `NumericalFlag`.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum AoaStatus aoa_optimize_aoa(const struct AoaScenario *scenario, struct AoaOptimum *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AOA_LAB_H */

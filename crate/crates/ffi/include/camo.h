#ifndef CAMO_H
#define CAMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CamoStatus {
  CAMO_STATUS_OK = 0,
  CAMO_STATUS_NULL_POINTER = 1,
  CAMO_STATUS_INVALID_ARGUMENT = 2,
  CAMO_STATUS_INVALID_MODEL = 3,
  CAMO_STATUS_BUFFER_TOO_SMALL = 4,
  CAMO_STATUS_LIMIT_EXCEEDED = 5,
  CAMO_STATUS_PANIC = 6,
} CamoStatus;

typedef enum CamoMode {
  CAMO_MODE_NO_ATTACK = 0,
  CAMO_MODE_CAMOUFLAGE = 1,
  CAMO_MODE_STATE_PERCEPTION = 2,
  /**
   * Uses the `budget` and `epsilon` arguments.
   */
  CAMO_MODE_BUDGETED = 3,
} CamoMode;

/**
 * Opaque instance handle.
 */
typedef struct CamoInstance CamoInstance;

typedef struct CamoGapResult {
  /**
   * Shared-argument optimum.
   */
  double o1;
  /**
   * Sum of independent optima.
   */
  double o2;
  double bound;
  bool holds;
} CamoGapResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *camo_version(void);

/**
 * Message for the last failed call on this thread; empty when none. Valid
 * until the next failing call on the same thread.
 */
const char *camo_last_error(void);

/**
 * Three-position ring with `recipients` agents and the given horizon.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum CamoStatus camo_instance_ring(size_t recipients, size_t horizon, struct CamoInstance **out);

/**
 * One of the named presets (`ring-v1`, `chessboard-3x3-v1`,
 * `chessboard-2x2-v1`) at its fixed attacker placement.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` as in [`camo_instance_ring`].
 */
enum CamoStatus camo_instance_preset(const char *name, struct CamoInstance **out);

/**
 * Instance from JSON documents: an MDP and a camouflage scheme. The
 * state-perception domain lets both own state and configuration be distorted
 * and the budget metric is discrete.
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` as in [`camo_instance_ring`].
 */
enum CamoStatus camo_instance_from_json(const char *mdp_json,
                                        const char *scheme_json,
                                        size_t recipients,
                                        struct CamoInstance **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `inst` must come from a constructor here and not be used afterwards.
 */
void camo_instance_free(struct CamoInstance *inst);

/**
 * Horizon of the instance, 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t camo_instance_horizon(const struct CamoInstance *inst);

/**
 * Number of recipients, 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t camo_instance_recipients(const struct CamoInstance *inst);

/**
 * Plans `mode` and writes the cumulative expected reward trajectory from a
 * uniform start, `horizon + 1` entries, into `out`. `budget` and `epsilon`
 * are read only for [`CamoMode::Budgeted`].
 *
 * # Safety
 * `inst` must be a live handle and `out` must point to `out_len` doubles.
 */
enum CamoStatus camo_evaluate(const struct CamoInstance *inst,
                              enum CamoMode mode,
                              double budget,
                              double epsilon,
                              double *out,
                              size_t out_len);

/**
 * Shared-versus-independent minimization gap for `num_functions` functions
 * over a domain of `domain_size` points, row-major in `values`.
 *
 * # Safety
 * `values` must point to `num_functions * domain_size` doubles and `out` to
 * one writable [`CamoGapResult`].
 */
enum CamoStatus camo_lemma1_gap(const double *values,
                                size_t num_functions,
                                size_t domain_size,
                                struct CamoGapResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAMO_H */

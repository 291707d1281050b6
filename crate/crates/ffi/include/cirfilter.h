#ifndef CIRFILTER_H
#define CIRFILTER_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_PARAMETER = 2,
  CF_STATUS_OUT_OF_DOMAIN = 3,
  CF_STATUS_NON_MONOTONE_JUMPS = 4,
  CF_STATUS_TIME_REGRESSION = 5,
  CF_STATUS_DEGENERATE_STATE = 6,
  CF_STATUS_BUFFER_TOO_SMALL = 7,
  CF_STATUS_INTERNAL = 8,
  CF_STATUS_PANIC = 9,
} CfStatus;

/**
 * Filter state at a given time.
 */
typedef struct CfFilter CfFilter;

/**
 * Model parameters plus the prior rate `phi`.
 */
typedef struct CfParams CfParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated description of a status code.
 */
const char *cf_status_message(enum CfStatus status);

/**
 * Validate parameters and create a handle.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one pointer.
 */
enum CfStatus cf_params_new(double alpha,
                            double mu0,
                            double beta,
                            double phi,
                            struct CfParams **out);

/**
 * Release a parameter handle. Null is ignored.
 *
 * # Safety
 * `p` must be null or a handle from [`cf_params_new`] not yet freed.
 */
void cf_params_free(struct CfParams *p);

/**
 * Full-information survival `P(no jump in (s, s+dt] | λ_s)`.
 *
 * # Safety
 * `p` must be a live parameter handle and `out` writable.
 */
enum CfStatus cf_survival_full_info(const struct CfParams *p,
                                    double lambda_s,
                                    double dt,
                                    double *out);

/**
 * Filter at time zero, started from the Gamma prior.
 *
 * # Safety
 * `p` must be a live parameter handle and `out` writable.
 */
enum CfStatus cf_filter_new(const struct CfParams *p, struct CfFilter **out);

/**
 * Release a filter handle. Null is ignored.
 *
 * # Safety
 * `f` must be null or a handle from [`cf_filter_new`] not yet freed.
 */
void cf_filter_free(struct CfFilter *f);

/**
 * Propagate to time `t` with no jump in between.
 *
 * # Safety
 * `f` must be a live filter handle.
 */
enum CfStatus cf_filter_advance(struct CfFilter *f, double t);

/**
 * Propagate to time `t` and register a jump there.
 *
 * # Safety
 * `f` must be a live filter handle.
 */
enum CfStatus cf_filter_jump(struct CfFilter *f, double t);

/**
 * Current time and number of jumps seen.
 *
 * # Safety
 * `f` must be a live filter handle; `t` and `n` writable.
 */
enum CfStatus cf_filter_position(const struct CfFilter *f, double *t, size_t *n);

/**
 * Conditional moment generating function at `s`.
 *
 * # Safety
 * `f` must be a live filter handle and `out` writable.
 */
enum CfStatus cf_filter_mgf(const struct CfFilter *f, double s, double *out);

/**
 * Conditional mean intensity.
 *
 * # Safety
 * `f` must be a live filter handle and `out` writable.
 */
enum CfStatus cf_filter_mean(const struct CfFilter *f, double *out);

/**
 * Common rate of the Gamma mixture posterior.
 *
 * # Safety
 * `f` must be a live filter handle and `out` writable.
 */
enum CfStatus cf_filter_rate(const struct CfFilter *f, double *out);

/**
 * Probability of no jump over the next `dt`, given the jumps so far.
 *
 * # Safety
 * `f` must be a live filter handle and `out` writable.
 */
enum CfStatus cf_filter_survival(const struct CfFilter *f, double dt, double *out);

/**
 * Mixing weights `pi_0..pi_n`. `needed` always receives `n + 1`; if
 * `len` is smaller, nothing else is written and `BUFFER_TOO_SMALL` is
 * returned. `weights` may be null when `len` is zero.
 *
 * # Safety
 * `f` must be a live filter handle, `needed` writable, and `weights`
 * valid for `len` writes.
 */
enum CfStatus cf_filter_mixture_weights(const struct CfFilter *f,
                                        double *weights,
                                        size_t len,
                                        size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIRFILTER_H */

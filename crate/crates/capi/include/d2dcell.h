#ifndef D2DCELL_H
#define D2DCELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum D2dStatus {
  Ok = 0,
  NullArgument = 1,
  InvalidArgument = 2,
  InvalidConfig = 3,
  NumericsFailed = 4,
} D2dStatus;

/**
 * Opaque network configuration handle.
 */
typedef struct D2dConfig D2dConfig;

/**
 * Message describing the most recent error on this thread. Valid until the
 * next failing call on the same thread.
 */
const char *d2dcell_last_error(void);

/**
 * Allocate a configuration seeded with the built-in defaults.
 */
struct D2dConfig *d2dcell_config_new(void);

/**
 * Release a configuration.
 *
 * # Safety
 * `cfg` must come from `d2dcell_config_new` and not be used afterwards.
 */
void d2dcell_config_free(struct D2dConfig *cfg);

/**
 * Set one configuration field by its config-file key (for example
 * "lambda_u" or "beta_dbm"). String-valued keys accept "none", "disk",
 * "serving", "true", "false" through `d2dcell_config_set_str`.
 *
 * # Safety
 * `cfg` must be a live handle and `key` a NUL-terminated string.
 */
enum D2dStatus d2dcell_config_set(struct D2dConfig *cfg, const char *key, double value);

/**
 * Set one configuration field from a string value.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum D2dStatus d2dcell_config_set_str(struct D2dConfig *cfg, const char *key, const char *value);

/**
 * Closed-form probability that a UE operates in cellular mode.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum D2dStatus d2dcell_mode_probability(const struct D2dConfig *cfg, double *out);

/**
 * Mean cellular transmit power under channel inversion, mW.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum D2dStatus d2dcell_mean_cu_tx_power_mw(const struct D2dConfig *cfg, double *out);

/**
 * Analytic coverage probabilities over a threshold grid (dB). `mode` is
 * 0 = cellular, 1 = D2D. `out` must hold `len` doubles.
 *
 * # Safety
 * `cfg` live; `t_db` and `out` valid for `len` elements.
 */
enum D2dStatus d2dcell_coverage_analytic(const struct D2dConfig *cfg,
                                         int mode,
                                         const double *t_db,
                                         uintptr_t len,
                                         double *out);

/**
 * Monte Carlo coverage probabilities with confidence half-widths over a
 * threshold grid. `out_ci` may be NULL when the widths are not wanted.
 *
 * # Safety
 * `cfg` live; arrays valid for `len` elements.
 */
enum D2dStatus d2dcell_coverage_montecarlo(const struct D2dConfig *cfg,
                                           int mode,
                                           const double *t_db,
                                           uintptr_t len,
                                           uintptr_t n_realizations,
                                           uint64_t seed,
                                           double *out,
                                           double *out_ci);

/**
 * Analytic ASE at a working threshold: out[0] = cellular, out[1] = d2d,
 * out[2] = sum, in bps/Hz/km².
 *
 * # Safety
 * `cfg` live; `out` valid for three doubles.
 */
enum D2dStatus d2dcell_ase_analytic(const struct D2dConfig *cfg, double gamma0_db, double *out);

#endif  /* D2DCELL_H */

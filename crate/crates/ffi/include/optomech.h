/* SPDX-License-Identifier: Apache-2.0 */

#ifndef OPTOMECH_H
#define OPTOMECH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Codes 1 to 4 match the CLI exit codes.
 */
typedef enum OmStatus {
  OM_STATUS_OK = 0,
  OM_STATUS_IO = 1,
  OM_STATUS_CONFIG = 2,
  OM_STATUS_PHYSICS = 3,
  OM_STATUS_NUMERICAL = 4,
  OM_STATUS_NULL_POINTER = 5,
  OM_STATUS_INVALID_ARGUMENT = 6,
  OM_STATUS_PANIC = 7,
} OmStatus;

/**
 * Spectrum convention selector.
 */
typedef enum OmConvention {
  /**
   * Constants that reproduce the exact linear response without Kerr medium.
   */
  OM_CONVENTION_NORMALIZED = 0,
  /**
   * Constants 4 and 4 in spring and noise terms, damping weighted by mass.
   */
  OM_CONVENTION_LITERAL = 1,
} OmConvention;

/**
 * Column selector for [`om_spectrum_column`].
 */
typedef enum OmColumn {
  OM_COLUMN_OMEGA = 0,
  OM_COLUMN_SQ_CLOSED = 1,
  OM_COLUMN_SQ_ORACLE = 2,
  OM_COLUMN_SP = 3,
  OM_COLUMN_OMEGA_EFF = 4,
  OM_COLUMN_GAMMA_EFF = 5,
} OmColumn;

/**
 * All steady-state branches of one resolved parameter set.
 */
typedef struct OmBranches OmBranches;

/**
 * Parameter layers: a raw configuration plus optional steady-state targets.
 */
typedef struct OmParams OmParams;

/**
 * Displacement spectrum on a frequency grid.
 */
typedef struct OmSpectrum OmSpectrum;

/**
 * One steady-state branch.
 */
typedef struct OmBranchInfo {
  size_t branch_index;
  double n_s;
  double re_a_s;
  double im_a_s;
  double q_s;
  double delta_eff;
  double residual;
  bool rh[3];
  bool eig_stable;
  bool fold;
} OmBranchInfo;

/**
 * Normal modes of one branch.
 */
typedef struct OmModes {
  /**
   * Drift-matrix eigenvalues, sorted by imaginary part magnitude.
   */
  double eigen_re[4];
  double eigen_im[4];
  /**
   * Closed-form `w+` and `w-`.
   */
  double closed_re[2];
  double closed_im[2];
  /**
   * Distance between the two mirror-response maxima, 0 for one.
   */
  double peak_separation;
  bool splitting_closed;
  bool splitting_numeric;
} OmModes;

/**
 * Effective mirror temperature. When the integral does not settle the call
 * returns [`OmStatus::Numerical`], `t_eff` is NaN and the last two estimates
 * are in `lower` and `upper`.
 */
typedef struct OmTemperature {
  double t_eff;
  double q2_mean;
  double p2_mean;
  double omega_max;
  double lower;
  double upper;
} OmTemperature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *om_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *om_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer returned by this library and not yet freed.
 */
void om_string_free(char *s);

/**
 * Parameters of a bundled preset (`fig2_eta0`, `fig2_eta004`, `schliesser`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum OmStatus om_params_preset(const char *name, struct OmParams **out);

/**
 * Parameters from JSON: a flat parameter object, or a summary with a
 * `params` member.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum OmStatus om_params_from_json(const char *json, struct OmParams **out);

/**
 * Set one parameter or steady-state target (`eta_p`, `g_prime`, `delta_eff`)
 * from its textual value.
 *
 * # Safety
 * `params` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum OmStatus om_params_set(struct OmParams *params, const char *key, const char *value);

/**
 * Resolved parameter set as JSON; release with [`om_string_free`].
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
enum OmStatus om_params_to_json(const struct OmParams *params, char **out);

/**
 * # Safety
 * `params` must be null or a live handle, which becomes invalid.
 */
void om_params_free(struct OmParams *params);

/**
 * Resolve the parameters and solve for every steady-state branch.
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
enum OmStatus om_solve_branches(const struct OmParams *params, struct OmBranches **out);

/**
 * Number of branches; 0 for a null handle.
 *
 * # Safety
 * `branches` must be null or a live handle.
 */
size_t om_branches_len(const struct OmBranches *branches);

/**
 * # Safety
 * `branches` must be a live handle; `out` must be writable.
 */
enum OmStatus om_branches_get(const struct OmBranches *branches,
                              size_t index,
                              struct OmBranchInfo *out);

/**
 * Default branch: the one closest to the targeted photon number when
 * targets are set, else the lowest stable branch.
 *
 * # Safety
 * `branches` must be a live handle; `out` must be writable.
 */
enum OmStatus om_branches_default(const struct OmBranches *branches, size_t *out);

/**
 * # Safety
 * `branches` must be null or a live handle, which becomes invalid.
 */
void om_branches_free(struct OmBranches *branches);

/**
 * Closed-form and numeric normal modes of one branch.
 *
 * # Safety
 * `branches` must be a live handle; `out` must be writable.
 */
enum OmStatus om_modes(const struct OmBranches *branches, size_t index, struct OmModes *out);

/**
 * Displacement spectrum of one stable branch on `count` points from
 * `start` to `stop` (units of the mechanical frequency).
 *
 * # Safety
 * `branches` must be a live handle; `out` must be writable.
 */
enum OmStatus om_spectrum(const struct OmBranches *branches,
                          size_t index,
                          double start,
                          double stop,
                          size_t count,
                          int convention_id,
                          struct OmSpectrum **out);

/**
 * Number of grid points; 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t om_spectrum_len(const struct OmSpectrum *spectrum);

/**
 * Copy one column into `buf`, which must hold [`om_spectrum_len`] values.
 *
 * # Safety
 * `spectrum` must be a live handle; `buf` must be writable for `len` values.
 */
enum OmStatus om_spectrum_column(const struct OmSpectrum *spectrum,
                                 int column,
                                 double *buf,
                                 size_t len);

/**
 * Peak frequencies of the closed-form spectrum. Writes at most `cap` values
 * and stores the total number of peaks in `found`.
 *
 * # Safety
 * `spectrum` must be a live handle; `buf` writable for `cap` values (may be
 * null when `cap` is 0); `found` writable.
 */
enum OmStatus om_spectrum_peaks(const struct OmSpectrum *spectrum,
                                double *buf,
                                size_t cap,
                                size_t *found);

/**
 * # Safety
 * `spectrum` must be null or a live handle, which becomes invalid.
 */
void om_spectrum_free(struct OmSpectrum *spectrum);

/**
 * Effective mirror temperature of one stable branch.
 *
 * # Safety
 * `branches` must be a live handle; `out` must be writable.
 */
enum OmStatus om_effective_temperature(const struct OmBranches *branches,
                                       size_t index,
                                       int convention_id,
                                       struct OmTemperature *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPTOMECH_H */

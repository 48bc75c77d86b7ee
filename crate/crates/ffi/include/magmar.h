#ifndef MAGMAR_H
#define MAGMAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MagmarStatus {
  MAGMAR_STATUS_OK = 0,
  MAGMAR_STATUS_NULL_POINTER = 1,
  MAGMAR_STATUS_INVALID_UTF8 = 2,
  // Malformed model string or parameter list.
  MAGMAR_STATUS_INVALID_ARGUMENT = 3,
  // Bad input series.
  MAGMAR_STATUS_DATA = 4,
  // Root finding, quadrature or likelihood evaluation failed.
  MAGMAR_STATUS_NUMERICAL = 5,
  MAGMAR_STATUS_BUFFER_TOO_SMALL = 6,
  MAGMAR_STATUS_PANIC = 7,
} MagmarStatus;

// Which pair-copula function [`magmar_copula_eval`] computes.
typedef enum MagmarCopulaFn {
  MAGMAR_COPULA_FN_CDF = 0,
  MAGMAR_COPULA_FN_DENSITY = 1,
  // Conditional CDF of the first argument given the second.
  MAGMAR_COPULA_FN_H2 = 2,
  // Inverse of `H2` in its first argument.
  MAGMAR_COPULA_FN_H2_INVERSE = 3,
} MagmarCopulaFn;

// Opaque model handle.
typedef struct MagmarModel MagmarModel;

// Summary of a fit.
typedef struct MagmarFitSummary {
  double nll;
  double aic;
  double bic;
  size_t n_params;
  size_t n_obs;
  bool converged;
} MagmarFitSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *magmar_last_error(void);

// Parses a model string such as `MAGMAR(4,1)-ging-t` into a new handle
// with default parameters.
//
// # Safety
// `text` must be a nul-terminated string; `out_model` must be writable.
enum MagmarStatus magmar_model_parse(const char *text, struct MagmarModel **out_model);

// Releases a handle. Null is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void magmar_model_free(struct MagmarModel *model);

// Number of free parameters, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t magmar_model_n_params(const struct MagmarModel *model);

// Copies the parameters (AR part first) into `out_params`.
//
// # Safety
// `out_params` must hold `len` doubles.
enum MagmarStatus magmar_model_get_params(const struct MagmarModel *model,
                                          double *out_params,
                                          size_t len);

// Replaces the parameters after validating them.
//
// # Safety
// `params` must hold `len` doubles.
enum MagmarStatus magmar_model_set_params(struct MagmarModel *model,
                                          const double *params,
                                          size_t len);

// Writes the canonical model string, nul-terminated, into `buf`.
// `out_needed` (optional) receives the required size including the nul.
//
// # Safety
// `buf` must hold `len` bytes.
enum MagmarStatus magmar_model_string(const struct MagmarModel *model,
                                      char *buf,
                                      size_t len,
                                      size_t *out_needed);

// Simulates `length` observations after `burn_in` discarded ones.
//
// # Safety
// `out_series` must hold `length` doubles.
enum MagmarStatus magmar_simulate(const struct MagmarModel *model,
                                  size_t length,
                                  uint64_t seed,
                                  size_t burn_in,
                                  double *out_series);

// Negative log pseudo-likelihood of a series in (0, 1).
//
// # Safety
// `series` must hold `len` doubles.
enum MagmarStatus magmar_neg_log_likelihood(const struct MagmarModel *model,
                                            const double *series,
                                            size_t len,
                                            double init,
                                            double *out_nll);

// Fits the families of `skeleton` to a series. On success a new handle
// with the estimates is stored in `out_model`; `out_summary` is optional.
//
// # Safety
// `series` must hold `len` doubles; `out_model` must be writable.
enum MagmarStatus magmar_fit(const struct MagmarModel *skeleton,
                             const double *series,
                             size_t len,
                             double init,
                             uint64_t seed,
                             struct MagmarModel **out_model,
                             struct MagmarFitSummary *out_summary);

// Evaluates a bivariate copula of family `code` (`'n'`, `'t'`, `'g'` or
// `'i'`) with the given parameters at `(u1, u2)`.
//
// # Safety
// `params` must hold `n_params` doubles.
enum MagmarStatus magmar_copula_eval(char code,
                                     const double *params,
                                     size_t n_params,
                                     enum MagmarCopulaFn which,
                                     double u1,
                                     double u2,
                                     double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGMAR_H */

#ifndef OPLAB_H
#define OPLAB_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum OplabStatus {
  OPLAB_STATUS_OK = 0,
  OPLAB_STATUS_NULL_POINTER = 1,
  OPLAB_STATUS_INVALID_ARGUMENT = 2,
  OPLAB_STATUS_OVERFLOW = 3,
  OPLAB_STATUS_INFEASIBLE = 4,
  OPLAB_STATUS_OUT_OF_RANGE = 5,
  OPLAB_STATUS_BUFFER_TOO_SMALL = 6,
  OPLAB_STATUS_INTERNAL = 7,
} OplabStatus;

/**
 * Opaque fitted histogram estimator.
 */
typedef struct OplabEstimator OplabEstimator;

/**
 * Opaque input measure.
 */
typedef struct OplabMeasure OplabMeasure;

/**
 * Opaque eigenvalue decay profile.
 */
typedef struct OplabSpectrum OplabSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, valid until the next failing call.
 * Null when no error has occurred yet.
 */
const char *oplab_last_error_message(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `text` must have been returned by an `oplab_*` call and not freed before.
 */
void oplab_string_free(char *text);

/**
 * lambda_i = i^-alpha (alpha > 1).
 */
enum OplabStatus oplab_spectrum_algebraic(double alpha, struct OplabSpectrum **out);

/**
 * lambda_i = exp(-alpha i^beta).
 */
enum OplabStatus oplab_spectrum_exponential(double alpha, double beta, struct OplabSpectrum **out);

/**
 * lambda_i = exp(-exp(alpha i)).
 */
enum OplabStatus oplab_spectrum_double_exponential(double alpha, struct OplabSpectrum **out);

/**
 * Explicit nonincreasing positive eigenvalue list.
 *
 * # Safety
 * `values` must point to `len` readable doubles.
 */
enum OplabStatus oplab_spectrum_explicit(const double *values,
                                         size_t len,
                                         struct OplabSpectrum **out);

/**
 * # Safety
 * `spectrum` must be a live handle from a spectrum constructor; it is
 * invalid after this call.
 */
void oplab_spectrum_free(struct OplabSpectrum *spectrum);

/**
 * lambda_i, 1-based.
 *
 * # Safety
 * `spectrum` must be a live spectrum handle.
 */
enum OplabStatus oplab_spectrum_eigenvalue(const struct OplabSpectrum *spectrum,
                                           size_t i,
                                           double *out);

/**
 * Sum of 1/lambda_j for j <= d.
 *
 * # Safety
 * `spectrum` must be a live spectrum handle.
 */
enum OplabStatus oplab_spectrum_inv_sum(const struct OplabSpectrum *spectrum,
                                        size_t d,
                                        double *out);

/**
 * ln of the inverse sum (finite even when the linear value overflows).
 *
 * # Safety
 * `spectrum` must be a live spectrum handle.
 */
enum OplabStatus oplab_spectrum_log_inv_sum(const struct OplabSpectrum *spectrum,
                                            size_t d,
                                            double *out);

/**
 * Sum of lambda_j for j > d, certified to `rel_tol`.
 *
 * # Safety
 * `spectrum` must be a live spectrum handle.
 */
enum OplabStatus oplab_spectrum_tail_sum(const struct OplabSpectrum *spectrum,
                                         size_t d,
                                         double rel_tol,
                                         double *out);

/**
 * Sum of ln lambda_j for j <= d.
 *
 * # Safety
 * `spectrum` must be a live spectrum handle.
 */
enum OplabStatus oplab_spectrum_log_product(const struct OplabSpectrum *spectrum,
                                            size_t d,
                                            double *out);

/**
 * Input measure over the first `sim_dim` eigencoordinates (`sim_dim = 0`
 * picks the default truncation).
 *
 * # Safety
 * `spectrum` must be a live spectrum handle.
 */
enum OplabStatus oplab_measure_new(const struct OplabSpectrum *spectrum,
                                   int law,
                                   size_t sim_dim,
                                   struct OplabMeasure **out);

/**
 * # Safety
 * `measure` must be a live handle; it is invalid after this call.
 */
void oplab_measure_free(struct OplabMeasure *measure);

/**
 * Simulation dimension of the measure.
 *
 * # Safety
 * `measure` must be a live measure handle.
 */
enum OplabStatus oplab_measure_sim_dim(const struct OplabMeasure *measure, size_t *out);

/**
 * Input-tail energy neglected by the truncation.
 *
 * # Safety
 * `measure` must be a live measure handle.
 */
enum OplabStatus oplab_measure_tail_energy(const struct OplabMeasure *measure, double *out);

/**
 * Draws `count` coordinate vectors into a row-major buffer of
 * `count * sim_dim` doubles. Deterministic given the seed.
 *
 * # Safety
 * `measure` must be a live measure handle and `buffer` must hold
 * `buffer_len` writable doubles.
 */
enum OplabStatus oplab_measure_sample(const struct OplabMeasure *measure,
                                      size_t count,
                                      uint64_t seed,
                                      double *buffer,
                                      size_t buffer_len);

/**
 * Fits the histogram estimator on a dataset given in row-major form:
 * `xs` is `m x x_dim`, `ys` is `m x coeff_dim`. `rank = 0` keeps all
 * coefficients.
 *
 * # Safety
 * `spectrum`, `n_per_axis`, `xs`, `ys` must point to live data of the
 * stated lengths.
 */
enum OplabStatus oplab_histogram_fit(const struct OplabSpectrum *spectrum,
                                     size_t d,
                                     double r_box,
                                     const size_t *n_per_axis,
                                     const double *xs,
                                     size_t x_dim,
                                     const double *ys,
                                     size_t coeff_dim,
                                     size_t m,
                                     size_t rank,
                                     struct OplabEstimator **out);

/**
 * # Safety
 * `estimator` must be a live handle; it is invalid after this call.
 */
void oplab_histogram_free(struct OplabEstimator *estimator);

/**
 * Prediction at a point: writes `coeff_dim` doubles.
 *
 * # Safety
 * `estimator` must be a live handle, `x` must hold `x_len` doubles, and
 * `out` must hold `out_len` writable doubles.
 */
enum OplabStatus oplab_histogram_predict(const struct OplabEstimator *estimator,
                                         const double *x,
                                         size_t x_len,
                                         double *out,
                                         size_t out_len);

/**
 * Number of output coefficients per prediction.
 *
 * # Safety
 * `estimator` must be a live handle.
 */
enum OplabStatus oplab_histogram_coeff_dim(const struct OplabEstimator *estimator, size_t *out);

/**
 * Serializes the estimator to JSON (round-trip safe); free the string with
 * `oplab_string_free`.
 *
 * # Safety
 * `estimator` must be a live handle.
 */
enum OplabStatus oplab_histogram_to_json(const struct OplabEstimator *estimator, char **out);

/**
 * Parses an estimator serialized by `oplab_histogram_to_json`.
 *
 * # Safety
 * `text` must be a NUL-terminated string.
 */
enum OplabStatus oplab_histogram_from_json(const char *text, struct OplabEstimator **out);

/**
 * Evaluated upper-bound display at dimension `d` (`rank = 0` means none,
 * required for white noise).
 *
 * # Safety
 * `spectrum` must be a live spectrum handle.
 */
enum OplabStatus oplab_upper_bound(const struct OplabSpectrum *spectrum,
                                   double m,
                                   double sigma,
                                   double b_bound,
                                   double lipschitz,
                                   double p,
                                   int noise,
                                   size_t rank,
                                   double t,
                                   size_t d,
                                   double *out);

/**
 * Evaluated lower-bound display. `d = 0` scans dimensions up to `d_max`.
 * Writes the bound value, the width used, and the dimension chosen.
 *
 * # Safety
 * `spectrum` must be a live spectrum handle; output pointers must be
 * writable or null.
 */
enum OplabStatus oplab_lower_bound(const struct OplabSpectrum *spectrum,
                                   double m,
                                   double sigma,
                                   double lipschitz,
                                   double b_bound,
                                   double p,
                                   int noise,
                                   double upsilon_top,
                                   int law,
                                   size_t d,
                                   size_t d_max,
                                   double *out_value,
                                   double *out_width,
                                   size_t *out_d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPLAB_H */

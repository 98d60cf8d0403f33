#ifndef FRACRB_H
#define FRACRB_H

/* Generated by cbindgen from fracrb-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum FracrbStatus {
  FRACRB_STATUS_OK = 0,
  FRACRB_STATUS_NULL_POINTER = 1,
  FRACRB_STATUS_INVALID_UTF8 = 2,
  FRACRB_STATUS_IO_ERROR = 3,
  FRACRB_STATUS_BAD_FORMAT = 4,
  FRACRB_STATUS_OUT_OF_DOMAIN = 5,
  FRACRB_STATUS_BUFFER_TOO_SMALL = 6,
  FRACRB_STATUS_NUMERICAL_FAILURE = 7,
  FRACRB_STATUS_NO_CERTIFICATION = 8,
  FRACRB_STATUS_INVALID_ARGUMENT = 9,
  FRACRB_STATUS_PANIC = 99,
} FracrbStatus;

/**
 * Opaque handle for a loaded model.
 */
typedef struct FracrbModel FracrbModel;

/**
 * Basic dimensions of a loaded model.
 */
typedef struct FracrbModelInfo {
  /**
   * Number of reduced basis vectors.
   */
  size_t n_basis;
  /**
   * Length of a trace field (vertices of the 2D grid).
   */
  size_t trace_len;
  /**
   * 1 for the lower fractional-order range (s <= 1/2), 2 for the upper.
   */
  uint32_t subdomain;
  /**
   * Smallest and largest trainable order.
   */
  double s_min;
  double s_max;
  /**
   * Number of affine operator terms.
   */
  size_t n_terms;
  /**
   * 1 when certified error bounds are available.
   */
  uint8_t has_certification;
  /**
   * 1 when the model expects the extra load parameter `nu`.
   */
  uint8_t needs_nu;
} FracrbModelInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library; static storage, do not free.
 */
const char *fracrb_version(void);

/**
 * Loads a model container. On success writes a handle to `out`; the handle
 * must be released with `fracrb_model_free`.
 */
enum FracrbStatus fracrb_model_load(const char *path, struct FracrbModel **out);

/**
 * Releases a handle obtained from `fracrb_model_load`. Null is a no-op.
 */
void fracrb_model_free(struct FracrbModel *model);

/**
 * Fills `out` with the model dimensions.
 */
enum FracrbStatus fracrb_model_info(const struct FracrbModel *model, struct FracrbModelInfo *out);

/**
 * Online solve: writes the reduced (Lagrange) coefficients, `written` of
 * them. Pass `nu = NAN` for single-parameter models and `n_basis = 0` for
 * the full basis. `cap` is the capacity of `out` in elements.
 */
enum FracrbStatus fracrb_online_coeffs(const struct FracrbModel *model,
                                       double s,
                                       double nu,
                                       size_t n_basis,
                                       double *out,
                                       size_t cap,
                                       size_t *written);

/**
 * Online trace field on the 2D grid vertices. `cap` must be at least
 * `trace_len` from `fracrb_model_info`.
 */
enum FracrbStatus fracrb_online_trace(const struct FracrbModel *model,
                                      double s,
                                      double nu,
                                      size_t n_basis,
                                      double *out,
                                      size_t cap);

/**
 * L2 norm over the square of the online trace.
 */
enum FracrbStatus fracrb_trace_l2(const struct FracrbModel *model,
                                  double s,
                                  double nu,
                                  size_t n_basis,
                                  double *out);

/**
 * Certified bound of the fractional Sobolev norm of the trace error, with
 * its ingredients. Requires a container with stability data.
 */
enum FracrbStatus fracrb_error_bound(const struct FracrbModel *model,
                                     double s,
                                     double nu,
                                     double *out_delta,
                                     double *out_residual,
                                     double *out_beta_lb);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACRB_H */

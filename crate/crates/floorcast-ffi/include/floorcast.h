#ifndef FLOORCAST_H
#define FLOORCAST_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes for every exported function.
typedef enum FcStatus {
  FcOk = 0,
  FcErrNullPointer = 1,
  FcErrInvalidArgument = 2,
  FcErrAlphaDomain = 3,
  FcErrNumeric = 4,
  FcErrDegenerateFit = 5,
} FcStatus;

// Opaque floor model: an importance distribution plus activation moments.
typedef struct FcFloorModel FcFloorModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *fc_status_message(enum FcStatus status);

// Features representable per hidden dimension at sparsity `alpha`.
//
// # Safety
// `out` must be a valid pointer.
enum FcStatus fc_capacity_g(double alpha, double *out);

// Smallest width at which all `n_features` features fit.
//
// # Safety
// `out` must be a valid pointer.
enum FcStatus fc_critical_width(uint64_t n_features, double alpha, double *out);

// min(n_features, floor(d_s * g(alpha))).
//
// # Safety
// `out` must be a valid pointer.
enum FcStatus fc_representable_features(uint64_t d_s,
                                        double alpha,
                                        uint64_t n_features,
                                        uint64_t *out);

// Zipf-importance model with Bernoulli-uniform activations.
//
// # Safety
// `out` must be a valid pointer; on success it receives an owned handle
// that must be released with `fc_floor_model_free`.
enum FcStatus fc_floor_model_zipf(uint64_t n_features, double alpha, struct FcFloorModel **out);

// Model from measured importances (sorted internally) with unit second
// moments, as used for SAE-derived predictions.
//
// # Safety
// `importance` must point to `len` readable doubles; `out` must be valid.
enum FcStatus fc_floor_model_empirical(const double *importance,
                                       uintptr_t len,
                                       double alpha,
                                       struct FcFloorModel **out);

// Release a model handle. Null is a no-op.
//
// # Safety
// `model` must be null or a handle from a constructor, freed once.
void fc_floor_model_free(struct FcFloorModel *model);

// Predicted floor at width `d_s`.
//
// # Safety
// `model` must be a live handle; `out` must be a valid pointer.
enum FcStatus fc_floor_model_predict(const struct FcFloorModel *model, uint64_t d_s, double *out);

// OLS of observed on predicted floors: observed = C * predicted + B.
//
// # Safety
// The three arrays must each hold `len` readable elements; the out
// pointers must be valid.
enum FcStatus fc_fit_affine(const uint64_t *d_s,
                            const double *predicted,
                            const double *observed,
                            uintptr_t len,
                            double *out_c,
                            double *out_b,
                            double *out_r_squared);

// Fit observed = a * d_s^-gamma + b.
//
// # Safety
// `d_s` and `observed` must each hold `len` readable elements; the out
// pointers must be valid.
enum FcStatus fc_fit_power_law(const double *d_s,
                               const double *observed,
                               uintptr_t len,
                               double *out_a,
                               double *out_gamma,
                               double *out_b,
                               double *out_r_squared);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOORCAST_H */

#ifndef HERMITE_BMO_H
#define HERMITE_BMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

// Result codes. `HB_STATUS_OK` is zero; the others mirror the library's
// error kinds plus the failures specific to the C boundary.
typedef enum HbStatus {
  HB_STATUS_OK = 0,
  HB_STATUS_NULL_POINTER = 1,
  HB_STATUS_DOMAIN = 2,
  HB_STATUS_SINGULAR_POINT = 3,
  HB_STATUS_ACCURACY = 4,
  HB_STATUS_RESOLUTION = 5,
  HB_STATUS_REJECTED_INPUT = 6,
  HB_STATUS_UNSUPPORTED = 7,
  HB_STATUS_INGESTION = 8,
  HB_STATUS_CONFIG = 9,
  HB_STATUS_IO = 10,
  HB_STATUS_INVALID_UTF8 = 11,
  HB_STATUS_PANIC = 12,
} HbStatus;

// Sampled function on `[-L, L]^n`.
typedef struct HbGridFunction HbGridFunction;

// Summary of a BMO_H norm estimate.
typedef struct HbBmoEstimate {
  double osc_sup;
  double mean_sup;
  double norm;
  double refined_norm;
  size_t balls;
  size_t unresolved;
  bool converged;
} HbBmoEstimate;

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *hb_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hb_version(void);

// Mehler kernel `W_{t(s)}(x, y)` for `s` in `(0, 1)`; `x` and `y` have `n`
// coordinates.
//
// # Safety
// `x` and `y` must point to `n` doubles and `out` to one writable double.
enum HbStatus hb_heat_kernel(double s, size_t n, const double *x, const double *y, double *out);

// `W_{t(s)} 1 (x)`.
//
// # Safety
// `x` must point to `n` doubles and `out` to one writable double.
enum HbStatus hb_heat_action_on_one(double s, size_t n, const double *x, double *out);

// Kernel of the Riesz transform along `axis` (0-based) off the diagonal.
//
// # Safety
// `x` and `y` must point to `n` doubles and `out` to one writable double.
enum HbStatus hb_riesz_kernel(size_t axis, size_t n, const double *x, const double *y, double *out);

// Critical radius `gamma(x)`.
//
// # Safety
// `x` must point to `n` doubles and `out` to one writable double.
enum HbStatus hb_critical_radius(size_t n, const double *x, double *out);

// ρ-variation of the sequence `values[0..len]`.
//
// # Safety
// `values` must point to `len` doubles and `out` to one writable double.
enum HbStatus hb_variation(const double *values, size_t len, double rho, double *out);

// Creates a grid function from `m^n` row-major samples (last axis
// fastest) on `[-half_width, half_width]^n`.
//
// # Safety
// `samples` must point to `len` doubles and `out` to a writable handle
// pointer.
enum HbStatus hb_grid_function_new(size_t n,
                                   double half_width,
                                   size_t m,
                                   const double *samples,
                                   size_t len,
                                   struct HbGridFunction **out);

// Releases a handle; null is ignored.
//
// # Safety
// `f` must be null or a handle from this library not yet freed.
void hb_grid_function_free(struct HbGridFunction *f);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `f` must be null or a live handle.
size_t hb_grid_function_len(const struct HbGridFunction *f);

// Copies the samples into `buf`, which must hold exactly the handle's
// length.
//
// # Safety
// `f` must be a live handle and `buf` must point to `len` writable doubles.
enum HbStatus hb_grid_function_samples(const struct HbGridFunction *f, double *buf, size_t len);

// `W_{t(s)} f` as a new handle.
//
// # Safety
// `f` must be a live handle and `out` a writable handle pointer.
enum HbStatus hb_apply_heat(const struct HbGridFunction *f, double s, struct HbGridFunction **out);

// `P_t f` as a new handle.
//
// # Safety
// `f` must be a live handle and `out` a writable handle pointer.
enum HbStatus hb_apply_poisson(const struct HbGridFunction *f,
                               double t,
                               struct HbGridFunction **out);

// Riesz transform along `axis` (0-based) as a new handle.
//
// # Safety
// `f` must be a live handle and `out` a writable handle pointer.
enum HbStatus hb_riesz_transform(const struct HbGridFunction *f,
                                 size_t axis,
                                 struct HbGridFunction **out);

// Estimate of `||f||_{BMO_H}` over the default ball families on the
// handle's box, with relative tolerance `tol` for the space context.
//
// # Safety
// `f` must be a live handle and `out` writable.
enum HbStatus hb_bmo_h_norm(const struct HbGridFunction *f, double tol, struct HbBmoEstimate *out);

// Runs the verification described by the JSON configuration `config`
// and returns the JSON summary in `*out`, to be released with
// [`hb_string_free`]. `*passed` receives whether every line passed.
//
// # Safety
// `config` must be a NUL-terminated string; `out` and `passed` writable.
enum HbStatus hb_verify_json(const char *config, char **out, bool *passed);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void hb_string_free(char *s);

#endif  /* HERMITE_BMO_H */

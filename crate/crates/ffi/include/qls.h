#ifndef QLS_H
#define QLS_H

#include <stddef.h>
#include <stdint.h>

typedef enum QlsStatus {
  QLS_STATUS_OK = 0,
  QLS_STATUS_NULL_ARGUMENT = 1,
  QLS_STATUS_INVALID_INPUT = 2,
  QLS_STATUS_NUMERICAL_FAILURE = 3,
  QLS_STATUS_BUFFER_TOO_SMALL = 4,
  QLS_STATUS_PANIC = 5,
} QlsStatus;

// Opaque system handle.
typedef struct QlsSystem QlsSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
const char *qls_last_error(void);

// Parse a system from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum QlsStatus qls_system_from_json(const char *json, struct QlsSystem **out);

// # Safety
// `sys` must come from this library and not be used afterwards.
void qls_system_free(struct QlsSystem *sys);

// JSON form of a system; free the result with `qls_string_free`.
//
// # Safety
// `sys` must be a live handle and `out` a valid pointer.
enum QlsStatus qls_system_to_json(const struct QlsSystem *sys, char **out);

// # Safety
// `s` must come from this library or be null.
void qls_string_free(char *s);

// Number of modes and channels.
//
// # Safety
// `sys` must be a live handle; `n` and `m` valid pointers.
enum QlsStatus qls_system_dims(const struct QlsSystem *sys, uintptr_t *n, uintptr_t *m);

// # Safety
// `sys` must be a live handle and `out` a valid pointer.
enum QlsStatus qls_system_is_hurwitz(const struct QlsSystem *sys, int32_t *out);

// Doubled-up transfer function at `s = re + i im`, written row-major as
// interleaved `(re, im)` pairs; `len` is the buffer size in doubles and
// must be at least `2 (2m)^2`.
//
// # Safety
// `sys` must be a live handle and `out` must hold `len` doubles.
enum QlsStatus qls_transfer_function(const struct QlsSystem *sys,
                                     double re,
                                     double im,
                                     double *out,
                                     uintptr_t len);

// Power spectrum at `s`; `cov_json` may be null for vacuum input.
//
// # Safety
// As for `qls_transfer_function`; `cov_json` is null or NUL-terminated.
enum QlsStatus qls_power_spectrum(const struct QlsSystem *sys,
                                  const char *cov_json,
                                  double re,
                                  double im,
                                  double *out,
                                  uintptr_t len);

// Coherent absorber of `sys`. On success `*dual` is a new handle.
//
// # Safety
// `sys` must be a live handle; `dual` and `purity_residual` valid pointers.
enum QlsStatus qls_absorber(const struct QlsSystem *sys,
                            double gm_tol,
                            struct QlsSystem **dual,
                            double *purity_residual);

// Stationary QFI rate of an affine family (JSON) at `theta0`. `method` is
// 0 for the time-domain formula, 1 for frequency-domain quadrature;
// `cov_json` may be null for vacuum input.
//
// # Safety
// Strings must be NUL-terminated (or null for `cov_json`); `out` valid.
enum QlsStatus qls_qfi_rate(const char *family_json,
                            const char *cov_json,
                            double theta0,
                            int32_t method,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLS_H */

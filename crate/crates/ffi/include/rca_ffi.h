#ifndef RCA_FFI_H
#define RCA_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result codes.
 */
typedef enum RcaStatus {
  RCA_STATUS_OK = 0,
  RCA_STATUS_NULL_POINTER = 1,
  /*
   An argument lies outside the domain of the operation.
   */
  RCA_STATUS_INVALID_ARGUMENT = 2,
  /*
   A linear solve was singular or ill-conditioned.
   */
  RCA_STATUS_NUMERICAL = 3,
  RCA_STATUS_MODEL_VIOLATION = 4,
  RCA_STATUS_CONFIG = 5,
  RCA_STATUS_IO = 6,
  /*
   The output buffer is too small; the required length was written.
   */
  RCA_STATUS_BUFFER_TOO_SMALL = 7,
  /*
   A Rust panic was caught at the boundary.
   */
  RCA_STATUS_INTERNAL = 8,
} RcaStatus;

/*
 Opaque simulation handle.
 */
typedef struct RcaModel RcaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates a model with the default system parameters.

 # Safety
 `out` must be valid for writing one pointer.
 */
enum RcaStatus rca_model_new_default(struct RcaModel **out);

/*
 Creates a model from a NUL-terminated TOML configuration.

 # Safety
 `toml` must point to a NUL-terminated string and `out` must be valid for
 writing one pointer.
 */
enum RcaStatus rca_model_new_from_toml(const char *toml, struct RcaModel **out);

/*
 Releases a model. Null is ignored.

 # Safety
 `model` must be null or a handle from `rca_model_new*` not freed before.
 */
void rca_model_free(struct RcaModel *model);

/*
 Number of couplers `N`, or 0 for a null handle.

 # Safety
 `model` must be null or a live handle.
 */
size_t rca_model_num_couplers(const struct RcaModel *model);

/*
 Self-impedance of one dipole in ohms.

 # Safety
 `model` must be a live handle; `re` and `im` must be writable.
 */
enum RcaStatus rca_self_impedance(const struct RcaModel *model, double *re, double *im);

/*
 Writes `Z_TX` for the given rotation into `out` as `2·(N+1)²` doubles.
 When `out_len` is too small the required length is stored in
 `*required` and `BufferTooSmall` is returned.

 # Safety
 `axes` must hold `3·num_couplers` doubles, `out` must hold `out_len`
 doubles and `required` must be null or writable.
 */
enum RcaStatus rca_impedance_matrix(const struct RcaModel *model,
                                    const double *axes,
                                    size_t num_couplers,
                                    double *out,
                                    size_t out_len,
                                    size_t *required);

/*
 Whether the rotation lies in the cap and keeps every pair of wires at
 least `2a` apart.

 # Safety
 `axes` must hold `3·num_couplers` doubles and `feasible` must be
 writable.
 */
enum RcaStatus rca_is_feasible(const struct RcaModel *model,
                               const double *axes,
                               size_t num_couplers,
                               bool *feasible);

/*
 Received SNR (linear) and achievable rate in bits/s/Hz for the given
 rotation over the channel drawn from `seed`.

 # Safety
 `axes` must hold `3·num_couplers` doubles; `snr` and `rate` must be
 writable.
 */
enum RcaStatus rca_evaluate(const struct RcaModel *model,
                            const double *axes,
                            size_t num_couplers,
                            uint64_t seed,
                            double *snr,
                            double *rate);

/*
 Optimizes the rotation for the channel drawn from `seed`. Writes the
 `3·N` axis components, the rate and the number of refinement iterations.

 # Safety
 `axes_out` must hold `3·N` doubles; `rate` and `iterations` must be null
 or writable.
 */
enum RcaStatus rca_optimize(const struct RcaModel *model,
                            uint64_t seed,
                            double *axes_out,
                            size_t axes_len,
                            double *rate,
                            size_t *iterations);

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len - 1` bytes) and returns its full length in bytes.

 # Safety
 `buf` must be null or hold `len` bytes.
 */
size_t rca_last_error_message(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *rca_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCA_FFI_H */

/* C interface to the tofec library. Generated by cbindgen; do not edit. */

#ifndef TOFEC_H
#define TOFEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum TofecStatus {
  TOFEC_STATUS_OK = 0,
  // A required pointer argument was null.
  TOFEC_STATUS_NULL_ARGUMENT = 1,
  // An argument failed validation; see `tofec_last_error_message`.
  TOFEC_STATUS_INVALID_ARGUMENT = 2,
  // The offered load exceeds the thread count.
  TOFEC_STATUS_UNSTABLE = 3,
  // A numerical search found no solution in range.
  TOFEC_STATUS_NO_SOLUTION = 4,
  TOFEC_STATUS_NOT_FOUND = 5,
  TOFEC_STATUS_IO_ERROR = 6,
  TOFEC_STATUS_INTERNAL = 7,
} TofecStatus;

// Storage operation type.
typedef enum TofecOpType {
  TOFEC_OP_TYPE_READ = 0,
  TOFEC_OP_TYPE_WRITE = 1,
} TofecOpType;

// Opaque handle to one request class.
typedef struct TofecClassSpec TofecClassSpec;

// Opaque handle to a systematic MDS strip code.
typedef struct TofecCodec TofecCodec;

// Opaque handle to a validated set of delay coefficients.
typedef struct TofecDelayParams TofecDelayParams;

// Opaque handle to a per-class threshold table.
typedef struct TofecThresholds TofecThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or null if no
// call has failed yet. The pointer stays valid until the next failing call
// on the same thread; do not free it.
const char *tofec_last_error_message(void);

// Library version as a static string; do not free.
const char *tofec_version(void);

// Release a string returned by this library.
//
// # Safety
// `s` must be a pointer previously returned through a `*mut c_char`
// out-parameter of this library, not yet freed, or null.
void tofec_string_free(char *s);

// Release a byte buffer returned by this library.
//
// # Safety
// `(ptr, len)` must come from a buffer out-parameter of this library, not
// yet freed; `ptr` may be null.
void tofec_bytes_free(uint8_t *ptr, size_t len);

// Create delay coefficients. All four values are in seconds (the slopes per
// MB of chunk size).
//
// # Safety
// `out` must be a valid pointer.
enum TofecStatus tofec_delay_params_new(double fixed_shift_s,
                                        double shift_slope_s_per_mb,
                                        double fixed_tail_s,
                                        double tail_slope_s_per_mb,
                                        struct TofecDelayParams **out);

// # Safety
// `params` must come from `tofec_delay_params_new` and not be freed twice.
void tofec_delay_params_free(struct TofecDelayParams *params);

// Deterministic lower bound of the task delay at the given chunk size.
//
// # Safety
// `params` and `out` must be valid pointers.
enum TofecStatus tofec_delay_params_shift(const struct TofecDelayParams *params,
                                          double chunk_mb,
                                          double *out);

// Mean of the exponential delay tail at the given chunk size.
//
// # Safety
// `params` and `out` must be valid pointers.
enum TofecStatus tofec_delay_params_tail_mean(const struct TofecDelayParams *params,
                                              double chunk_mb,
                                              double *out);

// Create a request class. The delay coefficients are copied; the `params`
// handle stays owned by the caller.
//
// # Safety
// `params` and `out` must be valid pointers.
enum TofecStatus tofec_class_spec_new(enum TofecOpType op_type,
                                      double file_size_mb,
                                      double mix_fraction,
                                      uint32_t k_max,
                                      uint32_t n_max,
                                      double r_max,
                                      const struct TofecDelayParams *params,
                                      struct TofecClassSpec **out);

// # Safety
// `class` must come from `tofec_class_spec_new` and not be freed twice.
void tofec_class_spec_free(struct TofecClassSpec *class_);

// Expected service delay of an (n, k) code when all its tasks start
// together (harmonic-sum form), in seconds.
//
// # Safety
// `class` and `out` must be valid pointers.
enum TofecStatus tofec_service_delay_exact(const struct TofecClassSpec *class_,
                                           uint32_t n,
                                           uint32_t k,
                                           double *out);

// Logarithmic approximation of the service delay; fails for n = k.
//
// # Safety
// `class` and `out` must be valid pointers.
enum TofecStatus tofec_service_delay_approx(const struct TofecClassSpec *class_,
                                            uint32_t n,
                                            uint32_t k,
                                            double *out);

// Expected thread-seconds one request consumes under an (n, k) code.
//
// # Safety
// `class` and `out` must be valid pointers.
enum TofecStatus tofec_expected_usage(const struct TofecClassSpec *class_,
                                      uint32_t n,
                                      uint32_t k,
                                      double *out);

// Expected request-queue length at normalized load `rho` with `threads`
// parallel connections; fails when `rho >= threads`.
//
// # Safety
// `out` must be a valid pointer.
enum TofecStatus tofec_expected_queue_length(double rho, uint32_t threads, double *out);

// Exact inverse of `tofec_expected_queue_length`.
//
// # Safety
// `out` must be a valid pointer.
enum TofecStatus tofec_load_from_queue_length(double queue_length, uint32_t threads, double *out);

// Build the adaptation threshold table for a class with the given thread
// count.
//
// # Safety
// `class` and `out` must be valid pointers.
enum TofecStatus tofec_thresholds_build(const struct TofecClassSpec *class_,
                                        uint32_t threads,
                                        struct TofecThresholds **out);

// # Safety
// `thresholds` must come from `tofec_thresholds_build` and not be freed
// twice.
void tofec_thresholds_free(struct TofecThresholds *thresholds);

// Serialize a threshold table to JSON (arrays `zeta` and `kappa`, with the
// leading infinite entry encoded as the string "inf"). Free the result with
// `tofec_string_free`.
//
// # Safety
// `thresholds` and `out_json` must be valid pointers.
enum TofecStatus tofec_thresholds_to_json(const struct TofecThresholds *thresholds,
                                          char **out_json);

// Relaxed (real-valued) optimal code for one class at expected queue length
// `queue_length`.
//
// # Safety
// `class` and the three out-pointers must be valid.
enum TofecStatus tofec_optimal_code_for_queue(const struct TofecClassSpec *class_,
                                              double queue_length,
                                              uint32_t threads,
                                              double *out_k,
                                              double *out_r,
                                              double *out_n);

// Run one simulation from a scenario-config JSON document (the same schema
// the CLI accepts) and return the aggregate report as JSON. Trace-driven
// scenarios resolve relative trace paths against the process working
// directory. Free the result with `tofec_string_free`.
//
// # Safety
// `config_json` must be a valid NUL-terminated string and `out_report_json`
// a valid pointer.
enum TofecStatus tofec_simulate_json(const char *config_json, char **out_report_json);

// Create a systematic (total_strips, data_strips) code over strips of
// `strip_bytes` bytes. At most 256 strips.
//
// # Safety
// `out` must be a valid pointer.
enum TofecStatus tofec_codec_new(uint32_t total_strips,
                                 uint32_t data_strips,
                                 size_t strip_bytes,
                                 struct TofecCodec **out);

// # Safety
// `codec` must come from `tofec_codec_new` and not be freed twice.
void tofec_codec_free(struct TofecCodec *codec);

// Encode exactly `data_strips * strip_bytes` input bytes into a coded file
// of `total_strips * strip_bytes` bytes. Free the output with
// `tofec_bytes_free`.
//
// # Safety
// `codec` must be valid; `data` must point to `data_len` readable bytes;
// `out` and `out_len` must be valid pointers.
enum TofecStatus tofec_codec_encode(const struct TofecCodec *codec,
                                    const uint8_t *data,
                                    size_t data_len,
                                    uint8_t **out,
                                    size_t *out_len);

// Reconstruct the original file from `count` strips. `indices` holds the
// strip indices; `strips` holds the strip payloads concatenated in the same
// order, `count * strip_bytes` bytes total. Free the output with
// `tofec_bytes_free`.
//
// # Safety
// `codec` must be valid; `indices` must point to `count` u32 values;
// `strips` must point to `count * strip_bytes` readable bytes; `out` and
// `out_len` must be valid pointers.
enum TofecStatus tofec_codec_decode(const struct TofecCodec *codec,
                                    const uint32_t *indices,
                                    size_t count,
                                    const uint8_t *strips,
                                    uint8_t **out,
                                    size_t *out_len);

// Reconstruct the original file from whole chunks of `chunk_bytes` bytes
// each (a batch of strips per chunk). `chunks` holds `count * chunk_bytes`
// bytes. Free the output with `tofec_bytes_free`.
//
// # Safety
// `codec` must be valid; `indices` must point to `count` u32 values;
// `chunks` must point to `count * chunk_bytes` readable bytes; `out` and
// `out_len` must be valid pointers.
enum TofecStatus tofec_codec_decode_chunks(const struct TofecCodec *codec,
                                           size_t chunk_bytes,
                                           const uint32_t *indices,
                                           size_t count,
                                           const uint8_t *chunks,
                                           uint8_t **out,
                                           size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOFEC_H */

#ifndef DEEPMF_H
#define DEEPMF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum DmfStatus {
  DMF_STATUS_OK = 0,
  DMF_STATUS_NULL_POINTER = 1,
  DMF_STATUS_INVALID_ARGUMENT = 2,
  DMF_STATUS_IO = 3,
  DMF_STATUS_FORMAT = 4,
  DMF_STATUS_LENGTH = 5,
  DMF_STATUS_NUMERICAL = 6,
  DMF_STATUS_BUFFER_TOO_SMALL = 7,
  DMF_STATUS_PANIC = 8,
  DMF_STATUS_OTHER = 9,
} DmfStatus;

// Opaque model handle.
typedef struct DmfModel DmfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *dmf_last_error(void);

// Library version as a static NUL-terminated string.
const char *dmf_version(void);

// Sample rate expected by `dmf_infer`, Hz.
double dmf_model_fs(void);

// Loads a model file written by the `deepmf` tool.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum DmfStatus dmf_model_load(const char *path, struct DmfModel **out);

// Creates an untrained model with the built-in template.
//
// # Safety
// `out` must be a valid pointer.
enum DmfStatus dmf_model_init(uint64_t seed, bool template_init, struct DmfModel **out);

// Releases a model; NULL is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void dmf_model_free(struct DmfModel *model);

// Number of convolution kernels used at inference.
//
// # Safety
// `model` and `out` must be valid pointers.
enum DmfStatus dmf_model_kernel_count(const struct DmfModel *model, size_t *out);

// Scores a raw ear-ECG trace sampled at `dmf_model_fs()` Hz. `scores`
// receives `len` values.
//
// # Safety
// `signal` and `scores` must each hold `len` doubles.
enum DmfStatus dmf_infer(const struct DmfModel *model,
                         const double *signal,
                         size_t len,
                         double *scores);

// Normalised matched filter of `signal` against the built-in template.
//
// # Safety
// `signal` and `out` must each hold `len` doubles.
enum DmfStatus dmf_matched_filter(const double *signal, size_t len, double *out);

// Peaks of a score trace with the evaluation constraints (distance 12,
// width 25) above `min_height`. `*count` always receives the number of
// peaks; if it exceeds `capacity` nothing is written and
// `DMF_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `scores` must hold `len` doubles, `indices` `capacity` entries.
enum DmfStatus dmf_find_peaks(const double *scores,
                              size_t len,
                              double min_height,
                              size_t *indices,
                              size_t capacity,
                              size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEEPMF_H */

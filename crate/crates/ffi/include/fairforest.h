#ifndef FAIRFOREST_H
#define FAIRFOREST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FF_OK 0

// A required pointer argument was null.
#define FF_ERR_NULL 1

// Bad input data: unreadable file, dimension mismatch, non-binary labels.
#define FF_ERR_INPUT 2

// A metric is undefined because a sensitive group is empty.
#define FF_ERR_METRIC_UNDEFINED 3

// An internal invariant was violated.
#define FF_ERR_INTERNAL 4

// A forest document failed validation.
#define FF_ERR_PARSE 5

// Invalid configuration or call order.
#define FF_ERR_CONFIG 6

// The library panicked; the handles passed in should be freed, not reused.
#define FF_ERR_PANIC 7

#define FF_STRATEGY_LEAF_BASED 0

#define FF_STRATEGY_TREE_BASED 1

// Opaque encoded dataset.
typedef struct FfDataset FfDataset;

// Opaque trained forest.
typedef struct FfForest FfForest;

typedef struct FfMetrics {
  double accuracy;
  double discrimination;
  double rate_s1;
  double rate_s0;
  size_t n;
  size_t n_s1;
  size_t n_s0;
} FfMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last error raised on this thread, or NULL. The pointer
// stays valid until the next library call on the same thread.
const char *ff_last_error_message(void);

// Releases a string returned by the library. NULL is ignored.
//
// # Safety
// `s` must come from this library and must not be used afterwards.
void ff_string_free(char *s);

// Loads a forest JSON file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
int32_t ff_forest_load(const char *path, struct FfForest **out);

// Parses a forest from its JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
int32_t ff_forest_from_json(const char *json, struct FfForest **out);

// Serializes a forest; free the result with `ff_string_free`.
//
// # Safety
// `forest` must be a live handle and `out` a valid pointer.
int32_t ff_forest_to_json(const struct FfForest *forest, char **out);

// # Safety
// `forest` must be NULL or a handle from this library, not used afterwards.
void ff_forest_free(struct FfForest *forest);

// # Safety
// `forest` must be a live handle and `out` a valid pointer.
int32_t ff_forest_n_trees(const struct FfForest *forest, size_t *out);

// Builds a dataset from a row-major `n_rows x n_features` matrix and binary
// labels and sensitive values. Features are named `f0`, `f1`, ...
//
// # Safety
// `features` must hold `n_rows * n_features` values and `labels`, `groups`
// `n_rows` values each; `out` must be a valid pointer.
int32_t ff_dataset_new(const double *features,
                       size_t n_rows,
                       size_t n_features,
                       const uint8_t *labels,
                       const uint8_t *groups,
                       struct FfDataset **out);

// Loads and encodes a CSV file with a built-in schema name or schema path.
//
// # Safety
// `path` and `schema` must be NUL-terminated strings, `out` a valid pointer.
int32_t ff_dataset_from_csv(const char *path, const char *schema, struct FfDataset **out);

// # Safety
// `dataset` must be NULL or a handle from this library, not used afterwards.
void ff_dataset_free(struct FfDataset *dataset);

// # Safety
// `dataset` must be a live handle and `out` a valid pointer.
int32_t ff_dataset_len(const struct FfDataset *dataset, size_t *out);

// Trains a forest. `config_json` is a training configuration object or
// NULL for the defaults.
//
// # Safety
// `data` must be a live handle, `config_json` NULL or a NUL-terminated
// string, `out` a valid pointer.
int32_t ff_forest_train(const struct FfDataset *data,
                        const char *config_json,
                        struct FfForest **out);

// Recomputes leaf statistics from `repair`.
//
// # Safety
// Both handles must be live.
int32_t ff_forest_annotate(struct FfForest *forest, const struct FfDataset *repair);

// Writes one prediction per row of `data` into `out`, which must have room
// for `out_len >= ff_dataset_len(data)` bytes.
//
// # Safety
// Handles must be live and `out` must point to `out_len` writable bytes.
int32_t ff_forest_predict(const struct FfForest *forest,
                          const struct FfDataset *data,
                          uint8_t *out,
                          size_t out_len);

// Accuracy and discrimination of `forest` on `data`.
//
// # Safety
// Handles must be live and `out` a valid pointer.
int32_t ff_forest_metrics(const struct FfForest *forest,
                          const struct FfDataset *data,
                          struct FfMetrics *out);

// Flips leaves of `forest` in place against `repair`, which the forest
// must be annotated with. When `report_out` is not NULL it receives the
// iteration report as JSON lines; free it with `ff_string_free`. On failure
// the forest is left unchanged.
//
// # Safety
// Handles must be live; `report_out` must be NULL or a valid pointer.
int32_t ff_forest_relabel(struct FfForest *forest,
                          const struct FfDataset *repair,
                          double epsilon,
                          double alpha,
                          int32_t strategy,
                          char **report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRFOREST_H */

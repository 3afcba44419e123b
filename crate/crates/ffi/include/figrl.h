#ifndef FIGRL_H
#define FIGRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum FigrlStatus {
  FIGRL_STATUS_OK = 0,
  FIGRL_STATUS_NULL_POINTER = 1,
  FIGRL_STATUS_INVALID_ARGUMENT = 2,
  FIGRL_STATUS_PARSE = 3,
  FIGRL_STATUS_IO = 4,
  FIGRL_STATUS_NUMERICAL = 5,
  FIGRL_STATUS_UNKNOWN_NODE = 6,
  FIGRL_STATUS_BUFFER_TOO_SMALL = 7,
  FIGRL_STATUS_INTERNAL = 8,
} FigrlStatus;

/**
 * Opaque graph handle.
 */
typedef struct FigrlGraph FigrlGraph;

/**
 * Opaque embedding model handle.
 */
typedef struct FigrlModel FigrlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *figrl_last_error_message(void);

/**
 * Loads an edge list (`u v [w]` per line) from `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum FigrlStatus figrl_graph_load(const char *path, struct FigrlGraph **out);

/**
 * Parses an edge list held in memory.
 *
 * # Safety
 * `edges` must be a NUL-terminated string and `out` a writable pointer.
 */
enum FigrlStatus figrl_graph_parse(const char *edges, struct FigrlGraph **out);

/**
 * # Safety
 * `graph` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void figrl_graph_free(struct FigrlGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle; the out pointers must be writable.
 */
enum FigrlStatus figrl_graph_counts(const struct FigrlGraph *graph, size_t *nodes, size_t *edges);

/**
 * Default sketch size for `n` nodes.
 *
 * # Safety
 * `out` must be writable.
 */
enum FigrlStatus figrl_sketch_size(size_t n, double epsilon, size_t k, size_t *out);

/**
 * Embeds `graph`. `d = 0` selects the default sketch size.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum FigrlStatus figrl_embed(const struct FigrlGraph *graph,
                             double epsilon,
                             size_t k,
                             uint64_t seed,
                             size_t d,
                             struct FigrlModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void figrl_model_free(struct FigrlModel *model);

/**
 * Node count, embedding dimension and sketch size of `model`.
 *
 * # Safety
 * `model` must be a live handle; the out pointers must be writable.
 */
enum FigrlStatus figrl_model_dims(const struct FigrlModel *model, size_t *n, size_t *k, size_t *d);

/**
 * Copies the `n x k` embedding row-major into `buf` of length `len`.
 *
 * # Safety
 * `model` must be a live handle and `buf` valid for `len` writes.
 */
enum FigrlStatus figrl_model_copy_embedding(const struct FigrlModel *model,
                                            double *buf,
                                            size_t len);

/**
 * Row index of node `id` in the embedding.
 *
 * # Safety
 * `model` must be a live handle, `id` NUL-terminated and `out` writable.
 */
enum FigrlStatus figrl_model_node_index(const struct FigrlModel *model,
                                        const char *id,
                                        size_t *out);

/**
 * Folds an unseen node with `count` weighted links to seen nodes into
 * `model`, writing `k` values to `out`.
 *
 * # Safety
 * `targets` and `weights` must be valid for `count` reads, each target
 * NUL-terminated; `out` must be valid for `out_len` writes.
 */
enum FigrlStatus figrl_model_fold_in(const struct FigrlModel *model,
                                     const char *const *targets,
                                     const double *weights,
                                     size_t count,
                                     double *out,
                                     size_t out_len);

/**
 * # Safety
 * `model` must be a live handle and `path` NUL-terminated.
 */
enum FigrlStatus figrl_model_save(const struct FigrlModel *model, const char *path);

/**
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum FigrlStatus figrl_model_load(const char *path, struct FigrlModel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIGRL_H */

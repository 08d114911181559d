#ifndef HOMOTEST_H
#define HOMOTEST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HtStatus {
  HT_STATUS_OK = 0,
  HT_STATUS_NULL_POINTER = 1,
  HT_STATUS_INVALID_ARGUMENT = 2,
  HT_STATUS_PARSE = 3,
  HT_STATUS_DEGENERATE = 4,
  HT_STATUS_DOMAIN = 5,
  HT_STATUS_REFUSED = 6,
  HT_STATUS_IO = 7,
  HT_STATUS_PANIC = 8,
} HtStatus;

typedef enum HtNull {
  HT_NULL_ER = 0,
  HT_NULL_CHUNG_LU = 1,
  HT_NULL_LSM = 2,
} HtNull;

/**
 * Opaque undirected graph.
 */
typedef struct HtGraph HtGraph;

/**
 * Opaque test report.
 */
typedef struct HtReport HtReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *ht_last_error_message(void);

/**
 * Builds a graph on `n` nodes from `len` pairs `(sources[i], targets[i])`.
 *
 * # Safety
 * `sources` and `targets` must point to `len` elements each; `out` must be
 * writable.
 */
enum HtStatus ht_graph_from_edges(size_t n,
                                  const size_t *sources,
                                  const size_t *targets,
                                  size_t len,
                                  struct HtGraph **out);

/**
 * Parses an edge list (NUL-terminated text).
 *
 * # Safety
 * `text` must be a valid C string; `out` must be writable.
 */
enum HtStatus ht_graph_parse(const char *text, bool one_indexed, struct HtGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from this library, not yet freed.
 */
void ht_graph_free(struct HtGraph *g);

/**
 * Node count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t ht_graph_node_count(const struct HtGraph *g);

/**
 * Edge count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t ht_graph_edge_count(const struct HtGraph *g);

/**
 * Homophily statistic of the graph under `labels` (one per node).
 *
 * # Safety
 * `g` must be a live handle, `labels` must hold `len` elements and `out`
 * must be writable.
 */
enum HtStatus ht_t_statistic(const struct HtGraph *g,
                             const size_t *labels,
                             size_t len,
                             double *out);

/**
 * Walktrap with the modularity cut. Writes zero-based community labels to
 * `labels_out` (room for every node), the number of communities to
 * `k_out` and the statistic of the result to `statistic_out`.
 *
 * # Safety
 * `g` must be a live handle; `labels_out` must have room for
 * `ht_graph_node_count(g)` elements; the other pointers must be writable.
 */
enum HtStatus ht_walktrap(const struct HtGraph *g,
                          size_t steps,
                          size_t *labels_out,
                          size_t *k_out,
                          double *statistic_out);

/**
 * Bootstrap test with Walktrap detection against a fitted null
 * (an [`HtNull`] code).
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum HtStatus ht_bootstrap_test(const struct HtGraph *g,
                                int32_t null,
                                size_t b,
                                double alpha,
                                uint64_t seed,
                                struct HtReport **out);

/**
 * Bootstrap test with fixed labels (one per node).
 *
 * # Safety
 * `g` must be a live handle, `labels` must hold `len` elements and `out`
 * must be writable.
 */
enum HtStatus ht_labeled_bootstrap_test(const struct HtGraph *g,
                                        const size_t *labels,
                                        size_t len,
                                        int32_t null,
                                        size_t b,
                                        double alpha,
                                        uint64_t seed,
                                        struct HtReport **out);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
void ht_report_free(struct HtReport *r);

/**
 * Observed statistic; NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
double ht_report_t_obs(const struct HtReport *r);

/**
 * Bootstrap p-value; NaN when absent.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
double ht_report_p_value(const struct HtReport *r);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
bool ht_report_reject(const struct HtReport *r);

/**
 * Copies up to `capacity` replicate statistics into `buffer` and returns
 * the total number available.
 *
 * # Safety
 * `r` must be null or a live report handle; `buffer` must have room for
 * `capacity` elements (it may be null when `capacity` is 0).
 */
size_t ht_report_samples(const struct HtReport *r, double *buffer, size_t capacity);

/**
 * The report as JSON. Free the string with [`ht_string_free`]. Null on
 * failure.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
char *ht_report_json(const struct HtReport *r);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ht_string_free(char *s);

/**
 * Asymptotic rejection threshold; see the library documentation.
 *
 * # Safety
 * `out` must be writable.
 */
enum HtStatus ht_asymptotic_threshold(size_t n,
                                      size_t k,
                                      double alpha,
                                      double p_hat,
                                      double epsilon,
                                      bool equal_sizes,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOMOTEST_H */

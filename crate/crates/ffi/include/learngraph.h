#ifndef LEARNGRAPH_H
#define LEARNGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum {
  LG_STATUS_OK = 0,
  LG_STATUS_NULL_POINTER = 1,
  LG_STATUS_INVALID_UTF8 = 2,
  LG_STATUS_INVALID_PARAMETER = 3,
  LG_STATUS_NEGATIVE_INSTANCE = 4,
  LG_STATUS_CAP_EXCEEDED = 5,
  LG_STATUS_PARSE_ERROR = 6,
  /**
   * A rational did not fit in 64 bits.
   */
  LG_STATUS_OVERFLOW = 7,
  /**
   * Any other library error; see the message.
   */
  LG_STATUS_FAILED = 8,
  LG_STATUS_PANIC = 9,
} LgStatus;

/**
 * A learning graph, with the flow of the instance it was built for when
 * there is one.
 */
typedef struct LgGraph LgGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null. Valid
 * until the next call on this thread; do not free.
 */
const char *lg_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void lg_string_free(char *s);

/**
 * Releases a graph handle. Null is ignored.
 */
void lg_graph_free(LgGraph *g);

/**
 * k-distinctness graph on `len` values with the flow of that input.
 */
LgStatus lg_build_kdist(size_t k, size_t r, const uint32_t *values, size_t len, LgGraph **out);

/**
 * k-clique graph for an `n`-vertex input graph given as edge pairs.
 */
LgStatus lg_build_clique(size_t n,
                         size_t k,
                         size_t r,
                         const uint32_t *edges,
                         size_t edge_count,
                         LgGraph **out);

/**
 * Subgraph-containment graph for pattern `(pattern_k, pattern_edges)`
 * with threshold `s = s_num / s_den`, on an `n`-vertex input graph.
 */
LgStatus lg_build_subgraph(size_t n,
                           size_t pattern_k,
                           const uint32_t *pattern_edges,
                           size_t pattern_edge_count,
                           size_t r,
                           int64_t s_num,
                           int64_t s_den,
                           const uint32_t *edges,
                           size_t edge_count,
                           LgGraph **out);

/**
 * Parses learning-graph JSON (flows optional).
 */
LgStatus lg_graph_from_json(const char *json, LgGraph **out);

LgStatus lg_graph_to_json(const LgGraph *g, char **out);

LgStatus lg_graph_to_dot(const LgGraph *g, char **out);

/**
 * L-vertices, transitions and stages of the top-level graph.
 */
LgStatus lg_graph_counts(const LgGraph *g, size_t *nodes, size_t *transitions, size_t *stages);

/**
 * Structural validity.
 */
LgStatus lg_graph_validate(const LgGraph *g, bool *valid);

/**
 * Flow validity; fails with `InvalidParameter` when the handle has no flow.
 */
LgStatus lg_graph_check_flow(const LgGraph *g, bool *valid);

/**
 * Complexity report (JSON) under the full symmetric group.
 */
LgStatus lg_graph_analyze_json(const LgGraph *g, char **out);

/**
 * `g(H)` as a reduced fraction.
 */
LgStatus lg_g_of_h(size_t k, const uint32_t *edges, size_t edge_count, int64_t *num, int64_t *den);

/**
 * Containment exponent `2 - 2/k - g(H)` as a reduced fraction.
 */
LgStatus lg_containment_exponent(size_t k,
                                 const uint32_t *edges,
                                 size_t edge_count,
                                 int64_t *num,
                                 int64_t *den);

/**
 * Balances the simplified bound of `family` ("kdist", "clique" or
 * "subgraph"); `k` is ignored for "subgraph", which reads the pattern.
 * Writes the solution as JSON.
 */
LgStatus lg_balance_json(const char *family,
                         size_t k,
                         size_t pattern_k,
                         const uint32_t *pattern_edges,
                         size_t pattern_edge_count,
                         char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEARNGRAPH_H */

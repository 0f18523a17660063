#ifndef GAPWIN_H
#define GAPWIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum GapwinStatus {
  GAPWIN_STATUS_OK = 0,
  GAPWIN_STATUS_INVALID_ARGUMENT = 1,
  GAPWIN_STATUS_PARSE_ERROR = 2,
  GAPWIN_STATUS_INFEASIBLE = 3,
  GAPWIN_STATUS_BUFFER_TOO_SMALL = 4,
  GAPWIN_STATUS_IO_ERROR = 5,
  GAPWIN_STATUS_INTERNAL_ERROR = 6,
} GapwinStatus;

/**
 * Opaque decoding-graph handle.
 */
typedef struct GapwinGraph GapwinGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version string. Static storage; do not free.
 */
const char *gapwin_version(void);

/**
 * Message for the most recent error on this thread. Valid until the next
 * failing call on the same thread; do not free.
 */
const char *gapwin_last_error(void);

/**
 * Build a repetition-code decoding graph under phenomenological noise.
 */
enum GapwinStatus gapwin_graph_repetition(uint32_t distance,
                                          uint32_t rounds,
                                          double p,
                                          bool unit_weights,
                                          struct GapwinGraph **out);

/**
 * Build a surface-code decoding graph (one error type) under
 * phenomenological noise.
 */
enum GapwinStatus gapwin_graph_surface(uint32_t distance,
                                       uint32_t rounds,
                                       double p,
                                       bool unit_weights,
                                       struct GapwinGraph **out);

/**
 * Parse a graph from its text form (see the file-format documentation).
 *
 * # Safety
 * `text` must point to a NUL-terminated string.
 */
enum GapwinStatus gapwin_graph_from_text(const char *text, struct GapwinGraph **out);

/**
 * Serialize a graph to its canonical text form. The returned string must
 * be released with `gapwin_string_free`.
 */
enum GapwinStatus gapwin_graph_to_text(const struct GapwinGraph *g, char **out);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must come from a gapwin call and must not be used afterwards.
 */
void gapwin_string_free(char *s);

/**
 * Release a graph handle.
 *
 * # Safety
 * `g` must come from a gapwin constructor and must not be used afterwards.
 */
void gapwin_graph_free(struct GapwinGraph *g);

size_t gapwin_graph_num_nodes(const struct GapwinGraph *g);

size_t gapwin_graph_num_edges(const struct GapwinGraph *g);

/**
 * Minimum-weight decode. Fills `edges_out` (capacity `edges_cap`) with the
 * edge ids of the correction chain, stores the count in `edges_len` and
 * the total weight in `weight_out`. Fails with `BufferTooSmall` when the
 * chain does not fit; `edges_len` then holds the required capacity.
 *
 * # Safety
 * Pointer arguments must be valid for the stated sizes.
 */
enum GapwinStatus gapwin_decode(const struct GapwinGraph *g,
                                const uint8_t *labels,
                                size_t n_labels,
                                uint32_t *edges_out,
                                size_t edges_cap,
                                size_t *edges_len,
                                double *weight_out);

/**
 * Complementary gap of global decoding for the given syndrome.
 *
 * # Safety
 * Pointer arguments must be valid for the stated sizes.
 */
enum GapwinStatus gapwin_complementary_gap(const struct GapwinGraph *g,
                                           const uint8_t *labels,
                                           size_t n_labels,
                                           double *gap_out);

/**
 * Per-window soft information of a sliding decode: `gap_kind` 0 is the
 * plain spatiotemporal gap, 1 the distance-shifted and 2 the path-selected
 * variant. One value per non-terminal window lands in `gaps_out`.
 *
 * # Safety
 * Pointer arguments must be valid for the stated sizes.
 */
enum GapwinStatus gapwin_sliding_gaps(const struct GapwinGraph *g,
                                      const uint8_t *labels,
                                      size_t n_labels,
                                      uint32_t r_com,
                                      uint32_t r_buf,
                                      uint8_t gap_kind,
                                      double *gaps_out,
                                      size_t gaps_cap,
                                      size_t *gaps_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAPWIN_H */

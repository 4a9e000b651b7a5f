#ifndef URNGRAPH_H
#define URNGRAPH_H

/* Generated by cbindgen from urngraph-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  UG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  UG_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  UG_STATUS_INVALID_UTF8 = 2,
  /**
   * The edge-list text failed to parse or validate.
   */
  UG_STATUS_PARSE_ERROR = 3,
  /**
   * Inputs violate the domain (dimensions, simplex, edge sums, floor).
   */
  UG_STATUS_DOMAIN_ERROR = 4,
  /**
   * Equilibrium analysis failed.
   */
  UG_STATUS_SOLVER_ERROR = 5,
  /**
   * Simulation configuration or execution failed.
   */
  UG_STATUS_SIMULATION_ERROR = 6,
} UgStatus;

/**
 * Opaque graph handle.
 */
typedef struct UgGraph UgGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ug_last_error_message(void);

/**
 * Frees a string returned by any `*_json` call.
 *
 * # Safety
 * `s` must be a pointer previously returned by this library and not yet
 * freed; null is tolerated.
 */
void ug_string_free(char *s);

/**
 * Parses an edge-list text (one `u v` pair per line, 1-based labels,
 * `#` comments) into a new graph handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be a valid
 * writable pointer.
 */
UgStatus ug_graph_parse(const char *text, UgGraph **out);

/**
 * Releases a graph handle; null is tolerated.
 *
 * # Safety
 * `g` must come from [`ug_graph_parse`] and not be freed twice.
 */
void ug_graph_free(UgGraph *g);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `g` must be a live handle or null.
 */
uint32_t ug_graph_vertex_count(const UgGraph *g);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `g` must be a live handle or null.
 */
uint32_t ug_graph_edge_count(const UgGraph *g);

/**
 * Bipartiteness class and sizes as JSON.
 *
 * # Safety
 * `g` must be a live handle; `out` a writable pointer.
 */
UgStatus ug_classify_json(const UgGraph *g, char **out);

/**
 * Evaluates the Lyapunov function at `v` (length `len`).
 *
 * # Safety
 * Pointer arguments must be valid; `v` must have `len` readable doubles.
 */
UgStatus ug_lyapunov(const UgGraph *g, const double *v, uintptr_t len, double *out);

/**
 * Writes the gradient of the Lyapunov function into `out` (length `len`).
 *
 * # Safety
 * As [`ug_lyapunov`], with `out` holding `len` writable doubles.
 */
UgStatus ug_grad_lyapunov(const UgGraph *g, const double *v, uintptr_t len, double *out);

/**
 * Writes the vector field at `v` into `out` (length `len`).
 *
 * # Safety
 * As [`ug_grad_lyapunov`].
 */
UgStatus ug_vector_field(const UgGraph *g, const double *v, uintptr_t len, double *out);

/**
 * Full equilibria report (census, spectra, limit set, warnings) as JSON.
 * Pass `c <= 0` for the default floor `1/(100N)`.
 *
 * # Safety
 * `g` must be a live handle; `out` a writable pointer.
 */
UgStatus ug_equilibria_json(const UgGraph *g, double c, char **out);

/**
 * The predicted limit set as JSON. Pass `c <= 0` for the default floor.
 *
 * # Safety
 * `g` must be a live handle; `out` a writable pointer.
 */
UgStatus ug_predict_limit_json(const UgGraph *g, double c, char **out);

/**
 * Runs one trial and returns its samples and final state as JSON.
 * `b0` holds `len` initial ball counts (all at least 1).
 *
 * # Safety
 * `g` must be a live handle; `b0` must hold `len` readable values; `out`
 * must be writable.
 */
UgStatus ug_run_trial_json(const UgGraph *g,
                           const uint64_t *b0,
                           uintptr_t len,
                           uint64_t steps,
                           uint64_t seed,
                           double alpha,
                           uint64_t sample_stride,
                           char **out);

/**
 * Runs a Monte Carlo batch and returns the full summary (per-trial
 * outcomes plus aggregate stats) as JSON. Pass `c <= 0` for the default
 * floor.
 *
 * # Safety
 * As [`ug_run_trial_json`].
 */
UgStatus ug_monte_carlo_json(const UgGraph *g,
                             double c,
                             const uint64_t *b0,
                             uintptr_t len,
                             uint64_t trials,
                             uint64_t steps,
                             uint64_t seed,
                             double alpha,
                             char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* URNGRAPH_H */

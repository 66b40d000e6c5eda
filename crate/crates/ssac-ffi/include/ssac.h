/* C interface for the ssac community-search library.
 *
 * Regenerable with cbindgen (see cbindgen.toml); the committed copy is the
 * source of truth for releases.
 *
 * Usage sketch:
 *
 *   SsacBundle *bundle = NULL;
 *   if (ssac_bundle_load("path/to/bundle", &bundle) != SSAC_STATUS_OK) {
 *       fprintf(stderr, "%s\n", ssac_last_error());
 *       return 1;
 *   }
 *   char *result = NULL;
 *   const char *params =
 *       "{\"algo\":\"gssac\",\"q\":1,\"k\":2,"
 *       "\"kw\":[\"power maintenance\"],\"lq\":9,\"t\":0}";
 *   if (ssac_query(bundle, params, &result) == SSAC_STATUS_OK) {
 *       printf("%s\n", result);
 *       ssac_string_free(result);
 *   }
 *   ssac_bundle_free(bundle);
 *
 * Query parameter JSON schema (unknown fields rejected):
 *   {
 *     "algo": "gssac" | "essac" | "baseline",   // default "gssac"
 *     "q": <social node id>,                     // required
 *     "k": <core order, >= 1>,                   // required
 *     "kw": ["keyword", ...],                    // required, non-empty
 *     "lq": <road node id>,                      // required
 *     "t": <departure minutes>,                  // default 0
 *     "heuristic": "paper"|"admissible"|"none",  // default "admissible"
 *     "fixed_departure_weights": bool,           // default false
 *     "seed": <u64>,                             // default 0 (baseline)
 *     "max_candidates": <usize>,                 // essac cap
 *     "max_size": <usize>,                       // essac size cap
 *     "init_cap": <usize>,                       // gssac initial cap
 *     "round_cap": <usize>,                      // gssac round cap
 *     "baseline_size": <usize>                   // baseline community size
 *   }
 *
 * The result JSON mirrors the CLI's query result: members, k_value,
 * t_value, md, metrics {size, coe, t_coe, semantic_score}, nodes_touched.
 */

#ifndef SSAC_H
#define SSAC_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every entry point. Zero is success; the nonzero
 * codes match the CLI exit codes, with two FFI-specific additions. */
typedef enum SsacStatus {
  SSAC_STATUS_OK = 0,
  SSAC_STATUS_USAGE = 1,
  SSAC_STATUS_IO = 2,
  SSAC_STATUS_VALIDATION = 3,
  SSAC_STATUS_NO_COMMUNITY = 4,
  SSAC_STATUS_CAP_EXCEEDED = 5,
  /* Null pointer or malformed UTF-8/JSON argument. */
  SSAC_STATUS_INVALID_ARGUMENT = 6,
  /* An internal panic was caught; the handle remains usable. */
  SSAC_STATUS_INTERNAL = 7,
} SsacStatus;

/* Opaque bundle handle: a loaded network plus its embedding store. */
typedef struct SsacBundle SsacBundle;

/* Library version as a static string; do not free. */
const char *ssac_version(void);

/* Message describing the most recent failure on this thread; valid until
 * the next failing call. Do not free. */
const char *ssac_last_error(void);

/* Free a string returned by this library. Null is ignored. */
void ssac_string_free(char *s);

/* Load a bundle directory into an opaque handle. On success writes the
 * handle to `out` and returns SSAC_STATUS_OK. */
SsacStatus ssac_bundle_load(const char *dir, SsacBundle **out);

/* Release a bundle handle. Null is ignored. */
void ssac_bundle_free(SsacBundle *bundle);

/* Counts of the loaded networks. Output pointers may be null to skip. */
SsacStatus ssac_bundle_counts(const SsacBundle *bundle,
                              uint64_t *social_nodes,
                              uint64_t *social_edges,
                              uint64_t *road_nodes);

/* Shortest travel time in minutes from road node `src` to `dst` departing
 * at `depart`, written to `out_minutes`. `heuristic`: 0 paper,
 * 1 admissible, 2 none. `fixed_departure` non-zero evaluates every edge at
 * the departure time. */
SsacStatus ssac_travel_time(const SsacBundle *bundle,
                            uint64_t src,
                            uint64_t dst,
                            double depart,
                            int32_t heuristic,
                            int32_t fixed_departure,
                            double *out_minutes);

/* Run one community search with JSON parameters (schema above). The result
 * JSON is returned in `out_json`; free it with ssac_string_free. */
SsacStatus ssac_query(const SsacBundle *bundle,
                      const char *params_json,
                      char **out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SSAC_H */

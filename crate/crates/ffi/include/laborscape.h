#ifndef LABORSCAPE_H
#define LABORSCAPE_H

/* Generated by cbindgen from laborscape-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_UTF8 = 2,
  LS_STATUS_IO = 3,
  LS_STATUS_PARSE = 4,
  LS_STATUS_COMPUTE = 5,
  LS_STATUS_NOT_FOUND = 6,
  LS_STATUS_PANIC = 7,
} LsStatus;

/**
 * Opaque handle to a validated employment table.
 */
typedef struct LsEmployment LsEmployment;

/**
 * Opaque handle to a built occupation network with closeness scores.
 */
typedef struct LsNetwork LsNetwork;

/**
 * Opaque handle to a per-occupation risk table.
 */
typedef struct LsRisk LsRisk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ls_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ls_version(void);

/**
 * Loads an employment table. `schema` is 0 for wide, 1 for long.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum LsStatus ls_employment_load(const char *path, int32_t schema, struct LsEmployment **out);

/**
 * # Safety
 * `handle` must come from [`ls_employment_load`] and not be freed twice.
 */
void ls_employment_free(struct LsEmployment *handle);

/**
 * Number of cities, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be a live employment handle or null.
 */
size_t ls_employment_city_count(const struct LsEmployment *handle);

/**
 * Number of occupations, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be a live employment handle or null.
 */
size_t ls_employment_occupation_count(const struct LsEmployment *handle);

/**
 * Loads a `code,probability` risk table.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum LsStatus ls_risk_load(const char *path, struct LsRisk **out);

/**
 * # Safety
 * `handle` must come from [`ls_risk_load`] and not be freed twice.
 */
void ls_risk_free(struct LsRisk *handle);

/**
 * Looks up one occupation's computerization probability.
 *
 * # Safety
 * `risk` must be a live risk handle; `code` a valid string; `out_value`
 * a valid pointer.
 */
enum LsStatus ls_risk_get(const struct LsRisk *risk, const char *code, double *out_value);

/**
 * Expected job impact rate for one city.
 *
 * # Safety
 * `emp` and `risk` must be live handles; `city` a valid string;
 * `out_value` a valid pointer.
 */
enum LsStatus ls_impact_rate(const struct LsEmployment *emp,
                             const struct LsRisk *risk,
                             const char *city,
                             double *out_value);

/**
 * Normalized Shannon entropy of the city's occupation distribution.
 *
 * # Safety
 * `emp` must be a live handle; `city` a valid string; `out_value` a valid
 * pointer.
 */
enum LsStatus ls_job_diversity(const struct LsEmployment *emp, const char *city, double *out_value);

/**
 * Normalized Shannon entropy of a raw count vector.
 *
 * # Safety
 * `counts` must point to `len` readable u64 values; `out_value` must be a
 * valid pointer.
 */
enum LsStatus ls_normalized_entropy(const uint64_t *counts, size_t len, double *out_value);

/**
 * Simple least squares of `ys` on `xs`. Any out-pointer may be null to
 * skip that statistic.
 *
 * # Safety
 * `xs` and `ys` must point to `len` readable doubles.
 */
enum LsStatus ls_ols(const double *xs,
                     const double *ys,
                     size_t len,
                     double *out_beta,
                     double *out_intercept,
                     double *out_p_value,
                     double *out_r_squared);

/**
 * Log-log scaling exponent of counts against sizes.
 *
 * # Safety
 * `sizes` and `counts` must point to `len` readable doubles.
 */
enum LsStatus ls_scaling_exponent(const double *sizes,
                                  const double *counts,
                                  size_t len,
                                  double *out_beta,
                                  double *out_p_value);

/**
 * Haversine great-circle distance in kilometers.
 */
double ls_haversine_km(double lat1, double lon1, double lat2, double lon2);

/**
 * Builds the occupation network (RCA, proximity, maximum spanning forest
 * plus threshold links) and its closeness scores.
 *
 * # Safety
 * `emp` must be a live handle; `out` a valid pointer.
 */
enum LsStatus ls_network_build(const struct LsEmployment *emp,
                               double advantage_cutoff,
                               double proximity_threshold,
                               struct LsNetwork **out);

/**
 * # Safety
 * `handle` must come from [`ls_network_build`] and not be freed twice.
 */
void ls_network_free(struct LsNetwork *handle);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be a live network handle or null.
 */
size_t ls_network_node_count(const struct LsNetwork *handle);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be a live network handle or null.
 */
size_t ls_network_edge_count(const struct LsNetwork *handle);

/**
 * Closeness centrality of one occupation node.
 *
 * # Safety
 * `net` must be a live network handle; `code` a valid string; `out_value`
 * a valid pointer.
 */
enum LsStatus ls_network_closeness(const struct LsNetwork *net,
                                   const char *code,
                                   double *out_value);

/**
 * Writes the network to `path`. `format` is 0 for edgelist (plus node
 * sidecar), 1 for GraphML, 2 for JSON. `risk` may be null; node risk
 * attributes are then omitted.
 *
 * # Safety
 * `net` must be a live network handle; `risk` a live risk handle or null;
 * `path` a valid NUL-terminated string.
 */
enum LsStatus ls_network_export(const struct LsNetwork *net,
                                const struct LsRisk *risk,
                                const char *path,
                                int32_t format);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LABORSCAPE_H */

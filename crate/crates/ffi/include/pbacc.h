#ifndef PBACC_H
#define PBACC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum PbaccStatus {
  PBACC_STATUS_OK = 0,
  PBACC_STATUS_NULL_POINTER = 1,
  PBACC_STATUS_INVALID_ARGUMENT = 2,
  PBACC_STATUS_GRID_COLLISION = 3,
  PBACC_STATUS_INVALID_SHIFT = 4,
  PBACC_STATUS_INSUFFICIENT_RESULTS = 5,
  PBACC_STATUS_DEGENERATE_WEIGHT = 6,
  PBACC_STATUS_UNBOUNDED_LEAKAGE = 7,
  PBACC_STATUS_NUMERICAL_FAILURE = 8,
  PBACC_STATUS_BUFFER_TOO_SMALL = 9,
  PBACC_STATUS_INTERNAL = 10,
  PBACC_STATUS_PANIC = 11,
} PbaccStatus;

/**
 * Interpolation grid handle.
 */
typedef struct PbaccGrid PbaccGrid;

/**
 * Collection of encoded shares, one per node.
 */
typedef struct PbaccShareSet PbaccShareSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on the calling thread, or null
 * if no call has failed yet. The string is owned by the library and stays
 * valid until the next failing call on the same thread.
 */
const char *pbacc_last_error_message(void);

/**
 * Builds the grid for `k` data points, `t` mask points and `n` nodes.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle. On
 * success it receives a grid that must be released with [`pbacc_grid_free`].
 */
enum PbaccStatus pbacc_grid_new(uintptr_t k,
                                uintptr_t t,
                                uintptr_t n,
                                double mask_shift,
                                struct PbaccGrid **out);

/**
 * Releases a grid. Null is ignored.
 *
 * # Safety
 * `grid` must be null or a handle from [`pbacc_grid_new`] not yet freed.
 */
void pbacc_grid_free(struct PbaccGrid *grid);

/**
 * Number of nodes `N`, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
uintptr_t pbacc_grid_num_nodes(const struct PbaccGrid *grid);

/**
 * Copies the `N` evaluation points into `out`.
 *
 * # Safety
 * `grid` must be a live grid handle and `out` must point to `capacity`
 * writable doubles.
 */
enum PbaccStatus pbacc_grid_eval_points(const struct PbaccGrid *grid,
                                        double *out,
                                        uintptr_t capacity);

/**
 * Copies the `K + T` interpolation points (data first, then masks) into `out`.
 *
 * # Safety
 * `grid` must be a live grid handle and `out` must point to `capacity`
 * writable doubles.
 */
enum PbaccStatus pbacc_grid_interpolation_points(const struct PbaccGrid *grid,
                                                 double *out,
                                                 uintptr_t capacity);

/**
 * Berrut basis weights of `z` over `count` interpolation points.
 *
 * # Safety
 * `points` must point to `count` readable doubles and `out` to `count`
 * writable doubles.
 */
enum PbaccStatus pbacc_basis_weights(double z, const double *points, uintptr_t count, double *out);

/**
 * Encodes a `rows×cols` row-major block with one row per data point.
 *
 * A grid without mask points yields the plain encoding; otherwise Gaussian
 * masks with standard deviation `sigma_n` are drawn deterministically from
 * `seed`.
 *
 * # Safety
 * `grid` must be a live grid handle, `data` must point to `rows·cols`
 * readable doubles and `out` to writable storage for one handle, released
 * with [`pbacc_shares_free`].
 */
enum PbaccStatus pbacc_encode(const struct PbaccGrid *grid,
                              const double *data,
                              uintptr_t rows,
                              uintptr_t cols,
                              double sigma_n,
                              uint64_t seed,
                              struct PbaccShareSet **out);

/**
 * Releases a share set. Null is ignored.
 *
 * # Safety
 * `set` must be null or a handle from [`pbacc_encode`] not yet freed.
 */
void pbacc_shares_free(struct PbaccShareSet *set);

/**
 * Number of shares in the set, or 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live share-set handle.
 */
uintptr_t pbacc_shares_len(const struct PbaccShareSet *set);

/**
 * Copies share `index` row-major into `out` and reports its shape.
 *
 * When `capacity` is too small the shape is still written and
 * `BufferTooSmall` is returned.
 *
 * # Safety
 * `set` must be a live share-set handle, `rows` and `cols` valid writable
 * pointers, and `out` must point to `capacity` writable doubles.
 */
enum PbaccStatus pbacc_shares_payload(const struct PbaccShareSet *set,
                                      uintptr_t index,
                                      double *out,
                                      uintptr_t capacity,
                                      uintptr_t *rows,
                                      uintptr_t *cols);

/**
 * Serializes the share set as a JSON array. The returned string must be
 * released with [`pbacc_string_free`]; null is returned on failure.
 *
 * # Safety
 * `set` must be a live share-set handle.
 */
char *pbacc_shares_to_json(const struct PbaccShareSet *set);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from [`pbacc_shares_to_json`] not yet freed.
 */
void pbacc_string_free(char *s);

/**
 * Decodes the shares of the listed nodes at the grid's data points.
 *
 * `nodes` selects the fast set; pass null with `node_count = 0` to use every
 * share. The `K×cols` estimate is written row-major to `out` and the Lebesgue
 * constant of the decoder to `lebesgue` when it is not null.
 *
 * # Safety
 * `set` and `grid` must be live handles, `nodes` must point to `node_count`
 * readable indices, `out` to `capacity` writable doubles, and `lebesgue`
 * must be null or writable.
 */
enum PbaccStatus pbacc_decode(const struct PbaccShareSet *set,
                              const struct PbaccGrid *grid,
                              const uintptr_t *nodes,
                              uintptr_t node_count,
                              double *out,
                              uintptr_t capacity,
                              double *lebesgue);

/**
 * Leakage bound in bits for the listed colluding nodes.
 *
 * A positive `floor` is used as an absolute eigenvalue floor; zero or a
 * negative value selects the default trace-relative floor.
 *
 * # Safety
 * `grid` must be a live grid handle, `colluders` must point to
 * `colluder_count` readable indices and `out_bits` must be writable.
 */
enum PbaccStatus pbacc_leakage_bound(const struct PbaccGrid *grid,
                                     const uintptr_t *colluders,
                                     uintptr_t colluder_count,
                                     double amplitude,
                                     double sigma_n,
                                     double floor,
                                     double *out_bits);

/**
 * Relative mean error of `approx` against `exact`, skipping near-zero
 * reference entries.
 *
 * # Safety
 * `approx` and `exact` must each point to `len` readable doubles and `out`
 * must be writable.
 */
enum PbaccStatus pbacc_rme(const double *approx, const double *exact, uintptr_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PBACC_H */

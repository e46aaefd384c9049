#ifndef FBT_H
#define FBT_H

#include <stddef.h>
#include <stdint.h>

typedef enum FbtStatus {
  FBT_STATUS_OK = 0,
  FBT_STATUS_NULL_POINTER = 1,
  FBT_STATUS_INVALID_ARGUMENT = 2,
  FBT_STATUS_PARSE = 3,
  FBT_STATUS_ENCODING = 4,
  FBT_STATUS_DOMAIN = 5,
  FBT_STATUS_MODEL = 6,
  FBT_STATUS_RESOURCE = 7,
  FBT_STATUS_CONVERGENCE = 8,
  FBT_STATUS_BUFFER_TOO_SMALL = 9,
  FBT_STATUS_INTERNAL = 10,
  FBT_STATUS_PANIC = 11,
} FbtStatus;

/*
 Opaque decomposition handle.
 */
typedef struct FbtDecomposition FbtDecomposition;

/*
 Opaque sampled-tree handle.
 */
typedef struct FbtSample FbtSample;

/*
 Opaque tree handle.
 */
typedef struct FbtTree FbtTree;

/*
 Offspring parameters of the two-type model with survivals.
 */
typedef struct FbtSurvivalParams {
  double p0;
  double p1;
  double p2;
  double q0;
  double q1;
  double q2;
} FbtSurvivalParams;

typedef struct FbtFatherCounts {
  uint64_t d1;
  uint64_t d2;
  uint64_t s1;
  uint64_t s2;
} FbtFatherCounts;

typedef struct FbtEstimates {
  double p_hat;
  double q_hat;
  double ratio_p;
  double ratio_q;
} FbtEstimates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next call into the library from the same thread.
 */
const char *fbt_last_error(void);

/*
 Library version, static NUL-terminated string.
 */
const char *fbt_version(void);

/*
 Narayana number `N(n, k)` in decimal.

 # Safety
 `buf` must hold `capacity` bytes; `written` must be valid.
 */
enum FbtStatus fbt_narayana(uint64_t n, uint64_t k, char *buf, size_t capacity, size_t *written);

/*
 Generating-function coefficients in decimal, one per line, ascending.

 # Safety
 As [`fbt_narayana`].
 */
enum FbtStatus fbt_gf_coefficients(size_t d, size_t c, char *buf, size_t capacity, size_t *written);

/*
 Parses a parenthesis encoding into a full binary tree.

 # Safety
 `parens` must be NUL-terminated; `tree` must be valid for writes.
 */
enum FbtStatus fbt_tree_from_parens(const char *parens, struct FbtTree **tree);

/*
 Parses the tab-separated records format.

 # Safety
 As [`fbt_tree_from_parens`].
 */
enum FbtStatus fbt_tree_from_records(const char *records, struct FbtTree **tree);

/*
 # Safety
 `tree` must come from this library and not be used afterwards.
 */
void fbt_tree_free(struct FbtTree *tree);

/*
 # Safety
 `tree` must be a live handle; `buf`/`written` as in [`fbt_narayana`].
 */
enum FbtStatus fbt_tree_to_parens(const struct FbtTree *tree,
                                  char *buf,
                                  size_t capacity,
                                  size_t *written);

/*
 # Safety
 As [`fbt_tree_to_parens`].
 */
enum FbtStatus fbt_tree_to_records(const struct FbtTree *tree,
                                   char *buf,
                                   size_t capacity,
                                   size_t *written);

/*
 # Safety
 `tree` must be a live handle, `count` valid for writes.
 */
enum FbtStatus fbt_tree_vertex_count(const struct FbtTree *tree, size_t *count);

/*
 Contour heights, `2 * edges + 1` values. `*written` receives the length.

 # Safety
 `heights` must hold `capacity` values.
 */
enum FbtStatus fbt_tree_contour(const struct FbtTree *tree,
                                size_t *heights,
                                size_t capacity,
                                size_t *written);

/*
 Decomposition from rows of length `d`; `d = 0` accepts null rows.

 # Safety
 `top` and `bottom` must hold `d` values.
 */
enum FbtStatus fbt_decomposition_new(uint32_t c,
                                     size_t d,
                                     const uint32_t *top,
                                     const uint32_t *bottom,
                                     struct FbtDecomposition **dec);

/*
 # Safety
 `dec` must come from this library and not be used afterwards.
 */
void fbt_decomposition_free(struct FbtDecomposition *dec);

/*
 Dimensions and weight of a decomposition.

 # Safety
 All pointers must be valid.
 */
enum FbtStatus fbt_decomposition_info(const struct FbtDecomposition *dec,
                                      size_t *d,
                                      uint32_t *c,
                                      uint64_t *weight);

/*
 Copies both rows; each buffer must hold `d` values.

 # Safety
 `top` and `bottom` must hold `capacity` values each.
 */
enum FbtStatus fbt_decomposition_rows(const struct FbtDecomposition *dec,
                                      uint32_t *top,
                                      uint32_t *bottom,
                                      size_t capacity);

/*
 # Safety
 `tree` must be a live handle; `dec` valid for writes.
 */
enum FbtStatus fbt_tree_to_decomposition(const struct FbtTree *tree, struct FbtDecomposition **dec);

/*
 # Safety
 `dec` must be a live handle; `tree` valid for writes.
 */
enum FbtStatus fbt_decomposition_to_tree(const struct FbtDecomposition *dec, struct FbtTree **tree);

/*
 Samples one tree; replicate `j` of a batch seeded with `master` uses
 [`fbt_replicate_seed`]`(master, j)`.

 # Safety
 `params` must be valid; `sample` valid for writes.
 */
enum FbtStatus fbt_sample(const struct FbtSurvivalParams *params,
                          uint32_t root_type,
                          uint64_t seed,
                          size_t max_vertices,
                          struct FbtSample **sample);

uint64_t fbt_replicate_seed(uint64_t master, uint64_t index);

/*
 # Safety
 `sample` must come from this library and not be used afterwards.
 */
void fbt_sample_free(struct FbtSample *sample);

/*
 `*truncated` is 1 when the vertex budget ran out.

 # Safety
 All pointers must be valid.
 */
enum FbtStatus fbt_sample_info(const struct FbtSample *sample,
                               int32_t *truncated,
                               size_t *vertex_count,
                               size_t *edge_count);

/*
 Father and survival counts of a complete sample.

 # Safety
 All pointers must be valid.
 */
enum FbtStatus fbt_sample_counts(const struct FbtSample *sample, struct FbtFatherCounts *counts);

/*
 Copy of the sampled tree as an independent handle.

 # Safety
 `sample` must be live; `tree` valid for writes.
 */
enum FbtStatus fbt_sample_tree(const struct FbtSample *sample, struct FbtTree **tree);

/*
 Extinction probabilities for root types 1 and 2.

 # Safety
 `params` valid; `result` must hold 2 values.
 */
enum FbtStatus fbt_extinction(const struct FbtSurvivalParams *params, double *result);

/*
 `E[exp(2 s ||tau||)]` for both root types, `s <= 0`.

 # Safety
 `params` valid; `result` must hold 2 values; `iterations` may be null.
 */
enum FbtStatus fbt_mgf(const struct FbtSurvivalParams *params,
                       double s,
                       double tolerance,
                       uint64_t max_iterations,
                       double *result,
                       uint64_t *iterations);

/*
 `P(D1 = n, D2 = m)`; `n = 0, m = 0` gives the no-father mass.

 # Safety
 `params` valid, `result` valid for writes.
 */
enum FbtStatus fbt_father_pmf(const struct FbtSurvivalParams *params,
                              uint64_t n,
                              uint64_t m,
                              double *result);

/*
 `P(D1 = n, D2 = m, S1 = s1, S2 = s2)` for `n >= 1`.

 # Safety
 As [`fbt_father_pmf`].
 */
enum FbtStatus fbt_joint_pmf(const struct FbtSurvivalParams *params,
                             uint64_t n,
                             uint64_t m,
                             uint64_t s1,
                             uint64_t s2,
                             double *result);

/*
 Likelihood of `(P, Q)`; `log_scale != 0` returns its natural logarithm.

 # Safety
 `result` valid for writes.
 */
enum FbtStatus fbt_likelihood(double big_p,
                              double big_q,
                              uint64_t n,
                              uint64_t m,
                              int32_t log_scale,
                              double *result);

/*
 # Safety
 `result` valid for writes.
 */
enum FbtStatus fbt_mle(uint64_t n, uint64_t m, struct FbtEstimates *result);

/*
 `P + sum L(P, Q | n, m)` summed by shells `n + m` until one is below
 `tolerance`.

 # Safety
 `result` valid for writes.
 */
enum FbtStatus fbt_total_mass(double big_p,
                              double big_q,
                              double tolerance,
                              uint64_t max_shells,
                              double *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBT_H */

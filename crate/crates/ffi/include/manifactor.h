#ifndef MANIFACTOR_H
#define MANIFACTOR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_NULL_POINTER = 1,
  MF_STATUS_INVALID_PARAMETER = 2,
  // The eigensolver or SDP ascent failed to converge.
  MF_STATUS_NO_CONVERGENCE = 3,
  MF_STATUS_INDEX_OUT_OF_RANGE = 4,
  // No triplet survived the thresholds.
  MF_STATUS_EMPTY_RESULT = 5,
  // Output buffer shorter than required.
  MF_STATUS_BUFFER_TOO_SMALL = 6,
  MF_STATUS_IO = 7,
  MF_STATUS_FORMAT = 8,
  // The data does not support the request (disconnected graph, rank
  // deficiency, too few factors).
  MF_STATUS_DEGENERATE = 9,
  MF_STATUS_PANIC = 10,
} MfStatus;

// Factor assignment handle.
typedef struct MfAssignment MfAssignment;

// Point cloud handle.
typedef struct MfCloud MfCloud;

// Spectrum handle.
typedef struct MfDecomposition MfDecomposition;

// Triplet list handle.
typedef struct MfTriplets MfTriplets;

// One retained product relation `phi_k ~ phi_i * phi_j`.
typedef struct MfTriplet {
  size_t i;
  size_t j;
  size_t k;
  double score;
  double eig_gap;
} MfTriplet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL if it succeeded.
// The pointer stays valid until the next `mf_*` call on the same thread.
const char *mf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mf_version(void);

// Wraps an `n x d` row-major buffer as a point cloud (no latent data).
//
// # Safety
// `data` must point to `n * d` readable doubles; `out` must be writable.
enum MfStatus mf_cloud_from_points(const double *data, size_t n, size_t d, struct MfCloud **out);

// Uniform rectangle `[0,a] x [0,b]` in R^3 with `N(0, sigma^2)` noise on z.
//
// # Safety
// `out` must be writable.
enum MfStatus mf_cloud_sample_rectangle(size_t n,
                                        double a,
                                        double b,
                                        double noise_sigma,
                                        uint64_t seed,
                                        struct MfCloud **out);

// Torus with radii `major_radius > minor_radius`, angles uniform.
//
// # Safety
// `out` must be writable.
enum MfStatus mf_cloud_sample_torus(size_t n,
                                    double major_radius,
                                    double minor_radius,
                                    uint64_t seed,
                                    struct MfCloud **out);

// # Safety
// `cloud` must be NULL or a valid handle that is not used afterwards.
void mf_cloud_free(struct MfCloud *cloud);

// Number of points.
//
// # Safety
// `cloud` must be a valid handle or NULL (returns 0).
size_t mf_cloud_len(const struct MfCloud *cloud);

// Number of latent columns (0 when the cloud has no ground truth).
//
// # Safety
// `cloud` must be a valid handle or NULL (returns 0).
size_t mf_cloud_latent_dim(const struct MfCloud *cloud);

// Copies the `n x latent_dim` ground truth, row-major.
//
// # Safety
// `cloud` must be valid; `out` must hold `len` doubles.
enum MfStatus mf_cloud_latent(const struct MfCloud *cloud, double *out, size_t len);

// Kernel graph and `n_eigs` nontrivial eigenpairs.
//
// `epsilon <= 0` selects the median rule; `neighbors == 0` keeps the dense
// kernel; `normalize != 0` applies the density-invariant
// normalization.
//
// # Safety
// `cloud` must be valid; `out` must be writable.
enum MfStatus mf_decompose(const struct MfCloud *cloud,
                           double epsilon,
                           size_t neighbors,
                           int32_t normalize,
                           size_t n_eigs,
                           struct MfDecomposition **out);

// # Safety
// `dec` must be NULL or a valid handle that is not used afterwards.
void mf_decomposition_free(struct MfDecomposition *dec);

// Number of nontrivial eigenpairs N.
//
// # Safety
// `dec` must be a valid handle or NULL (returns 0).
size_t mf_decomposition_n_eigs(const struct MfDecomposition *dec);

// Number of points the eigenvectors are defined on.
//
// # Safety
// `dec` must be a valid handle or NULL (returns 0).
size_t mf_decomposition_n_points(const struct MfDecomposition *dec);

// Copies all `N + 1` eigenvalues, trivial one first.
//
// # Safety
// `dec` must be valid; `out` must hold `len` doubles.
enum MfStatus mf_decomposition_eigenvalues(const struct MfDecomposition *dec,
                                           double *out,
                                           size_t len);

// Copies eigenvector `index` (1-based) into `out`.
//
// # Safety
// `dec` must be valid; `out` must hold `len` doubles.
enum MfStatus mf_decomposition_eigenvector(const struct MfDecomposition *dec,
                                           size_t index,
                                           double *out,
                                           size_t len);

// Product-eigenvector search. `relative != 0` measures the eigenvalue
// gap in units of the first nontrivial eigenvalue.
//
// # Safety
// `dec` must be valid; `out` must be writable.
enum MfStatus mf_find_triplets(const struct MfDecomposition *dec,
                               double delta,
                               double gamma,
                               int32_t relative,
                               struct MfTriplets **out);

// # Safety
// `t` must be NULL or a valid handle that is not used afterwards.
void mf_triplets_free(struct MfTriplets *t);

// Number of retained triplets.
//
// # Safety
// `t` must be a valid handle or NULL (returns 0).
size_t mf_triplets_len(const struct MfTriplets *t);

// Candidate pairs whose product was actually evaluated.
//
// # Safety
// `t` must be a valid handle or NULL (returns 0).
uint64_t mf_triplets_visited_pairs(const struct MfTriplets *t);

// Copies triplet `position` (0-based, ascending `k`).
//
// # Safety
// `t` must be valid; `out` must be writable.
enum MfStatus mf_triplets_get(const struct MfTriplets *t, size_t position, struct MfTriplet *out);

// Separability matrix, Max-Cut and final grouping. Uses the exact solver
// for small problems and the seeded SDP relaxation otherwise.
//
// # Safety
// `t` must be valid; `out` must be writable.
enum MfStatus mf_separate(const struct MfTriplets *t,
                          size_t restarts,
                          size_t rounding_repeats,
                          uint64_t seed,
                          struct MfAssignment **out);

// # Safety
// `a` must be NULL or a valid handle that is not used afterwards.
void mf_assignment_free(struct MfAssignment *a);

// Size of factor group `group` (0 or 1); 0 for other values.
//
// # Safety
// `a` must be a valid handle or NULL (returns 0).
size_t mf_assignment_group_len(const struct MfAssignment *a, size_t group);

// Copies the eigenvector indices of factor group `group`.
//
// # Safety
// `a` must be valid; `out` must hold `len` values.
enum MfStatus mf_assignment_group(const struct MfAssignment *a,
                                  size_t group,
                                  size_t *out,
                                  size_t len);

// Cut weight of the final bipartition.
//
// # Safety
// `a` must be a valid handle or NULL (returns NaN).
double mf_assignment_cut_value(const struct MfAssignment *a);

// Runs the whole pipeline from a TOML configuration, writing every output
// file. A non-NULL `output_dir` overrides the configured directory.
//
// # Safety
// `config_toml` must be a NUL-terminated UTF-8 string; `output_dir` must be
// NULL or NUL-terminated UTF-8.
enum MfStatus mf_run_pipeline_toml(const char *config_toml, const char *output_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANIFACTOR_H */

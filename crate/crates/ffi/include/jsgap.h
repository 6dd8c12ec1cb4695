#ifndef JSGAP_H
#define JSGAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define JSGAP_DOMAIN_SOURCE 0

#define JSGAP_DOMAIN_TARGET 1

typedef enum JsgapStatus {
  JSGAP_STATUS_OK = 0,
  JSGAP_STATUS_NULL_POINTER = 1,
  JSGAP_STATUS_INVALID_UTF8 = 2,
  JSGAP_STATUS_INVALID_ARGUMENT = 3,
  JSGAP_STATUS_INVALID_DISTRIBUTION = 4,
  JSGAP_STATUS_INVALID_PROBLEM = 5,
  JSGAP_STATUS_NOT_APPLICABLE = 6,
  JSGAP_STATUS_NUMERIC_FAILURE = 7,
  JSGAP_STATUS_PANIC = 8,
} JsgapStatus;

/**
 * Opaque finite distribution with rational atoms and probabilities.
 */
typedef struct JsgapDistribution JsgapDistribution;

/**
 * Opaque transfer problem.
 */
typedef struct JsgapProblem JsgapProblem;

typedef struct JsgapGap {
  double exact_gap;
  double mean_w;
  double second_moment_w;
  double limit_gap;
} JsgapGap;

/**
 * `total = gamma * source_term + (1 - gamma) * target_term + shift_term`.
 */
typedef struct JsgapBound {
  double total;
  double source_term;
  double target_term;
  double shift_term;
  double js_value;
  double kl_to_mixture;
  double mi_source;
  double mi_target;
} JsgapBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL after a
 * success. The pointer stays valid until the next `jsgap_*` call on the
 * same thread.
 */
const char *jsgap_last_error_message(void);

/**
 * Static version string.
 */
const char *jsgap_version(void);

/**
 * Parses `atoms=[..]; probs=[..]`.
 */
enum JsgapStatus jsgap_distribution_parse(const char *spec, struct JsgapDistribution **out);

/**
 * Two-atom law with mass `p_first` on `first`.
 */
enum JsgapStatus jsgap_distribution_two_point(const char *first,
                                              const char *second,
                                              const char *p_first,
                                              struct JsgapDistribution **out);

void jsgap_distribution_free(struct JsgapDistribution *dist);

enum JsgapStatus jsgap_distribution_len(const struct JsgapDistribution *dist, size_t *out);

enum JsgapStatus jsgap_problem_new(const struct JsgapDistribution *source,
                                   const struct JsgapDistribution *target,
                                   uint32_t m,
                                   const char *beta,
                                   const char *gamma,
                                   struct JsgapProblem **out);

void jsgap_problem_free(struct JsgapProblem *prob);

/**
 * `KL(p || q)` in nats; `+inf` when `p` is not absolutely continuous w.r.t. `q`.
 */
enum JsgapStatus jsgap_kl_divergence(const struct JsgapDistribution *p,
                                     const struct JsgapDistribution *q,
                                     double *out);

/**
 * `sum |p - q|`.
 */
enum JsgapStatus jsgap_total_variation(const struct JsgapDistribution *p,
                                       const struct JsgapDistribution *q,
                                       double *out);

/**
 * `(alpha1, alpha2)`-JS divergence between target `p_prime` and source `p`.
 */
enum JsgapStatus jsgap_js_alpha(const struct JsgapDistribution *p_prime,
                                const struct JsgapDistribution *p,
                                const char *alpha1,
                                const char *alpha2,
                                double *out);

enum JsgapStatus jsgap_exact_gap(const struct JsgapProblem *prob, struct JsgapGap *out);

enum JsgapStatus jsgap_exact_excess_risk(const struct JsgapProblem *prob, double *out);

/**
 * `I(W; Z_i)` for one sample of the given domain (`JSGAP_DOMAIN_*`).
 */
enum JsgapStatus jsgap_per_sample_mi(const struct JsgapProblem *prob,
                                     uint32_t domain_code,
                                     double *out);

/**
 * Sub-Gaussian gap bound with exact per-sample informations; dispatches
 * to the source-only form when `beta = 1`.
 */
enum JsgapStatus jsgap_gap_bound(const struct JsgapProblem *prob,
                                 const char *alpha1,
                                 const char *alpha2,
                                 double sigma2,
                                 struct JsgapBound *out);

/**
 * Sub-Gaussian excess-risk bound with exact per-sample informations.
 */
enum JsgapStatus jsgap_excess_bound(const struct JsgapProblem *prob,
                                    const char *alpha1,
                                    const char *alpha2,
                                    double sigma2,
                                    struct JsgapBound *out);

/**
 * f-divergence baseline for `beta = 1` and a loss bounded by `sup_loss`.
 */
enum JsgapStatus jsgap_phi_baseline(const struct JsgapProblem *prob, double sup_loss, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JSGAP_H */

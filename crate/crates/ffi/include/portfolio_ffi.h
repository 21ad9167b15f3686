#ifndef PORTFOLIO_FFI_H
#define PORTFOLIO_FFI_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfStatus {
  PF_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  PF_STATUS_NULL_POINTER = 1,
  /**
   * Inputs violate a precondition (shape, range, ordering, parse).
   */
  PF_STATUS_VALIDATION = 2,
  /**
   * The data are numerically unusable (not positive definite, rank loss, degenerate).
   */
  PF_STATUS_NUMERICAL = 3,
  /**
   * An internal panic was caught at the boundary.
   */
  PF_STATUS_PANIC = 4,
} PfStatus;

/**
 * Opaque efficient-frontier model.
 */
typedef struct PfFrontier PfFrontier;

/**
 * Opaque quota ledger.
 */
typedef struct PfQuotaLedger PfQuotaLedger;

typedef struct PfQuotaEntry {
  /**
   * `yyyymmdd`
   */
  int32_t date;
  double portfolio_return;
  double flow;
  double quota_value;
  double quota_count;
  double capital;
} PfQuotaEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if the last call
 * succeeded. The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *pf_last_error(void);

/**
 * Arithmetic mean of `n` values.
 *
 * # Safety
 * `values` must point to `n` readable doubles; `out` must be writable.
 */
enum PfStatus pf_mean(const double *values, size_t n, double *out);

/**
 * Standard deviation; `sample != 0` divides by `n − 1` instead of `n`.
 *
 * # Safety
 * `values` must point to `n` readable doubles; `out` must be writable.
 */
enum PfStatus pf_stddev(const double *values, size_t n, int32_t sample, double *out);

/**
 * Population covariance of two series of length `n`.
 *
 * # Safety
 * `v` and `u` must each point to `n` readable doubles; `out` must be writable.
 */
enum PfStatus pf_covariance(const double *v, const double *u, size_t n, double *out);

/**
 * Pearson correlation of two series of length `n`.
 *
 * # Safety
 * `v` and `u` must each point to `n` readable doubles; `out` must be writable.
 */
enum PfStatus pf_correlation(const double *v, const double *u, size_t n, double *out);

/**
 * Cholesky test on a symmetric `n × n` matrix. Writes 1 or 0 to `out`.
 *
 * # Safety
 * `q` must point to `n * n` readable doubles; `out` must be writable.
 */
enum PfStatus pf_is_positive_definite(const double *q, size_t n, int32_t *out);

/**
 * Minimize `½ xᵀQx` subject to `Ax = b`.
 *
 * `q` is `n × n`, `a` is `s × n`, `b` has `s` entries, with `1 <= s < n`.
 * `x_out` receives `n` values and `lambda_out` `s` values; either may be null.
 *
 * # Safety
 * All non-null pointers must reference arrays of the stated sizes.
 */
enum PfStatus pf_solve_eq_qp(const double *q,
                             size_t n,
                             const double *a,
                             size_t s,
                             const double *b,
                             double *x_out,
                             double *lambda_out,
                             double *objective_out);

/**
 * Build a frontier from `n` mean returns and a row-major `n × n` covariance.
 *
 * # Safety
 * `means` must point to `n` doubles, `cov` to `n * n`; `out` must be writable.
 */
enum PfStatus pf_frontier_new(const double *means,
                              const double *cov,
                              size_t n,
                              struct PfFrontier **out);

/**
 * Release a frontier handle. Null is ignored.
 *
 * # Safety
 * `f` must come from [`pf_frontier_new`] and not have been freed.
 */
void pf_frontier_free(struct PfFrontier *f);

/**
 * Number of assets in the model.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum PfStatus pf_frontier_dim(const struct PfFrontier *f, size_t *out);

/**
 * Frontier constants `a`, `b`, `c` and `delta`. Null outputs are skipped.
 *
 * # Safety
 * `f` must be a live handle; non-null outputs must be writable.
 */
enum PfStatus pf_frontier_constants(const struct PfFrontier *f,
                                    double *a,
                                    double *b,
                                    double *c,
                                    double *delta);

/**
 * Minimum-risk weights for target return `r`; writes `dim` values to `weights_out`.
 *
 * # Safety
 * `f` must be a live handle; `weights_out` must hold `dim` doubles.
 */
enum PfStatus pf_frontier_allocation(const struct PfFrontier *f, double r, double *weights_out);

/**
 * Risk on the frontier at target return `r`.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum PfStatus pf_frontier_risk(const struct PfFrontier *f, double r, double *out);

/**
 * Vertex of the frontier. `weights_out` (length `dim`) may be null.
 *
 * # Safety
 * `f` must be a live handle; non-null outputs must be writable.
 */
enum PfStatus pf_frontier_min_risk(const struct PfFrontier *f,
                                   double *weights_out,
                                   double *return_out,
                                   double *risk_out);

/**
 * Total return divided by per-period risk.
 *
 * # Safety
 * `out` must be writable.
 */
enum PfStatus pf_performance_quotient(double total_return, double risk, double *out);

/**
 * Index of the asset whose current percentage lags its suggested percentage the most.
 * Both arrays hold `n` percentages summing to 100.
 *
 * # Safety
 * `current` and `suggested` must point to `n` doubles; `out` must be writable.
 */
enum PfStatus pf_choose_asset_markowitz(const double *current,
                                        const double *suggested,
                                        size_t n,
                                        size_t *out);

/**
 * Open a ledger on `date` with a positive initial deposit.
 *
 * # Safety
 * `out` must be writable.
 */
enum PfStatus pf_quota_open(int32_t date, double initial_deposit, struct PfQuotaLedger **out);

/**
 * Release a ledger handle. Null is ignored.
 *
 * # Safety
 * `l` must come from [`pf_quota_open`] and not have been freed.
 */
void pf_quota_free(struct PfQuotaLedger *l);

/**
 * Apply one period: the return first, then the flow. The ledger is unchanged on failure.
 *
 * # Safety
 * `l` must be a live handle not used concurrently from another thread.
 */
enum PfStatus pf_quota_apply(struct PfQuotaLedger *l,
                             int32_t date,
                             double portfolio_return,
                             double flow);

/**
 * Number of entries, including the opening one.
 *
 * # Safety
 * `l` must be a live handle; `out` must be writable.
 */
enum PfStatus pf_quota_len(const struct PfQuotaLedger *l, size_t *out);

/**
 * Copy entry `index` into `out`.
 *
 * # Safety
 * `l` must be a live handle; `out` must be writable.
 */
enum PfStatus pf_quota_entry(const struct PfQuotaLedger *l, size_t index, struct PfQuotaEntry *out);

/**
 * Final over initial quota value, minus one.
 *
 * # Safety
 * `l` must be a live handle; `out` must be writable.
 */
enum PfStatus pf_quota_return(const struct PfQuotaLedger *l, double *out);

/**
 * Final capital over net deposits, minus one.
 *
 * # Safety
 * `l` must be a live handle; `out` must be writable.
 */
enum PfStatus pf_quota_capital_return(const struct PfQuotaLedger *l, double *out);

/**
 * Population standard deviation of the per-period quota returns.
 *
 * # Safety
 * `l` must be a live handle; `out` must be writable.
 */
enum PfStatus pf_quota_risk(const struct PfQuotaLedger *l, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PORTFOLIO_FFI_H */

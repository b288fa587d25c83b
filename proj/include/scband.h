/* scband: simultaneous confidence bands for nonparametric regression
 * with covariates missing at random.
 *
 * C API over the C++ core. All objects are opaque handles owned by the
 * library; every function returning scb_status reports failure details
 * through scb_last_error() (thread-local message).
 */
#ifndef SCBAND_H
#define SCBAND_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SCBAND_API __declspec(dllexport)
#else
#define SCBAND_API __attribute__((visibility("default")))
#endif

typedef enum {
  SCB_OK = 0,
  SCB_ERR_INVALID = 1,
  SCB_ERR_SCHEMA = 2,
  SCB_ERR_FIT = 3,
  SCB_ERR_BAND = 4,
  SCB_ERR_DEGENERATE = 5,
  SCB_ERR_IO = 6,
  SCB_ERR_INTERNAL = 7
} scb_status;

typedef enum { SCB_FAMILY_LOGIT = 0, SCB_FAMILY_PROBIT = 1 } scb_family;

typedef enum {
  SCB_MECH_LOGIT = 0,
  SCB_MECH_PROBIT = 1,
  SCB_MECH_TRUNCATED_LOGIT = 2
} scb_mechanism;

typedef struct scb_sample scb_sample;
typedef struct scb_model scb_model;
typedef struct scb_band scb_band;

/* Message for the most recent failure on this thread; empty on success. */
SCBAND_API const char* scb_last_error(void);

/* ---- samples: triples (delta, delta*x, y) ---- */

/* CSV with header "delta,x,y"; x blank exactly when delta=0. */
SCBAND_API scb_status scb_sample_read_csv(const char* path, scb_sample** out);
/* x[i] is ignored when delta[i]=0. */
SCBAND_API scb_status scb_sample_create(const int32_t* delta, const double* x,
                                        const double* y, size_t n,
                                        scb_sample** out);
SCBAND_API scb_status scb_sample_write_csv(const scb_sample* sample,
                                           const char* path);
SCBAND_API void scb_sample_free(scb_sample* sample);
SCBAND_API size_t scb_sample_size(const scb_sample* sample);
SCBAND_API size_t scb_sample_complete(const scb_sample* sample);
SCBAND_API double scb_sample_complete_ratio(const scb_sample* sample);

/* ---- selection model pi(y) ---- */

SCBAND_API scb_status scb_fit_selection(const scb_sample* sample,
                                        scb_family family, double pi_floor,
                                        scb_model** out);
SCBAND_API void scb_model_free(scb_model* model);
SCBAND_API double scb_model_intercept(const scb_model* model);
SCBAND_API double scb_model_slope(const scb_model* model);
SCBAND_API double scb_model_loglik(const scb_model* model);
SCBAND_API int scb_model_converged(const scb_model* model);
SCBAND_API int scb_model_iterations(const scb_model* model);
SCBAND_API double scb_model_predict(const scb_model* model, double y);

SCBAND_API scb_status scb_hosmer_lemeshow(const scb_model* model,
                                          const scb_sample* sample, int groups,
                                          double* statistic, int* dof,
                                          double* pvalue, int* bins_merged);

/* ---- simultaneous confidence bands ---- */

/* grid_size=0 selects the default 401; rho<=0 selects 0.25. */
SCBAND_API scb_status scb_band_build(const scb_sample* sample,
                                     const scb_model* model, double rho,
                                     size_t grid_size, double alpha,
                                     scb_band** out);
/* Complete-case comparator band (unit weights on the complete cases). */
SCBAND_API scb_status scb_band_build_cc(const scb_sample* sample, double rho,
                                        size_t grid_size, double alpha,
                                        scb_band** out);
SCBAND_API void scb_band_free(scb_band* band);
SCBAND_API size_t scb_band_grid_size(const scb_band* band);
/* Copies grid columns into caller buffers of length scb_band_grid_size;
 * any pointer may be NULL. Invalid grid points hold NaN. */
SCBAND_API scb_status scb_band_values(const scb_band* band, double* grid,
                                      double* center, double* lower,
                                      double* upper, double* variance,
                                      int32_t* valid);
SCBAND_API scb_status scb_band_constants(const scb_band* band, double* h,
                                         double* h_f, double* r_n, double* a_h,
                                         double* b_h);
SCBAND_API scb_status scb_band_interval(const scb_band* band, double* a0,
                                        double* b0);

/* Sup-deviation test of H0: m = null_values (aligned with the grid). */
SCBAND_API scb_status scb_band_test(const scb_band* band,
                                    const double* null_values, size_t len,
                                    double* sup_stat, double* t_star,
                                    double* pvalue, double* min_cover_level);

/* Inverse-probability-weighted least-squares line for the linear null. */
SCBAND_API scb_status scb_linear_null(const scb_sample* sample,
                                      const scb_model* model, double* intercept,
                                      double* slope);

/* ---- constants ---- */

/* Returns NaN on alpha outside (0,1). */
SCBAND_API double scb_gumbel_quantile(double alpha);
SCBAND_API scb_status scb_critical_constants(double h, double a0, double b0,
                                             double* a_h, double* b_h);
/* Quartic kernel functionals: int K^2, lambda^{-1} int (K')^2, int u^2 K. */
SCBAND_API scb_status scb_kernel_functionals(double* lambda, double* cee,
                                             double* mu2);

/* ---- Monte Carlo coverage studies ---- */

typedef struct {
  int sim_case;      /* 1..4 */
  int mechanism;     /* scb_mechanism */
  double alpha0;
  double alpha1;
  size_t n;
  size_t replications;
  uint64_t seed;
  size_t grid_size;  /* 0 -> 401 */
  double rho;        /* <=0 -> 0.25 */
  double pi_floor;   /* <=0 -> 0.01 */
  size_t threads;    /* 0 -> hardware concurrency */
} scb_scenario;

typedef struct {
  double level;        /* confidence level 1 - alpha */
  double scb_coverage;
  double scb_avg_width;
  double cc_coverage;
  double cc_avg_width;
} scb_level_result;

/* levels are error probabilities alpha; results must hold n_levels
 * entries. failures receives the count of excluded replications. */
SCBAND_API scb_status scb_run_scenario(const scb_scenario* scenario,
                                       const double* levels, size_t n_levels,
                                       scb_level_result* results,
                                       size_t* failures);

#ifdef __cplusplus
}
#endif

#endif /* SCBAND_H */

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "regress.hpp"
#include "selection.hpp"

namespace scband {

// Grid, point estimates, standardizing variance and all constants needed
// to rebuild the band limits. Grid points where estimation failed carry
// valid=0 and NaN values.
struct BandCore {
  std::vector<double> grid;
  std::vector<double> m_hat;
  std::vector<double> d_hat;
  std::vector<std::uint8_t> valid;
  double h = 0.0;
  double h_f = 0.0;
  double r_n = 1.0;
  double a_h = 0.0;
  double b_h = 0.0;
  std::size_t n_rate = 0;  // sample size in the (n h)^{-1/2} scaling
  std::size_t invalid_count = 0;
};

struct BandEstimate {
  std::vector<double> grid;
  std::vector<double> m_hat;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> d_hat;
  std::vector<std::uint8_t> valid;
  double alpha = 0.05;
  double h = 0.0;
  double h_f = 0.0;
  double r_n = 1.0;
  double a_h = 0.0;
  double b_h = 0.0;
  std::size_t n_rate = 0;
  std::size_t invalid_count = 0;
};

struct NullTestResult {
  double sup_stat = 0.0;
  double t_star = 0.0;
  double pvalue = 1.0;
  double min_cover_level = 0.0;
  std::size_t excluded = 0;
};

// Standardizing variance estimate at x: Delta_n^{-1} h f^{-2}(x) *
// sum_i (delta_i / pi_i^2) K_h(X_i-x)^2 resid_i^2. residuals are
// aligned with the sample records (ignored for incomplete cases).
// empty_window, when non-null, is set when no complete case falls in
// the window (the returned value is then 0).
double variance_estimate(const ObservedSample& sample,
                         std::span<const double> pi_hat,
                         std::span<const double> residuals, double f_at_x,
                         double x, double h, const KernelSpec& kernel,
                         bool* empty_window = nullptr);

// Extreme-value constants a_h, b_h of the maximal-deviation limit.
std::pair<double, double> critical_constants(double h, double a0, double b0,
                                             const KernelSpec& kernel);

// q_alpha = -log(-0.5 log(1 - alpha)).
double gumbel_quantile(double alpha);

// Shared band machinery over sorted complete cases. Throws a band error
// when more than max_invalid_frac of the grid points fail.
// loo_residuals selects leave-one-out residuals for the variance
// estimate; the inverse-probability-weighted band needs them because
// the squared inverse weights amplify the self-fitting deflation of the
// plain residuals, while the unweighted complete-case comparator keeps
// the plain convention of the standard band it reproduces.
BandCore compute_band_core(const SortedCompleteCases& cases, double r_n,
                           double h, double h_f, const KernelSpec& kernel,
                           const EvalInterval& interval, std::size_t grid_size,
                           double max_invalid_frac = 0.05,
                           bool loo_residuals = true);

BandEstimate finish_band(const BandCore& core, double alpha);

// Inverse-probability-weighted band; config.h and config.h_f are used as
// given.
BandEstimate build_band(const ObservedSample& sample,
                        const SelectionModel& model, const FitConfig& config,
                        const EvalInterval& interval, std::size_t grid_size,
                        double alpha);

// Complete-case comparator: unit weights, r=1, and the complete-case
// count in place of n everywhere, including the bandwidth rule. The
// bandwidths in config are ignored and recomputed from config.rho.
BandEstimate complete_case_band(const ObservedSample& sample,
                                const FitConfig& config,
                                const EvalInterval& interval,
                                std::size_t grid_size, double alpha);

// Sup-deviation test of m(x) = null_values against the band's estimate.
NullTestResult test_null(const BandEstimate& band,
                         std::span<const double> null_values);

// Inverse-probability-weighted least squares line through the complete
// cases; returns (intercept, slope).
std::pair<double, double> weighted_linear_null(const ObservedSample& sample,
                                               const SelectionModel& model);

}  // namespace scband

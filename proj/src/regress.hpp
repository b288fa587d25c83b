#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kernel.hpp"
#include "selection.hpp"

namespace scband {

// Triples (delta_i, delta_i X_i, Y_i); x[i] is NaN whenever delta[i]=0.
struct ObservedSample {
  std::vector<std::uint8_t> delta;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t n() const { return y.size(); }
  std::size_t n_complete() const;
  double complete_ratio() const;
};

// Throws unless the sample satisfies its structural invariants.
void validate(const ObservedSample& sample);

// Full observed range [a_hat, b_hat] of the complete-case covariate and
// the trimmed interval [a0, b0] over which bands are built.
struct EvalInterval {
  double a_hat = 0.0;
  double b_hat = 0.0;
  double a0 = 0.0;
  double b0 = 0.0;
};

struct FitConfig {
  const KernelSpec* kernel = nullptr;
  double h = 0.0;     // bandwidth for the mean estimate
  double h_f = 0.0;   // pilot density bandwidth
  double rho = 0.25;  // log-correction exponent, must exceed 1/5
};

EvalInterval observed_range(const ObservedSample& sample);

// Fan-Gijbels rule-of-thumb bandwidth from a global quartic polynomial
// pilot fit on the complete cases. Sets *degenerate_fallback when the
// pilot has zero residual variance or zero curvature and the range-based
// fallback (b_hat - a_hat) * n_complete^{-1/5} is returned instead.
double rot_bandwidth(const ObservedSample& sample,
                     bool* degenerate_fallback = nullptr);

// h = h_rot * (log n)^{-rho}.
double scb_bandwidth(double h_rot, std::size_t n, double rho = 0.25);

// Silverman's rule on the complete-case covariate.
double silverman_bandwidth(const ObservedSample& sample);

// Fitted selection probabilities aligned with the sample records.
std::vector<double> pi_values(const SelectionModel& model,
                              const ObservedSample& sample);

// Inverse-probability-weighted local linear estimate of m(x); returns
// the intercept of the kernel-weighted least-squares fit. Throws a band
// error when the in-window design is singular.
double wll_fit(const ObservedSample& sample, std::span<const double> pi_hat,
               double x, const FitConfig& config);

// Weighted kernel density pilot estimate of f_X(x).
double density_estimate(const ObservedSample& sample,
                        std::span<const double> pi_hat, double x, double h_f,
                        const KernelSpec& kernel);

// Complete cases sorted by covariate with inverse-probability weights;
// the shared fast path for grid evaluation.
class SortedCompleteCases {
 public:
  SortedCompleteCases(const ObservedSample& sample,
                      std::span<const double> pi_hat);
  // Complete cases only, unit weights; used by the complete-case band.
  explicit SortedCompleteCases(const ObservedSample& sample);

  std::size_t size() const { return x_.size(); }
  std::size_t total() const { return n_total_; }
  std::span<const double> xs() const { return x_; }
  std::span<const double> ys() const { return y_; }
  std::span<const double> inverse_pi() const { return invpi_; }

  struct LocalFit {
    double value = 0.0;
    bool ok = false;
    std::size_t in_window = 0;
  };

  // Local linear fit at x; weights n^{-1} (1/pi_i) K_h(X_i - x) with n
  // the divisor passed at construction (total records for the weighted
  // estimator, complete count for the complete-case one).
  LocalFit local_linear(double x, double h, const KernelSpec& kernel) const;

  // Weighted kernel density value at x.
  double density(double x, double h_f, const KernelSpec& kernel) const;

  // Leave-one-out residual of case i under the local linear fit at
  // X_i with bandwidth h: equals the ordinary residual divided by
  // (1 - leverage of case i). Returns 0 when the window is singular.
  double loo_residual(std::size_t i, double h, const KernelSpec& kernel) const;

  // Sum over the window of (1/pi_i)^2 K_h(X_i-x)^2 resid_i^2, with
  // resid aligned to the sorted complete cases.
  double squared_kernel_moment(double x, double h, const KernelSpec& kernel,
                               std::span<const double> resid) const;

  // Index range [first, last) of cases with |X_i - x| <= h.
  std::pair<std::size_t, std::size_t> window(double x, double h) const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> invpi_;
  std::size_t n_total_ = 0;
};

}  // namespace scband

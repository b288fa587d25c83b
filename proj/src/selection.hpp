#pragma once

#include <cstdint>
#include <span>

namespace scband {

enum class Family { Logit, Probit };

// Parametric binary model pi(y) = link(alpha0 + alpha1 * y) for the
// probability that the covariate is observed given the response y.
struct SelectionModel {
  Family family = Family::Logit;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double floor = 0.01;  // clamp on predicted probabilities, must be > 0
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
};

struct FitOptions {
  double floor = 0.01;
  int max_iterations = 100;
  double gradient_tol = 1e-8;
  int max_halvings = 30;
  double separation_norm = 30.0;
};

// Maximum likelihood fit by Fisher scoring with step halving. Throws a
// fit error on degenerate response (all 0 or all 1) and on detected
// quasi-complete separation (coefficient norm diverging).
SelectionModel fit_selection(Family family, std::span<const double> y,
                             std::span<const std::uint8_t> delta,
                             const FitOptions& options = {});

// max(floor, link(alpha0 + alpha1 * y)).
double predict_pi(const SelectionModel& model, double y);

// Link value without the floor clamp; used for goodness-of-fit binning.
double raw_pi(const SelectionModel& model, double y);

struct HosmerLemeshowResult {
  double statistic = 0.0;
  int dof = 0;
  double pvalue = 1.0;
  bool bins_merged = false;
};

HosmerLemeshowResult hosmer_lemeshow(const SelectionModel& model,
                                     std::span<const double> y,
                                     std::span<const std::uint8_t> delta,
                                     int groups = 10);

}  // namespace scband

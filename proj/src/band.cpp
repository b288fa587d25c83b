#include "band.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "errors.hpp"
#include "stats.hpp"

namespace scband {

double variance_estimate(const ObservedSample& sample,
                         std::span<const double> pi_hat,
                         std::span<const double> residuals, double f_at_x,
                         double x, double h, const KernelSpec& kernel,
                         bool* empty_window) {
  if (pi_hat.size() != sample.n() || residuals.size() != sample.n()) {
    throw error(errc::invalid_argument, "variance_estimate: length mismatch");
  }
  if (!(h > 0.0)) {
    throw error(errc::invalid_argument, "variance_estimate: h must be positive");
  }
  if (!(f_at_x > 0.0)) {
    throw error(errc::band, "variance_estimate: nonpositive density at x");
  }
  const std::size_t complete = sample.n_complete();
  if (complete == 0) {
    throw error(errc::degenerate, "variance_estimate: no complete cases");
  }
  KahanSum acc;
  std::size_t in_window = 0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (!sample.delta[i]) continue;
    if (std::abs(sample.x[i] - x) > h * kernel.support_halfwidth) continue;
    ++in_window;
    const double k = rescaled_eval(kernel, sample.x[i] - x, h);
    const double w = 1.0 / (pi_hat[i] * pi_hat[i]);
    acc.add(w * k * k * residuals[i] * residuals[i]);
  }
  if (empty_window) *empty_window = (in_window == 0);
  return h * acc.value() / (static_cast<double>(complete) * f_at_x * f_at_x);
}

std::pair<double, double> critical_constants(double h, double a0, double b0,
                                             const KernelSpec& kernel) {
  if (!(h > 0.0) || !(h < b0 - a0)) {
    throw error(errc::invalid_argument,
                "critical_constants: require 0 < h < b0 - a0");
  }
  const double a_h = std::sqrt(-2.0 * std::log(h / (b0 - a0)));
  const double pi = 3.14159265358979323846;
  const double b_h =
      a_h + 0.5 / a_h * std::log(kernel.cee / (4.0 * pi * pi));
  return {a_h, b_h};
}

double gumbel_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw error(errc::invalid_argument, "gumbel_quantile: alpha must lie in (0,1)");
  }
  return -std::log(-0.5 * std::log1p(-alpha));
}

BandCore compute_band_core(const SortedCompleteCases& cases, double r_n,
                           double h, double h_f, const KernelSpec& kernel,
                           const EvalInterval& interval, std::size_t grid_size,
                           double max_invalid_frac, bool loo_residuals) {
  if (grid_size < 2) {
    throw error(errc::invalid_argument, "compute_band_core: grid_size must be >= 2");
  }
  if (!(h_f > 0.0)) {
    throw error(errc::invalid_argument, "compute_band_core: h_f must be positive");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  BandCore core;
  core.h = h;
  core.h_f = h_f;
  core.r_n = r_n;
  core.n_rate = cases.total();
  std::tie(core.a_h, core.b_h) =
      critical_constants(h, interval.a0, interval.b0, kernel);

  const std::size_t nc = cases.size();
  // Leave-one-out residuals at the complete cases, estimated with the
  // band bandwidth. The plain residual of a heavily weighted case is
  // deflated because the fit nearly interpolates it, and the variance
  // estimate squares exactly those cases' inverse weights, so without
  // the leverage correction the band is systematically narrow at
  // moderate sample sizes. A case whose own window is singular
  // contributes nothing.
  std::vector<double> resid(nc, 0.0);
  if (loo_residuals) {
    for (std::size_t i = 0; i < nc; ++i) {
      resid[i] = cases.loo_residual(i, h, kernel);
    }
  } else {
    for (std::size_t i = 0; i < nc; ++i) {
      const auto fit = cases.local_linear(cases.xs()[i], h, kernel);
      resid[i] = fit.ok ? cases.ys()[i] - fit.value : 0.0;
    }
  }

  core.grid.resize(grid_size);
  core.m_hat.assign(grid_size, nan);
  core.d_hat.assign(grid_size, nan);
  core.valid.assign(grid_size, 0);
  const double span = interval.b0 - interval.a0;
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double x = interval.a0 +
                     span * static_cast<double>(k) /
                         static_cast<double>(grid_size - 1);
    core.grid[k] = x;
    const auto fit = cases.local_linear(x, h, kernel);
    if (!fit.ok) {
      ++core.invalid_count;
      continue;
    }
    const double f = cases.density(x, h_f, kernel);
    if (!(f > 0.0)) {
      ++core.invalid_count;
      continue;
    }
    const double moment = cases.squared_kernel_moment(x, h, kernel, resid);
    core.m_hat[k] = fit.value;
    core.d_hat[k] =
        h * moment / (static_cast<double>(nc) * f * f);
    core.valid[k] = 1;
  }
  if (static_cast<double>(core.invalid_count) >
      max_invalid_frac * static_cast<double>(grid_size)) {
    throw error(errc::band,
                "compute_band_core: coverage infeasible, " +
                    std::to_string(core.invalid_count) + " of " +
                    std::to_string(grid_size) + " grid points failed");
  }
  return core;
}

BandEstimate finish_band(const BandCore& core, double alpha) {
  const double q = gumbel_quantile(alpha);
  const double factor = core.b_h + q / core.a_h;
  const double scale =
      1.0 / std::sqrt(static_cast<double>(core.n_rate) * core.h);
  BandEstimate band;
  band.grid = core.grid;
  band.m_hat = core.m_hat;
  band.d_hat = core.d_hat;
  band.valid = core.valid;
  band.alpha = alpha;
  band.h = core.h;
  band.h_f = core.h_f;
  band.r_n = core.r_n;
  band.a_h = core.a_h;
  band.b_h = core.b_h;
  band.n_rate = core.n_rate;
  band.invalid_count = core.invalid_count;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  band.lower.assign(band.grid.size(), nan);
  band.upper.assign(band.grid.size(), nan);
  for (std::size_t k = 0; k < band.grid.size(); ++k) {
    if (!band.valid[k]) continue;
    const double half =
        scale * std::sqrt(core.r_n * core.d_hat[k]) * factor;
    band.lower[k] = band.m_hat[k] - half;
    band.upper[k] = band.m_hat[k] + half;
  }
  return band;
}

BandEstimate build_band(const ObservedSample& sample,
                        const SelectionModel& model, const FitConfig& config,
                        const EvalInterval& interval, std::size_t grid_size,
                        double alpha) {
  if (config.kernel == nullptr || !(config.h > 0.0)) {
    throw error(errc::invalid_argument, "build_band: invalid configuration");
  }
  const std::vector<double> pi = pi_values(model, sample);
  const SortedCompleteCases cases(sample, pi);
  const BandCore core =
      compute_band_core(cases, sample.complete_ratio(), config.h, config.h_f,
                        *config.kernel, interval, grid_size);
  return finish_band(core, alpha);
}

BandEstimate complete_case_band(const ObservedSample& sample,
                                const FitConfig& config,
                                const EvalInterval& interval,
                                std::size_t grid_size, double alpha) {
  if (config.kernel == nullptr) {
    throw error(errc::invalid_argument, "complete_case_band: missing kernel");
  }
  const SortedCompleteCases cases(sample);
  const double h_rot = rot_bandwidth(sample);
  const double h = scb_bandwidth(h_rot, cases.size(), config.rho);
  const double h_f = silverman_bandwidth(sample);
  const BandCore core = compute_band_core(cases, 1.0, h, h_f, *config.kernel,
                                          interval, grid_size, 0.05,
                                          /*loo_residuals=*/false);
  return finish_band(core, alpha);
}

NullTestResult test_null(const BandEstimate& band,
                         std::span<const double> null_values) {
  if (null_values.size() != band.grid.size()) {
    throw error(errc::invalid_argument, "test_null: null curve length mismatch");
  }
  const double rate =
      std::sqrt(static_cast<double>(band.n_rate) * band.h / band.r_n);
  NullTestResult result;
  double sup = 0.0;
  for (std::size_t k = 0; k < band.grid.size(); ++k) {
    if (!band.valid[k]) {
      ++result.excluded;
      continue;
    }
    if (!std::isfinite(null_values[k])) {
      throw error(errc::invalid_argument, "test_null: non-finite null value");
    }
    const double diff = std::abs(band.m_hat[k] - null_values[k]);
    // Differences at rounding level are exact agreement; without this
    // guard a noise-free fit divides rounding error by a rounding-level
    // variance and reports a spurious deviation.
    if (diff <= 1e-9 * (1.0 + std::abs(band.m_hat[k]))) continue;
    if (band.d_hat[k] > 0.0) {
      sup = std::max(sup, rate * diff / std::sqrt(band.d_hat[k]));
    } else if (diff > 0.0) {
      sup = std::numeric_limits<double>::infinity();
    }
  }
  result.sup_stat = sup;
  result.t_star = band.a_h * (sup - band.b_h);
  if (std::isinf(result.t_star)) {
    result.pvalue = 0.0;
  } else {
    result.pvalue = 1.0 - std::exp(-2.0 * std::exp(-result.t_star));
    result.pvalue = std::clamp(result.pvalue, 0.0, 1.0);
  }
  result.min_cover_level = 1.0 - result.pvalue;
  return result;
}

std::pair<double, double> weighted_linear_null(const ObservedSample& sample,
                                               const SelectionModel& model) {
  KahanSum s0, sx, sxx, sy, sxy;
  std::size_t complete = 0;
  bool distinct = false;
  double first = 0.0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (!sample.delta[i]) continue;
    const double w = 1.0 / predict_pi(model, sample.y[i]);
    const double xi = sample.x[i];
    if (complete == 0) first = xi;
    else if (xi != first) distinct = true;
    ++complete;
    s0.add(w);
    sx.add(w * xi);
    sxx.add(w * xi * xi);
    sy.add(w * sample.y[i]);
    sxy.add(w * xi * sample.y[i]);
  }
  if (complete < 2 || !distinct) {
    throw error(errc::degenerate,
                "weighted_linear_null: need 2 distinct complete covariates");
  }
  const double det = s0.value() * sxx.value() - sx.value() * sx.value();
  const double scale = std::max(std::abs(s0.value() * sxx.value()),
                                sx.value() * sx.value());
  if (!(std::abs(det) > 1e-12 * scale)) {
    throw error(errc::degenerate, "weighted_linear_null: singular design");
  }
  const double intercept =
      (sxx.value() * sy.value() - sx.value() * sxy.value()) / det;
  const double slope =
      (s0.value() * sxy.value() - sx.value() * sy.value()) / det;
  return {intercept, slope};
}

}  // namespace scband

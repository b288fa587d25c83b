#include "regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errors.hpp"
#include "stats.hpp"

namespace scband {

std::size_t ObservedSample::n_complete() const {
  return std::accumulate(delta.begin(), delta.end(), std::size_t{0});
}

double ObservedSample::complete_ratio() const {
  return static_cast<double>(n_complete()) / static_cast<double>(n());
}

void validate(const ObservedSample& sample) {
  const std::size_t n = sample.y.size();
  if (sample.delta.size() != n || sample.x.size() != n) {
    throw error(errc::invalid_argument, "sample: field length mismatch");
  }
  if (n == 0) {
    throw error(errc::invalid_argument, "sample: empty");
  }
  std::size_t complete = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sample.delta[i] != 0 && sample.delta[i] != 1) {
      throw error(errc::invalid_argument, "sample: delta must be 0 or 1");
    }
    if (!std::isfinite(sample.y[i])) {
      throw error(errc::invalid_argument, "sample: non-finite response");
    }
    if (sample.delta[i]) {
      if (!std::isfinite(sample.x[i])) {
        throw error(errc::invalid_argument,
                    "sample: complete case with non-finite covariate");
      }
      ++complete;
    } else if (!std::isnan(sample.x[i])) {
      throw error(errc::invalid_argument,
                  "sample: covariate present for an incomplete case");
    }
  }
  if (complete == 0) {
    throw error(errc::degenerate, "sample: no complete cases");
  }
}

EvalInterval observed_range(const ObservedSample& sample) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t complete = 0;
  bool distinct = false;
  double first = 0.0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (!sample.delta[i]) continue;
    const double xi = sample.x[i];
    if (complete == 0) first = xi;
    else if (xi != first) distinct = true;
    ++complete;
    lo = std::min(lo, xi);
    hi = std::max(hi, xi);
  }
  if (complete < 2 || !distinct) {
    throw error(errc::degenerate,
                "observed_range: need at least 2 distinct complete covariates");
  }
  EvalInterval iv;
  iv.a_hat = lo;
  iv.b_hat = hi;
  iv.a0 = 0.9 * lo + 0.1 * hi;
  iv.b0 = 0.9 * hi + 0.1 * lo;
  return iv;
}

namespace {

// Solve the symmetric positive definite system a * out = b in place,
// dimension d, by Cholesky. Returns false when not positive definite.
bool spd_solve(std::vector<double>& a, std::vector<double>& b, int d) {
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i * d + j];
      for (int k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        a[i * d + i] = std::sqrt(s);
      } else {
        a[i * d + j] = s / a[j * d + j];
      }
    }
  }
  for (int i = 0; i < d; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a[i * d + k] * b[k];
    b[i] = s / a[i * d + i];
  }
  for (int i = d - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < d; ++k) s -= a[k * d + i] * b[k];
    b[i] = s / a[i * d + i];
  }
  return true;
}

}  // namespace

double rot_bandwidth(const ObservedSample& sample, bool* degenerate_fallback) {
  if (degenerate_fallback) *degenerate_fallback = false;
  std::vector<double> cx, cy;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (sample.delta[i]) {
      cx.push_back(sample.x[i]);
      cy.push_back(sample.y[i]);
    }
  }
  const std::size_t nc = cx.size();
  if (nc < 10) {
    throw error(errc::invalid_argument,
                "rot_bandwidth: need at least 10 complete cases");
  }
  const auto [lo_it, hi_it] = std::minmax_element(cx.begin(), cx.end());
  const double range = *hi_it - *lo_it;
  if (!(range > 0.0)) {
    throw error(errc::degenerate, "rot_bandwidth: zero covariate spread");
  }

  // Standardize the covariate for conditioning of the quartic pilot fit.
  double mean = 0.0;
  for (double v : cx) mean += v;
  mean /= static_cast<double>(nc);
  double var = 0.0;
  for (double v : cx) var += (v - mean) * (v - mean);
  var /= static_cast<double>(nc - 1);
  const double sd = std::sqrt(var);

  constexpr int kDim = 5;  // quartic polynomial pilot
  std::vector<double> ata(kDim * kDim, 0.0), atb(kDim, 0.0);
  for (std::size_t i = 0; i < nc; ++i) {
    const double z = (cx[i] - mean) / sd;
    double basis[kDim];
    basis[0] = 1.0;
    for (int j = 1; j < kDim; ++j) basis[j] = basis[j - 1] * z;
    for (int r = 0; r < kDim; ++r) {
      for (int c = 0; c <= r; ++c) ata[r * kDim + c] += basis[r] * basis[c];
      atb[r] += basis[r] * cy[i];
    }
  }
  for (int r = 0; r < kDim; ++r)
    for (int c = r + 1; c < kDim; ++c) ata[r * kDim + c] = ata[c * kDim + r];

  std::vector<double> coef = atb;
  std::vector<double> chol = ata;
  if (!spd_solve(chol, coef, kDim)) {
    throw error(errc::degenerate, "rot_bandwidth: collinear pilot design");
  }

  KahanSum rss, curv, ssy;
  for (std::size_t i = 0; i < nc; ++i) {
    const double z = (cx[i] - mean) / sd;
    const double fit =
        coef[0] + z * (coef[1] + z * (coef[2] + z * (coef[3] + z * coef[4])));
    const double r = cy[i] - fit;
    rss.add(r * r);
    ssy.add(cy[i] * cy[i]);
    // Second derivative with respect to the original covariate scale.
    const double d2 = (2.0 * coef[2] + 6.0 * coef[3] * z + 12.0 * coef[4] * z * z) /
                      (sd * sd);
    curv.add(d2 * d2);
  }
  const double sigma2 = rss.value() / static_cast<double>(nc - kDim);
  const double curvature = curv.value();

  // Exact polynomial fits leave only rounding noise in the residuals;
  // treat that as zero variance rather than producing a collapsing h.
  const double noise_floor = 1e-20 * std::max(1.0, ssy.value());
  if (!(sigma2 > noise_floor) || !(curvature > 0.0)) {
    if (degenerate_fallback) *degenerate_fallback = true;
    return range * std::pow(static_cast<double>(nc), -0.2);
  }

  // Quartic-kernel constant for local linear mean estimation.
  constexpr double kRotConstant = 2.0362;
  return kRotConstant * std::pow(sigma2 * range / curvature, 0.2);
}

double scb_bandwidth(double h_rot, std::size_t n, double rho) {
  if (!(h_rot > 0.0)) {
    throw error(errc::invalid_argument, "scb_bandwidth: h_rot must be positive");
  }
  if (n < 3) {
    throw error(errc::invalid_argument, "scb_bandwidth: n must be at least 3");
  }
  if (!(rho > 0.2)) {
    throw error(errc::invalid_argument, "scb_bandwidth: rho must exceed 1/5");
  }
  return h_rot * std::pow(std::log(static_cast<double>(n)), -rho);
}

namespace {

// Type-7 (linear interpolation) quantile of sorted values.
double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace

double silverman_bandwidth(const ObservedSample& sample) {
  std::vector<double> cx;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (sample.delta[i]) cx.push_back(sample.x[i]);
  }
  const std::size_t nc = cx.size();
  if (nc < 10) {
    throw error(errc::invalid_argument,
                "silverman_bandwidth: need at least 10 complete cases");
  }
  double mean = 0.0;
  for (double v : cx) mean += v;
  mean /= static_cast<double>(nc);
  double var = 0.0;
  for (double v : cx) var += (v - mean) * (v - mean);
  var /= static_cast<double>(nc - 1);
  const double sd = std::sqrt(var);

  std::sort(cx.begin(), cx.end());
  const double iqr = quantile_sorted(cx, 0.75) - quantile_sorted(cx, 0.25);
  const double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) {
    throw error(errc::degenerate, "silverman_bandwidth: zero covariate spread");
  }
  return 0.9 * spread * std::pow(static_cast<double>(nc), -0.2);
}

std::vector<double> pi_values(const SelectionModel& model,
                              const ObservedSample& sample) {
  std::vector<double> pi(sample.n());
  for (std::size_t i = 0; i < sample.n(); ++i) pi[i] = predict_pi(model, sample.y[i]);
  return pi;
}

namespace {

struct NormalEq {
  KahanSum s0, s1, s2, t0, t1;
  std::size_t in_window = 0;
  bool distinct = false;
  double first_x = 0.0;

  void add(double t, double w, double y) {
    if (in_window == 0) first_x = t;
    else if (t != first_x) distinct = true;
    ++in_window;
    s0.add(w);
    s1.add(w * t);
    s2.add(w * t * t);
    t0.add(w * y);
    t1.add(w * t * y);
  }

  bool solve(double* beta0) const {
    const double a = s0.value(), b = s1.value(), c = s2.value();
    const double det = a * c - b * b;
    const double scale = std::max(std::abs(a * c), b * b);
    if (in_window < 2 || !distinct || !(std::abs(det) > 1e-12 * scale)) {
      return false;
    }
    *beta0 = (c * t0.value() - b * t1.value()) / det;
    return true;
  }
};

}  // namespace

double wll_fit(const ObservedSample& sample, std::span<const double> pi_hat,
               double x, const FitConfig& config) {
  if (pi_hat.size() != sample.n()) {
    throw error(errc::invalid_argument, "wll_fit: pi_hat length mismatch");
  }
  if (config.kernel == nullptr || !(config.h > 0.0)) {
    throw error(errc::invalid_argument, "wll_fit: invalid configuration");
  }
  const double h = config.h;
  const double inv_n = 1.0 / static_cast<double>(sample.n());
  NormalEq eq;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (!sample.delta[i]) continue;
    const double t = sample.x[i] - x;
    if (std::abs(t) > h * config.kernel->support_halfwidth) continue;
    const double w = inv_n / pi_hat[i] * rescaled_eval(*config.kernel, t, h);
    eq.add(t, w, sample.y[i]);
  }
  double beta0 = 0.0;
  if (!eq.solve(&beta0)) {
    throw error(errc::band, "wll_fit: singular window at x=" + std::to_string(x) +
                                " (" + std::to_string(eq.in_window) +
                                " complete cases in window)");
  }
  return beta0;
}

double density_estimate(const ObservedSample& sample,
                        std::span<const double> pi_hat, double x, double h_f,
                        const KernelSpec& kernel) {
  if (!(h_f > 0.0)) {
    throw error(errc::invalid_argument, "density_estimate: h_f must be positive");
  }
  if (pi_hat.size() != sample.n()) {
    throw error(errc::invalid_argument, "density_estimate: pi_hat length mismatch");
  }
  KahanSum acc;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (!sample.delta[i]) continue;
    acc.add(rescaled_eval(kernel, sample.x[i] - x, h_f) / pi_hat[i]);
  }
  return acc.value() / static_cast<double>(sample.n());
}

SortedCompleteCases::SortedCompleteCases(const ObservedSample& sample,
                                         std::span<const double> pi_hat)
    : n_total_(sample.n()) {
  if (pi_hat.size() != sample.n()) {
    throw error(errc::invalid_argument,
                "SortedCompleteCases: pi_hat length mismatch");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    if (sample.delta[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sample.x[a] != sample.x[b]) return sample.x[a] < sample.x[b];
    return sample.y[a] < sample.y[b];
  });
  x_.reserve(order.size());
  y_.reserve(order.size());
  invpi_.reserve(order.size());
  for (std::size_t i : order) {
    x_.push_back(sample.x[i]);
    y_.push_back(sample.y[i]);
    invpi_.push_back(1.0 / pi_hat[i]);
  }
}

SortedCompleteCases::SortedCompleteCases(const ObservedSample& sample) {
  std::vector<double> unit(sample.n(), 1.0);
  *this = SortedCompleteCases(sample, unit);
  n_total_ = size();  // complete subsample treated as the full sample
}

std::pair<std::size_t, std::size_t> SortedCompleteCases::window(double x,
                                                               double h) const {
  const auto first = std::lower_bound(x_.begin(), x_.end(), x - h);
  const auto last = std::upper_bound(x_.begin(), x_.end(), x + h);
  return {static_cast<std::size_t>(first - x_.begin()),
          static_cast<std::size_t>(last - x_.begin())};
}

SortedCompleteCases::LocalFit SortedCompleteCases::local_linear(
    double x, double h, const KernelSpec& kernel) const {
  const auto [first, last] = window(x, h * kernel.support_halfwidth);
  const double inv_n = 1.0 / static_cast<double>(n_total_);
  NormalEq eq;
  for (std::size_t i = first; i < last; ++i) {
    const double t = x_[i] - x;
    const double w = inv_n * invpi_[i] * rescaled_eval(kernel, t, h);
    eq.add(t, w, y_[i]);
  }
  LocalFit fit;
  fit.in_window = eq.in_window;
  fit.ok = eq.solve(&fit.value);
  return fit;
}

double SortedCompleteCases::loo_residual(std::size_t i, double h,
                                         const KernelSpec& kernel) const {
  const double xi = x_[i];
  const auto [first, last] = window(xi, h * kernel.support_halfwidth);
  const double inv_n = 1.0 / static_cast<double>(n_total_);
  NormalEq eq;
  for (std::size_t j = first; j < last; ++j) {
    const double t = x_[j] - xi;
    const double w = inv_n * invpi_[j] * rescaled_eval(kernel, t, h);
    eq.add(t, w, y_[j]);
  }
  double fit = 0.0;
  if (!eq.solve(&fit)) return 0.0;
  const double raw = y_[i] - fit;
  // With local basis (1, t) and t_i = 0 the weight of case i on its own
  // fitted value is w_i * S2 / det; for a linear smoother dividing by
  // (1 - leverage) gives exactly the delete-one refit residual.
  const double wi = inv_n * invpi_[i] * rescaled_eval(kernel, 0.0, h);
  const double det =
      eq.s0.value() * eq.s2.value() - eq.s1.value() * eq.s1.value();
  const double leverage = wi * eq.s2.value() / det;
  if (leverage > 0.0 && leverage < 0.95) return raw / (1.0 - leverage);
  return raw;
}

double SortedCompleteCases::density(double x, double h_f,
                                    const KernelSpec& kernel) const {
  const auto [first, last] = window(x, h_f * kernel.support_halfwidth);
  KahanSum acc;
  for (std::size_t i = first; i < last; ++i) {
    acc.add(invpi_[i] * rescaled_eval(kernel, x_[i] - x, h_f));
  }
  return acc.value() / static_cast<double>(n_total_);
}

double SortedCompleteCases::squared_kernel_moment(
    double x, double h, const KernelSpec& kernel,
    std::span<const double> resid) const {
  const auto [first, last] = window(x, h * kernel.support_halfwidth);
  KahanSum acc;
  for (std::size_t i = first; i < last; ++i) {
    const double k = rescaled_eval(kernel, x_[i] - x, h);
    acc.add(invpi_[i] * invpi_[i] * k * k * resid[i] * resid[i]);
  }
  return acc.value();
}

}  // namespace scband

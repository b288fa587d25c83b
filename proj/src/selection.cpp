#include "selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "stats.hpp"

namespace scband {

namespace {

double link_value(Family family, double eta) {
  if (family == Family::Logit) return 1.0 / (1.0 + std::exp(-eta));
  return normal_cdf(eta);
}

// Log-likelihood with probabilities kept strictly inside (0,1) so the
// objective stays finite during iteration.
double log_likelihood(Family family, std::span<const double> y,
                      std::span<const std::uint8_t> delta, double a0, double a1) {
  KahanSum ll;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double p = link_value(family, a0 + a1 * y[i]);
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    ll.add(delta[i] ? std::log(p) : std::log1p(-p));
  }
  return ll.value();
}

}  // namespace

SelectionModel fit_selection(Family family, std::span<const double> y,
                             std::span<const std::uint8_t> delta,
                             const FitOptions& options) {
  const std::size_t n = y.size();
  if (n != delta.size()) {
    throw error(errc::invalid_argument, "fit_selection: y and delta length mismatch");
  }
  if (n < 10) {
    throw error(errc::invalid_argument, "fit_selection: need at least 10 observations");
  }
  if (!(options.floor > 0.0 && options.floor < 1.0)) {
    throw error(errc::invalid_argument, "fit_selection: floor must lie in (0,1)");
  }
  const std::size_t ones =
      std::accumulate(delta.begin(), delta.end(), std::size_t{0});
  if (ones == 0 || ones == n) {
    throw error(errc::fit, "fit_selection: degenerate response (delta all equal)");
  }

  const double pbar = static_cast<double>(ones) / static_cast<double>(n);
  double a0 = std::log(pbar / (1.0 - pbar));
  if (family == Family::Probit) a0 = normal_quantile(pbar);
  double a1 = 0.0;
  double ll = log_likelihood(family, y, delta, a0, a1);

  SelectionModel model;
  model.family = family;
  model.floor = options.floor;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    // Score and Fisher information of the two-parameter binary GLM.
    KahanSum g0, g1, i00, i01, i11;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = a0 + a1 * y[i];
      double p = link_value(family, eta);
      p = std::clamp(p, 1e-12, 1.0 - 1e-12);
      const double dp =
          (family == Family::Logit) ? p * (1.0 - p) : normal_pdf(eta);
      const double v = p * (1.0 - p);
      const double score = dp * (delta[i] - p) / v;
      const double w = dp * dp / v;
      g0.add(score);
      g1.add(score * y[i]);
      i00.add(w);
      i01.add(w * y[i]);
      i11.add(w * y[i] * y[i]);
    }
    const double gnorm = std::hypot(g0.value(), g1.value());
    if (gnorm <= options.gradient_tol) {
      model.converged = true;
      break;
    }
    const double det = i00.value() * i11.value() - i01.value() * i01.value();
    if (!(std::abs(det) > 1e-300)) {
      throw error(errc::fit, "fit_selection: singular information matrix");
    }
    double step0 = (i11.value() * g0.value() - i01.value() * g1.value()) / det;
    double step1 = (i00.value() * g1.value() - i01.value() * g0.value()) / det;

    double scale = 1.0;
    double new_ll = -std::numeric_limits<double>::infinity();
    int halvings = 0;
    for (; halvings <= options.max_halvings; ++halvings) {
      new_ll = log_likelihood(family, y, delta, a0 + scale * step0, a1 + scale * step1);
      if (new_ll >= ll) break;
      scale *= 0.5;
    }
    if (new_ll < ll) break;  // no ascent direction left
    a0 += scale * step0;
    a1 += scale * step1;
    ll = new_ll;
    if (std::hypot(a0, a1) > options.separation_norm) {
      throw error(errc::fit, "fit_selection: quasi-complete separation detected");
    }
  }

  model.alpha0 = a0;
  model.alpha1 = a1;
  model.iterations = iter;
  model.loglik = ll;
  return model;
}

double raw_pi(const SelectionModel& model, double y) {
  return link_value(model.family, model.alpha0 + model.alpha1 * y);
}

double predict_pi(const SelectionModel& model, double y) {
  return std::max(model.floor, raw_pi(model, y));
}

HosmerLemeshowResult hosmer_lemeshow(const SelectionModel& model,
                                     std::span<const double> y,
                                     std::span<const std::uint8_t> delta,
                                     int groups) {
  const std::size_t n = y.size();
  if (n != delta.size()) {
    throw error(errc::invalid_argument, "hosmer_lemeshow: length mismatch");
  }
  if (groups < 3) {
    throw error(errc::invalid_argument, "hosmer_lemeshow: need at least 3 groups");
  }
  if (n < static_cast<std::size_t>(groups)) {
    throw error(errc::invalid_argument, "hosmer_lemeshow: fewer cases than groups");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = raw_pi(model, y[i]);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  struct Bin {
    double observed = 0.0;
    double expected = 0.0;
    double count = 0.0;
  };
  std::vector<Bin> bins(groups);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t g = (r * static_cast<std::size_t>(groups)) / n;
    const std::size_t i = order[r];
    bins[g].observed += delta[i];
    bins[g].expected += p[i];
    bins[g].count += 1.0;
  }

  HosmerLemeshowResult result;
  // Merge bins whose expected count is degenerate into a neighbor.
  std::vector<Bin> merged;
  for (const Bin& b : bins) {
    const double denom = b.expected * (1.0 - b.expected / b.count);
    if (!merged.empty() && (b.count == 0.0 || !(denom > 1e-12))) {
      merged.back().observed += b.observed;
      merged.back().expected += b.expected;
      merged.back().count += b.count;
      result.bins_merged = true;
    } else {
      merged.push_back(b);
    }
  }

  KahanSum stat;
  int used = 0;
  for (const Bin& b : merged) {
    const double denom = b.expected * (1.0 - b.expected / b.count);
    if (!(denom > 1e-12)) {
      result.bins_merged = true;
      continue;
    }
    const double diff = b.observed - b.expected;
    stat.add(diff * diff / denom);
    ++used;
  }
  result.statistic = stat.value();
  result.dof = std::max(1, used - 2);
  result.pvalue = chi_square_upper_tail(result.statistic, result.dof);
  return result;
}

}  // namespace scband

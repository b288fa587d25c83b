#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "kernel.hpp"
#include "regress.hpp"
#include "sim.hpp"
#include "stats.hpp"

using namespace scband;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ObservedSample complete_sample(std::vector<double> x, std::vector<double> y) {
  ObservedSample s;
  s.delta.assign(x.size(), 1);
  s.x = std::move(x);
  s.y = std::move(y);
  return s;
}

ObservedSample case1_sample(std::size_t n, std::uint64_t seed) {
  Scenario sc;
  sc.n = n;
  sc.base_seed = seed;
  sc.replications = 1;
  return generate(sc, 0);
}

// Dense 5x5 normal-equations solve in the raw polynomial basis; the
// independent cross-check for the rule-of-thumb pilot.
double rot_oracle(const ObservedSample& s) {
  std::vector<double> cx, cy;
  for (std::size_t i = 0; i < s.n(); ++i) {
    if (s.delta[i]) {
      cx.push_back(s.x[i]);
      cy.push_back(s.y[i]);
    }
  }
  const std::size_t n = cx.size();
  long double ata[5][5] = {};
  long double atb[5] = {};
  for (std::size_t i = 0; i < n; ++i) {
    long double basis[5];
    basis[0] = 1.0L;
    for (int j = 1; j < 5; ++j) basis[j] = basis[j - 1] * cx[i];
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) ata[r][c] += basis[r] * basis[c];
      atb[r] += basis[r] * cy[i];
    }
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 5; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 5; ++r) {
      if (std::abs((double)ata[r][col]) > std::abs((double)ata[pivot][col]))
        pivot = r;
    }
    std::swap(ata[col], ata[pivot]);
    std::swap(atb[col], atb[pivot]);
    for (int r = col + 1; r < 5; ++r) {
      const long double f = ata[r][col] / ata[col][col];
      for (int c = col; c < 5; ++c) ata[r][c] -= f * ata[col][c];
      atb[r] -= f * atb[col];
    }
  }
  long double coef[5];
  for (int r = 4; r >= 0; --r) {
    long double v = atb[r];
    for (int c = r + 1; c < 5; ++c) v -= ata[r][c] * coef[c];
    coef[r] = v / ata[r][r];
  }
  long double rss = 0.0L, curv = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double x = cx[i];
    const long double fit =
        coef[0] + x * (coef[1] + x * (coef[2] + x * (coef[3] + x * coef[4])));
    const long double r = cy[i] - fit;
    rss += r * r;
    const long double d2 = 2.0L * coef[2] + 6.0L * coef[3] * x +
                           12.0L * coef[4] * x * x;
    curv += d2 * d2;
  }
  const double sigma2 = (double)(rss / (long double)(n - 5));
  const auto [lo, hi] = std::minmax_element(cx.begin(), cx.end());
  const double range = *hi - *lo;
  return 2.0362 * std::pow(sigma2 * range / (double)curv, 0.2);
}

}  // namespace

TEST_CASE("sample bookkeeping and validation") {
  ObservedSample s;
  s.delta = {1, 0, 1};
  s.x = {0.5, kNaN, -0.3};
  s.y = {1.2, 0.7, 0.1};
  validate(s);
  CHECK(s.n() == 3);
  CHECK(s.n_complete() == 2);
  CHECK(s.complete_ratio() == doctest::Approx(2.0 / 3.0));

  ObservedSample bad = s;
  bad.x[1] = 0.9;  // covariate present for an incomplete case
  CHECK_THROWS_AS(validate(bad), error);
  bad = s;
  bad.delta[0] = 0;  // complete flag dropped but x still finite
  CHECK_THROWS_AS(validate(bad), error);
  bad = s;
  bad.y[2] = kNaN;
  CHECK_THROWS_AS(validate(bad), error);
}

TEST_CASE("observed_range examples") {
  const auto iv = observed_range(complete_sample({-1, 0, 1}, {0, 0, 0}));
  CHECK(iv.a_hat == -1.0);
  CHECK(iv.b_hat == 1.0);
  CHECK(iv.a0 == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(iv.b0 == doctest::Approx(0.8).epsilon(1e-12));

  const auto wide = observed_range(complete_sample({0, 10}, {0, 0}));
  CHECK(wide.a0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(wide.b0 == doctest::Approx(9.0).epsilon(1e-12));

  CHECK_THROWS_AS(observed_range(complete_sample({5, 5}, {0, 0})), error);
}

TEST_CASE("rot_bandwidth matches the dense-solve oracle") {
  const ObservedSample s = case1_sample(400, 12345);
  const double h = rot_bandwidth(s);
  CHECK(h == doctest::Approx(rot_oracle(s)).epsilon(1e-6));
  CHECK(h > 0.0);
}

TEST_CASE("rot_bandwidth covariate-scaling equivariance") {
  const ObservedSample s = case1_sample(400, 7);
  const double h = rot_bandwidth(s);
  for (double c : {0.5, 3.0}) {
    ObservedSample scaled = s;
    for (std::size_t i = 0; i < scaled.n(); ++i) {
      if (scaled.delta[i]) scaled.x[i] *= c;
    }
    CHECK(rot_bandwidth(scaled) == doctest::Approx(c * h).epsilon(1e-8));
  }
}

TEST_CASE("rot_bandwidth zero-noise polynomial falls back") {
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    const double v = -1.0 + 2.0 * i / 49.0;
    x.push_back(v);
    y.push_back(1.0 + 2.0 * v - 0.5 * v * v);  // exactly quadratic
  }
  const ObservedSample s = complete_sample(x, y);
  bool fallback = false;
  const double h = rot_bandwidth(s, &fallback);
  CHECK(fallback);
  CHECK(h == doctest::Approx(2.0 * std::pow(50.0, -0.2)).epsilon(1e-10));
}

TEST_CASE("scb_bandwidth rule") {
  CHECK(scb_bandwidth(0.3, 400, 0.25) == doctest::Approx(0.19175).epsilon(1e-4));
  CHECK(scb_bandwidth(0.3, 400, 0.25) ==
        doctest::Approx(0.3 * std::pow(std::log(400.0), -0.25)).epsilon(1e-12));
  CHECK(scb_bandwidth(1.0, 3, 0.25) ==
        doctest::Approx(std::pow(std::log(3.0), -0.25)).epsilon(1e-12));
  CHECK_THROWS_AS(scb_bandwidth(0.3, 400, 0.0), error);
  CHECK_THROWS_AS(scb_bandwidth(0.3, 400, 0.2), error);
  CHECK_THROWS_AS(scb_bandwidth(-1.0, 400, 0.25), error);
}

TEST_CASE("silverman_bandwidth on a standard normal sample") {
  RepRng rng(31, 0);
  std::vector<double> x(20000), y(20000, 0.0);
  for (auto& v : x) v = rng.normal();
  const ObservedSample s = complete_sample(x, y);
  const double h = silverman_bandwidth(s);
  const double target = 0.9 * std::pow(20000.0, -0.2);
  CHECK(h == doctest::Approx(target).epsilon(0.03));
}

TEST_CASE("silverman_bandwidth equivariance and degenerate spread") {
  const ObservedSample s = case1_sample(200, 5);
  const double h = silverman_bandwidth(s);
  ObservedSample scaled = s;
  for (std::size_t i = 0; i < scaled.n(); ++i) {
    if (scaled.delta[i]) scaled.x[i] *= 2.5;
  }
  CHECK(silverman_bandwidth(scaled) == doctest::Approx(2.5 * h).epsilon(1e-10));

  CHECK_THROWS_AS(
      silverman_bandwidth(complete_sample(std::vector<double>(20, 1.0),
                                          std::vector<double>(20, 0.0))),
      error);
}

TEST_CASE("wll_fit reproduces affine data exactly") {
  RepRng rng(77, 0);
  FitConfig cfg;
  cfg.kernel = &quartic_kernel();
  cfg.h = 0.4;
  cfg.h_f = 0.3;
  for (int trial = 0; trial < 25; ++trial) {
    ObservedSample s;
    std::vector<double> pi;
    for (int i = 0; i < 60; ++i) {
      const double x = -1.0 + 2.0 * rng.uniform01();
      const bool obs = rng.uniform01() < 0.7;
      s.delta.push_back(obs ? 1 : 0);
      s.x.push_back(obs ? x : kNaN);
      s.y.push_back(2.0 + 3.0 * x);
      pi.push_back(0.05 + 0.9 * rng.uniform01());
    }
    if (s.n_complete() < 5) continue;
    for (double x0 : {-0.5, 0.0, 0.35}) {
      CHECK(wll_fit(s, pi, x0, cfg) ==
            doctest::Approx(2.0 + 3.0 * x0).epsilon(1e-10));
    }
  }
}

TEST_CASE("wll_fit with unit weights equals the unweighted estimator") {
  const ObservedSample s = case1_sample(200, 9);
  ObservedSample full = s;
  // Force full observation for this comparison.
  RepRng rng(9, 0);
  for (std::size_t i = 0; i < full.n(); ++i) {
    if (!full.delta[i]) {
      full.delta[i] = 1;
      full.x[i] = -1.0 + 2.0 * rng.uniform01();
    }
  }
  const std::vector<double> unit(full.n(), 1.0);
  FitConfig cfg;
  cfg.kernel = &quartic_kernel();
  cfg.h = 0.3;
  for (double x0 : {-0.6, 0.0, 0.4}) {
    // Brute-force unweighted local linear fit.
    double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
    for (std::size_t i = 0; i < full.n(); ++i) {
      const double t = full.x[i] - x0;
      const double w = rescaled_eval(*cfg.kernel, t, cfg.h) / full.n();
      s0 += w;
      s1 += w * t;
      s2 += w * t * t;
      t0 += w * full.y[i];
      t1 += w * t * full.y[i];
    }
    const double beta0 = (s2 * t0 - s1 * t1) / (s0 * s2 - s1 * s1);
    CHECK(wll_fit(full, unit, x0, cfg) == doctest::Approx(beta0).epsilon(1e-12));
  }
}

TEST_CASE("wll_fit fails on an empty or singular window") {
  ObservedSample s;
  s.delta = {0, 0, 1, 1};
  s.x = {kNaN, kNaN, 5.0, 5.0};
  s.y = {0.1, 0.2, 0.3, 0.4};
  const std::vector<double> pi(4, 1.0);
  FitConfig cfg;
  cfg.kernel = &quartic_kernel();
  cfg.h = 0.5;
  CHECK_THROWS_AS(wll_fit(s, pi, 0.0, cfg), error);  // all in-window delta = 0
  CHECK_THROWS_AS(wll_fit(s, pi, 5.0, cfg), error);  // coincident covariates
}

TEST_CASE("wll_fit is invariant to a common weight rescaling") {
  const ObservedSample s = case1_sample(120, 3);
  std::vector<double> pi(s.n());
  RepRng rng(3, 1);
  for (auto& p : pi) p = 0.1 + 0.85 * rng.uniform01();
  FitConfig cfg;
  cfg.kernel = &quartic_kernel();
  cfg.h = 0.5;
  const double base = wll_fit(s, pi, 0.1, cfg);
  for (double c : {0.2, 0.9, 1.0}) {
    std::vector<double> scaled = pi;
    for (auto& p : scaled) p *= c;
    CHECK(wll_fit(s, scaled, 0.1, cfg) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("density_estimate reduces to the plain KDE and is compact") {
  const ObservedSample s = case1_sample(300, 21);
  ObservedSample full = s;
  RepRng rng(21, 1);
  for (std::size_t i = 0; i < full.n(); ++i) {
    if (!full.delta[i]) {
      full.delta[i] = 1;
      full.x[i] = -1.0 + 2.0 * rng.uniform01();
    }
  }
  const std::vector<double> unit(full.n(), 1.0);
  const KernelSpec& k = quartic_kernel();
  const double h_f = 0.25;
  double kde = 0.0;
  for (std::size_t i = 0; i < full.n(); ++i) {
    kde += rescaled_eval(k, full.x[i] - 0.2, h_f);
  }
  kde /= full.n();
  CHECK(density_estimate(full, unit, 0.2, h_f, k) ==
        doctest::Approx(kde).epsilon(1e-12));
  CHECK(density_estimate(full, unit, 5.0, h_f, k) == 0.0);
  CHECK(density_estimate(full, unit, -1.0 - h_f - 0.01, h_f, k) == 0.0);
}

TEST_CASE("density_estimate recovers the uniform density") {
  RepRng rng(55, 0);
  std::vector<double> x(5000), y(5000, 0.0);
  for (auto& v : x) v = -1.0 + 2.0 * rng.uniform01();
  const ObservedSample s = complete_sample(x, y);
  const std::vector<double> unit(s.n(), 1.0);
  const double h_f = silverman_bandwidth(s);
  const double f0 = density_estimate(s, unit, 0.0, h_f, quartic_kernel());
  CHECK(f0 > 0.45);
  CHECK(f0 < 0.55);
}

TEST_CASE("record permutation leaves estimates stable") {
  const ObservedSample s = case1_sample(250, 13);
  std::vector<double> pi(s.n());
  RepRng rng(13, 1);
  for (auto& p : pi) p = 0.2 + 0.7 * rng.uniform01();

  std::vector<std::size_t> order(s.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1],
              order[static_cast<std::size_t>(rng.uniform01() * i)]);
  }
  ObservedSample shuffled;
  std::vector<double> pi_shuffled;
  for (std::size_t i : order) {
    shuffled.delta.push_back(s.delta[i]);
    shuffled.x.push_back(s.x[i]);
    shuffled.y.push_back(s.y[i]);
    pi_shuffled.push_back(pi[i]);
  }

  FitConfig cfg;
  cfg.kernel = &quartic_kernel();
  cfg.h = 0.4;
  for (double x0 : {-0.5, 0.0, 0.5}) {
    CHECK(wll_fit(s, pi, x0, cfg) ==
          doctest::Approx(wll_fit(shuffled, pi_shuffled, x0, cfg))
              .epsilon(1e-12));
    CHECK(density_estimate(s, pi, x0, 0.3, quartic_kernel()) ==
          doctest::Approx(density_estimate(shuffled, pi_shuffled, x0, 0.3,
                                           quartic_kernel()))
              .epsilon(1e-12));
  }
  CHECK(rot_bandwidth(shuffled) == doctest::Approx(rot_bandwidth(s)).epsilon(1e-12));
}

TEST_CASE("sorted fast path agrees with the direct operations") {
  const ObservedSample s = case1_sample(300, 101);
  std::vector<double> pi(s.n());
  RepRng rng(101, 1);
  for (auto& p : pi) p = 0.15 + 0.8 * rng.uniform01();
  const SortedCompleteCases cases(s, pi);
  CHECK(cases.total() == s.n());
  CHECK(cases.size() == s.n_complete());

  FitConfig cfg;
  cfg.kernel = &quartic_kernel();
  cfg.h = 0.35;
  for (double x0 : {-0.7, -0.2, 0.0, 0.3, 0.66}) {
    const auto fit = cases.local_linear(x0, cfg.h, *cfg.kernel);
    REQUIRE(fit.ok);
    CHECK(fit.value == doctest::Approx(wll_fit(s, pi, x0, cfg)).epsilon(1e-12));
    CHECK(cases.density(x0, 0.3, *cfg.kernel) ==
          doctest::Approx(density_estimate(s, pi, x0, 0.3, *cfg.kernel))
              .epsilon(1e-12));
  }
}

TEST_CASE("sorted window bounds are exact") {
  const ObservedSample s = case1_sample(200, 88);
  std::vector<double> pi(s.n(), 1.0);
  const SortedCompleteCases cases(s, pi);
  const auto [first, last] = cases.window(0.1, 0.25);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const bool inside = std::abs(cases.xs()[i] - 0.1) <= 0.25;
    CHECK(inside == (i >= first && i < last));
  }
}

TEST_CASE("loo_residual equals a brute-force delete-one refit") {
  const ObservedSample s = case1_sample(250, 123);
  std::vector<double> pi(s.n());
  RepRng rng(123, 1);
  for (auto& p : pi) p = 0.2 + 0.7 * rng.uniform01();
  const SortedCompleteCases cases(s, pi);
  const KernelSpec& k = quartic_kernel();
  const double h = 0.3;
  const double inv_n = 1.0 / static_cast<double>(cases.total());
  int checked = 0;
  for (std::size_t i = 0; i < cases.size(); i += 7) {
    const double xi = cases.xs()[i];
    // Weighted local linear fit at x = xi with case i removed.
    long double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
    for (std::size_t j = 0; j < cases.size(); ++j) {
      if (j == i) continue;
      const double t = cases.xs()[j] - xi;
      if (std::abs(t) > h * k.support_halfwidth) continue;
      const long double w = inv_n * cases.inverse_pi()[j] * rescaled_eval(k, t, h);
      s0 += w; s1 += w * t; s2 += w * t * t;
      t0 += w * cases.ys()[j]; t1 += w * t * cases.ys()[j];
    }
    const long double det = s0 * s2 - s1 * s1;
    if (!(std::abs((double)det) > 1e-12)) continue;
    const double fit = (double)((s2 * t0 - s1 * t1) / det);
    CHECK(cases.loo_residual(i, h, k) ==
          doctest::Approx(cases.ys()[i] - fit).epsilon(1e-10));
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("loo_residual vanishes on exact affine data") {
  ObservedSample s;
  RepRng rng(9, 0);
  for (int i = 0; i < 120; ++i) {
    const double x = -1.0 + 2.0 * rng.uniform01();
    s.delta.push_back(1);
    s.x.push_back(x);
    s.y.push_back(1.5 - 0.7 * x);
  }
  std::vector<double> pi(s.n(), 0.8);
  const SortedCompleteCases cases(s, pi);
  for (std::size_t i = 0; i < cases.size(); i += 11) {
    CHECK(std::abs(cases.loo_residual(i, 0.4, quartic_kernel())) < 1e-10);
  }
}

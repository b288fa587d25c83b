#include "scband.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "band.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "regress.hpp"
#include "selection.hpp"
#include "sim.hpp"

using namespace scband;

struct scb_sample {
  ObservedSample sample;
};

struct scb_model {
  SelectionModel model;
};

struct scb_band {
  BandEstimate band;
  EvalInterval interval;
};

namespace {

thread_local std::string g_last_error;

scb_status map_code(errc code) {
  switch (code) {
    case errc::invalid_argument: return SCB_ERR_INVALID;
    case errc::schema: return SCB_ERR_SCHEMA;
    case errc::fit: return SCB_ERR_FIT;
    case errc::band: return SCB_ERR_BAND;
    case errc::degenerate: return SCB_ERR_DEGENERATE;
    case errc::io: return SCB_ERR_IO;
  }
  return SCB_ERR_INTERNAL;
}

template <typename Fn>
scb_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SCB_OK;
  } catch (const error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SCB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SCB_ERR_INTERNAL;
  }
}

scb_status require(bool ok, const char* msg) {
  if (ok) return SCB_OK;
  g_last_error = msg;
  return SCB_ERR_INVALID;
}

}  // namespace

extern "C" {

const char* scb_last_error(void) { return g_last_error.c_str(); }

scb_status scb_sample_read_csv(const char* path, scb_sample** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] {
    auto result = ingest_csv(path);
    *out = new scb_sample{std::move(result.sample)};
  });
}

scb_status scb_sample_create(const int32_t* delta, const double* x,
                             const double* y, size_t n, scb_sample** out) {
  if (auto s = require(delta && y && out && n > 0, "null or empty argument"))
    return s;
  return guarded([&] {
    ObservedSample sample;
    sample.delta.resize(n);
    sample.x.resize(n);
    sample.y.resize(n);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < n; ++i) {
      if (delta[i] != 0 && delta[i] != 1) {
        throw error(errc::invalid_argument, "delta must be 0 or 1");
      }
      sample.delta[i] = static_cast<std::uint8_t>(delta[i]);
      sample.x[i] = delta[i] ? (x ? x[i] : nan) : nan;
      sample.y[i] = y[i];
    }
    validate(sample);
    *out = new scb_sample{std::move(sample)};
  });
}

scb_status scb_sample_write_csv(const scb_sample* sample, const char* path) {
  if (auto s = require(sample && path, "null argument")) return s;
  return guarded([&] { write_sample_csv(sample->sample, path); });
}

void scb_sample_free(scb_sample* sample) { delete sample; }

size_t scb_sample_size(const scb_sample* sample) {
  return sample ? sample->sample.n() : 0;
}

size_t scb_sample_complete(const scb_sample* sample) {
  return sample ? sample->sample.n_complete() : 0;
}

double scb_sample_complete_ratio(const scb_sample* sample) {
  return sample ? sample->sample.complete_ratio()
                : std::numeric_limits<double>::quiet_NaN();
}

scb_status scb_fit_selection(const scb_sample* sample, scb_family family,
                             double pi_floor, scb_model** out) {
  if (auto s = require(sample && out, "null argument")) return s;
  return guarded([&] {
    FitOptions options;
    if (pi_floor > 0.0) options.floor = pi_floor;
    const Family f =
        family == SCB_FAMILY_PROBIT ? Family::Probit : Family::Logit;
    *out = new scb_model{
        fit_selection(f, sample->sample.y, sample->sample.delta, options)};
  });
}

void scb_model_free(scb_model* model) { delete model; }

double scb_model_intercept(const scb_model* model) { return model->model.alpha0; }
double scb_model_slope(const scb_model* model) { return model->model.alpha1; }
double scb_model_loglik(const scb_model* model) { return model->model.loglik; }
int scb_model_converged(const scb_model* model) {
  return model->model.converged ? 1 : 0;
}
int scb_model_iterations(const scb_model* model) {
  return model->model.iterations;
}

double scb_model_predict(const scb_model* model, double y) {
  return predict_pi(model->model, y);
}

scb_status scb_hosmer_lemeshow(const scb_model* model, const scb_sample* sample,
                               int groups, double* statistic, int* dof,
                               double* pvalue, int* bins_merged) {
  if (auto s = require(model && sample, "null argument")) return s;
  return guarded([&] {
    const auto result = hosmer_lemeshow(model->model, sample->sample.y,
                                        sample->sample.delta,
                                        groups > 0 ? groups : 10);
    if (statistic) *statistic = result.statistic;
    if (dof) *dof = result.dof;
    if (pvalue) *pvalue = result.pvalue;
    if (bins_merged) *bins_merged = result.bins_merged ? 1 : 0;
  });
}

scb_status scb_band_build(const scb_sample* sample, const scb_model* model,
                          double rho, size_t grid_size, double alpha,
                          scb_band** out) {
  if (auto s = require(sample && model && out, "null argument")) return s;
  return guarded([&] {
    const EvalInterval interval = observed_range(sample->sample);
    FitConfig config;
    config.kernel = &quartic_kernel();
    config.rho = rho > 0.0 ? rho : 0.25;
    config.h = scb_bandwidth(rot_bandwidth(sample->sample), sample->sample.n(),
                             config.rho);
    config.h_f = silverman_bandwidth(sample->sample);
    auto band = build_band(sample->sample, model->model, config, interval,
                           grid_size ? grid_size : 401, alpha);
    *out = new scb_band{std::move(band), interval};
  });
}

scb_status scb_band_build_cc(const scb_sample* sample, double rho,
                             size_t grid_size, double alpha, scb_band** out) {
  if (auto s = require(sample && out, "null argument")) return s;
  return guarded([&] {
    const EvalInterval interval = observed_range(sample->sample);
    FitConfig config;
    config.kernel = &quartic_kernel();
    config.rho = rho > 0.0 ? rho : 0.25;
    auto band = complete_case_band(sample->sample, config, interval,
                                   grid_size ? grid_size : 401, alpha);
    *out = new scb_band{std::move(band), interval};
  });
}

void scb_band_free(scb_band* band) { delete band; }

size_t scb_band_grid_size(const scb_band* band) {
  return band ? band->band.grid.size() : 0;
}

scb_status scb_band_values(const scb_band* band, double* grid, double* center,
                           double* lower, double* upper, double* variance,
                           int32_t* valid) {
  if (auto s = require(band != nullptr, "null band")) return s;
  const BandEstimate& b = band->band;
  const size_t n = b.grid.size();
  for (size_t k = 0; k < n; ++k) {
    if (grid) grid[k] = b.grid[k];
    if (center) center[k] = b.m_hat[k];
    if (lower) lower[k] = b.lower[k];
    if (upper) upper[k] = b.upper[k];
    if (variance) variance[k] = b.d_hat[k];
    if (valid) valid[k] = b.valid[k];
  }
  g_last_error.clear();
  return SCB_OK;
}

scb_status scb_band_constants(const scb_band* band, double* h, double* h_f,
                              double* r_n, double* a_h, double* b_h) {
  if (auto s = require(band != nullptr, "null band")) return s;
  if (h) *h = band->band.h;
  if (h_f) *h_f = band->band.h_f;
  if (r_n) *r_n = band->band.r_n;
  if (a_h) *a_h = band->band.a_h;
  if (b_h) *b_h = band->band.b_h;
  g_last_error.clear();
  return SCB_OK;
}

scb_status scb_band_interval(const scb_band* band, double* a0, double* b0) {
  if (auto s = require(band != nullptr, "null band")) return s;
  if (a0) *a0 = band->interval.a0;
  if (b0) *b0 = band->interval.b0;
  g_last_error.clear();
  return SCB_OK;
}

scb_status scb_band_test(const scb_band* band, const double* null_values,
                         size_t len, double* sup_stat, double* t_star,
                         double* pvalue, double* min_cover_level) {
  if (auto s = require(band && null_values, "null argument")) return s;
  return guarded([&] {
    const auto result =
        test_null(band->band, std::span<const double>(null_values, len));
    if (sup_stat) *sup_stat = result.sup_stat;
    if (t_star) *t_star = result.t_star;
    if (pvalue) *pvalue = result.pvalue;
    if (min_cover_level) *min_cover_level = result.min_cover_level;
  });
}

scb_status scb_linear_null(const scb_sample* sample, const scb_model* model,
                           double* intercept, double* slope) {
  if (auto s = require(sample && model, "null argument")) return s;
  return guarded([&] {
    const auto [a, b] = weighted_linear_null(sample->sample, model->model);
    if (intercept) *intercept = a;
    if (slope) *slope = b;
  });
}

double scb_gumbel_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    g_last_error = "gumbel_quantile: alpha must lie in (0,1)";
    return std::numeric_limits<double>::quiet_NaN();
  }
  return gumbel_quantile(alpha);
}

scb_status scb_critical_constants(double h, double a0, double b0, double* a_h,
                                  double* b_h) {
  return guarded([&] {
    const auto [a, b] = critical_constants(h, a0, b0, quartic_kernel());
    if (a_h) *a_h = a;
    if (b_h) *b_h = b;
  });
}

scb_status scb_kernel_functionals(double* lambda, double* cee, double* mu2) {
  const KernelSpec& k = quartic_kernel();
  if (lambda) *lambda = k.lambda;
  if (cee) *cee = k.cee;
  if (mu2) *mu2 = k.mu2;
  g_last_error.clear();
  return SCB_OK;
}

scb_status scb_run_scenario(const scb_scenario* scenario, const double* levels,
                            size_t n_levels, scb_level_result* results,
                            size_t* failures) {
  if (auto s = require(scenario && levels && results && n_levels > 0,
                       "null or empty argument"))
    return s;
  return guarded([&] {
    Scenario sc;
    if (scenario->sim_case < 1 || scenario->sim_case > 4) {
      throw error(errc::invalid_argument, "sim_case must be 1..4");
    }
    sc.sim_case = static_cast<SimCase>(scenario->sim_case);
    switch (scenario->mechanism) {
      case SCB_MECH_LOGIT: sc.mechanism = Mechanism::Logit; break;
      case SCB_MECH_PROBIT: sc.mechanism = Mechanism::Probit; break;
      case SCB_MECH_TRUNCATED_LOGIT:
        sc.mechanism = Mechanism::TruncatedLogit;
        break;
      default:
        throw error(errc::invalid_argument, "unknown mechanism");
    }
    sc.alpha0 = scenario->alpha0;
    sc.alpha1 = scenario->alpha1;
    sc.n = scenario->n;
    sc.replications = scenario->replications;
    sc.base_seed = scenario->seed;
    sc.grid_size = scenario->grid_size ? scenario->grid_size : 401;
    sc.rho = scenario->rho > 0.0 ? scenario->rho : 0.25;
    sc.pi_floor = scenario->pi_floor > 0.0 ? scenario->pi_floor : 0.01;
    sc.threads = scenario->threads;
    sc.alpha_levels.assign(levels, levels + n_levels);
    const CoverageReport report = run_scenario(sc);
    for (size_t l = 0; l < n_levels; ++l) {
      results[l].level = report.levels[l].level;
      results[l].scb_coverage = report.levels[l].coverage;
      results[l].scb_avg_width = report.levels[l].avg_width;
      results[l].cc_coverage = report.levels[l].cc_coverage;
      results[l].cc_avg_width = report.levels[l].cc_avg_width;
    }
    if (failures) *failures = report.failures;
  });
}

}  // extern "C"

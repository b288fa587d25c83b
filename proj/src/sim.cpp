#include "sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "errors.hpp"
#include "stats.hpp"

namespace scband {

double true_mean(SimCase c, double x) {
  switch (c) {
    case SimCase::Case1:
    case SimCase::Case2:
      return std::sin(3.14159265358979323846 * x);
    case SimCase::Case3:
    case SimCase::Case4:
      return std::exp(-6.0 * x * x * x / 5.0);
  }
  return 0.0;
}

double true_sigma(SimCase c, double x) {
  switch (c) {
    case SimCase::Case1:
    case SimCase::Case3:
      return 1.0;
    case SimCase::Case2:
    case SimCase::Case4: {
      const double e = std::exp(x);
      return 2.0 * e / (e + 1.0);
    }
  }
  return 1.0;
}

double mechanism_pi(Mechanism mech, double a0, double a1, double y) {
  switch (mech) {
    case Mechanism::Logit:
      return 1.0 / (1.0 + std::exp(-a0 - a1 * y));
    case Mechanism::Probit:
      return normal_cdf(a0 + a1 * y);
    case Mechanism::TruncatedLogit:
      return std::min(1.0 / (1.0 + std::exp(-a0 - a1 * y)), 0.75);
  }
  return 0.5;
}

const char* case_name(SimCase c) {
  switch (c) {
    case SimCase::Case1: return "case1";
    case SimCase::Case2: return "case2";
    case SimCase::Case3: return "case3";
    case SimCase::Case4: return "case4";
  }
  return "?";
}

const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::Logit: return "logit";
    case Mechanism::Probit: return "probit";
    case Mechanism::TruncatedLogit: return "truncated_logit";
  }
  return "?";
}

ObservedSample generate(const Scenario& scenario, std::size_t rep_index) {
  if (rep_index >= scenario.replications) {
    throw error(errc::invalid_argument, "generate: rep_index out of range");
  }
  RepRng rng(scenario.base_seed, rep_index);
  ObservedSample sample;
  sample.delta.resize(scenario.n);
  sample.x.resize(scenario.n);
  sample.y.resize(scenario.n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < scenario.n; ++i) {
    const double x = -1.0 + 2.0 * rng.uniform01();
    const double eps = true_sigma(scenario.sim_case, x) * rng.normal();
    const double y = true_mean(scenario.sim_case, x) + eps;
    const double pi =
        mechanism_pi(scenario.mechanism, scenario.alpha0, scenario.alpha1, y);
    const bool observed = rng.uniform01() < pi;
    sample.delta[i] = observed ? 1 : 0;
    sample.x[i] = observed ? x : nan;
    sample.y[i] = y;
  }
  return sample;
}

namespace {

struct RepOutcome {
  bool ok = false;
  // Indexed by alpha level: covered flag and average width per band.
  std::vector<std::uint8_t> covered, cc_covered;
  std::vector<double> width, cc_width;
};

struct LevelEval {
  bool covered = true;
  double avg_width = 0.0;
};

LevelEval evaluate_level(const BandCore& core, double alpha, SimCase c) {
  const double q = gumbel_quantile(alpha);
  const double factor = core.b_h + q / core.a_h;
  const double scale =
      1.0 / std::sqrt(static_cast<double>(core.n_rate) * core.h);
  LevelEval out;
  KahanSum widths;
  std::size_t used = 0;
  for (std::size_t k = 0; k < core.grid.size(); ++k) {
    if (!core.valid[k]) continue;
    const double half = scale * std::sqrt(core.r_n * core.d_hat[k]) * factor;
    const double m0 = true_mean(c, core.grid[k]);
    if (m0 < core.m_hat[k] - half || m0 > core.m_hat[k] + half) {
      out.covered = false;
    }
    widths.add(2.0 * half);
    ++used;
  }
  out.avg_width = used ? widths.value() / static_cast<double>(used) : 0.0;
  return out;
}

RepOutcome run_replication(const Scenario& scenario, std::size_t rep) {
  RepOutcome out;
  const std::size_t nlev = scenario.alpha_levels.size();
  out.covered.assign(nlev, 0);
  out.cc_covered.assign(nlev, 0);
  out.width.assign(nlev, 0.0);
  out.cc_width.assign(nlev, 0.0);
  try {
    const ObservedSample sample = generate(scenario, rep);
    const Family family = scenario.mechanism == Mechanism::Probit
                              ? Family::Probit
                              : Family::Logit;
    FitOptions fit_options;
    fit_options.floor = scenario.pi_floor;
    const SelectionModel model =
        fit_selection(family, sample.y, sample.delta, fit_options);
    const EvalInterval interval = observed_range(sample);
    const KernelSpec& kernel = quartic_kernel();

    const double h_rot = rot_bandwidth(sample);
    const double h = scb_bandwidth(h_rot, sample.n(), scenario.rho);
    const double h_f = silverman_bandwidth(sample);

    const std::vector<double> pi = pi_values(model, sample);
    const SortedCompleteCases cases(sample, pi);
    const BandCore core =
        compute_band_core(cases, sample.complete_ratio(), h, h_f, kernel,
                          interval, scenario.grid_size);

    const SortedCompleteCases cc_cases(sample);
    const double h_cc = scb_bandwidth(h_rot, cc_cases.size(), scenario.rho);
    const BandCore cc_core = compute_band_core(
        cc_cases, 1.0, h_cc, h_f, kernel, interval, scenario.grid_size, 0.05,
        /*loo_residuals=*/false);

    for (std::size_t l = 0; l < nlev; ++l) {
      const double alpha = scenario.alpha_levels[l];
      const LevelEval scb = evaluate_level(core, alpha, scenario.sim_case);
      const LevelEval cc = evaluate_level(cc_core, alpha, scenario.sim_case);
      out.covered[l] = scb.covered ? 1 : 0;
      out.width[l] = scb.avg_width;
      out.cc_covered[l] = cc.covered ? 1 : 0;
      out.cc_width[l] = cc.avg_width;
    }
    out.ok = true;
  } catch (const error&) {
    out.ok = false;
  }
  return out;
}

}  // namespace

CoverageReport run_scenario(const Scenario& scenario) {
  if (scenario.replications < 1) {
    throw error(errc::invalid_argument, "run_scenario: replications must be >= 1");
  }
  if (scenario.n < 50) {
    throw error(errc::invalid_argument, "run_scenario: n must be >= 50");
  }
  for (double a : scenario.alpha_levels) {
    if (!(a > 0.0 && a < 1.0)) {
      throw error(errc::invalid_argument, "run_scenario: alpha level out of (0,1)");
    }
  }

  const std::size_t reps = scenario.replications;
  std::vector<RepOutcome> outcomes(reps);
  std::size_t workers = scenario.threads
                            ? scenario.threads
                            : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<std::size_t>(workers, reps);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= reps) return;
      outcomes[rep] = run_replication(scenario, rep);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  CoverageReport report;
  report.scenario = scenario;
  const std::size_t nlev = scenario.alpha_levels.size();
  std::vector<KahanSum> cov(nlev), wid(nlev), cc_cov(nlev), cc_wid(nlev);
  for (const RepOutcome& out : outcomes) {
    if (!out.ok) {
      ++report.failures;
      continue;
    }
    ++report.completed;
    for (std::size_t l = 0; l < nlev; ++l) {
      cov[l].add(out.covered[l]);
      wid[l].add(out.width[l]);
      cc_cov[l].add(out.cc_covered[l]);
      cc_wid[l].add(out.cc_width[l]);
    }
  }
  if (report.failures * 10 > reps) {
    throw error(errc::band, "run_scenario: more than 10% of replications failed");
  }
  const double denom = static_cast<double>(std::max<std::size_t>(1, report.completed));
  for (std::size_t l = 0; l < nlev; ++l) {
    LevelResult r;
    r.level = 1.0 - scenario.alpha_levels[l];
    r.coverage = cov[l].value() / denom;
    r.avg_width = wid[l].value() / denom;
    r.cc_coverage = cc_cov[l].value() / denom;
    r.cc_avg_width = cc_wid[l].value() / denom;
    report.levels.push_back(r);
  }
  return report;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string emit_table(const std::vector<CoverageReport>& reports,
                       TableFormat format) {
  if (reports.empty()) {
    throw error(errc::invalid_argument, "emit_table: no reports");
  }
  std::ostringstream out;
  if (format == TableFormat::Csv) {
    out << "case,mechanism,alpha0,alpha1,n,replications,level,"
           "scb_coverage,scb_width,cc_coverage,cc_width,failures\n";
    for (const CoverageReport& r : reports) {
      for (const LevelResult& l : r.levels) {
        out << case_name(r.scenario.sim_case) << ','
            << mechanism_name(r.scenario.mechanism) << ','
            << r.scenario.alpha0 << ',' << r.scenario.alpha1 << ','
            << r.scenario.n << ',' << r.scenario.replications << ','
            << fixed3(l.level) << ',' << fixed3(l.coverage) << ','
            << fixed3(l.avg_width) << ',' << fixed3(l.cc_coverage) << ','
            << fixed3(l.cc_avg_width) << ',' << r.failures << '\n';
      }
    }
  } else {
    out << "| case | mechanism | params | n | level | SCB | SCB-CC | failures |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const CoverageReport& r : reports) {
      for (const LevelResult& l : r.levels) {
        out << "| " << case_name(r.scenario.sim_case) << " | "
            << mechanism_name(r.scenario.mechanism) << " | ("
            << r.scenario.alpha0 << ", " << r.scenario.alpha1 << ") | "
            << r.scenario.n << " | " << fixed3(l.level) << " | "
            << fixed3(l.coverage) << '(' << fixed3(l.avg_width) << ") | "
            << fixed3(l.cc_coverage) << '(' << fixed3(l.cc_avg_width) << ") | "
            << r.failures << " |\n";
      }
    }
  }
  return out.str();
}

}  // namespace scband

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "band.hpp"
#include "regress.hpp"

namespace scband {

enum class SimCase { Case1 = 1, Case2 = 2, Case3 = 3, Case4 = 4 };
enum class Mechanism { Logit, Probit, TruncatedLogit };

// True mean and conditional standard deviation of the simulation case.
double true_mean(SimCase c, double x);
double true_sigma(SimCase c, double x);

// Selection probability of the mechanism at response y; TruncatedLogit
// caps the logistic value at 0.75.
double mechanism_pi(Mechanism mech, double a0, double a1, double y);

struct Scenario {
  SimCase sim_case = SimCase::Case1;
  Mechanism mechanism = Mechanism::Logit;
  double alpha0 = 1.8;
  double alpha1 = 1.0;
  std::size_t n = 400;
  std::vector<double> alpha_levels = {0.05};  // error probabilities
  std::size_t replications = 1000;
  std::uint64_t base_seed = 0;
  std::size_t grid_size = 401;
  double rho = 0.25;
  double pi_floor = 0.01;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

struct LevelResult {
  double level = 0.95;  // confidence level 1 - alpha
  double coverage = 0.0;
  double avg_width = 0.0;
  double cc_coverage = 0.0;
  double cc_avg_width = 0.0;
};

struct CoverageReport {
  Scenario scenario;
  std::vector<LevelResult> levels;
  std::size_t failures = 0;
  std::size_t completed = 0;
};

// Draws n iid triples for the scenario; the stream is a pure function of
// (base_seed, rep_index).
ObservedSample generate(const Scenario& scenario, std::size_t rep_index);

CoverageReport run_scenario(const Scenario& scenario);

enum class TableFormat { Csv, Markdown };

std::string emit_table(const std::vector<CoverageReport>& reports,
                       TableFormat format);

const char* case_name(SimCase c);
const char* mechanism_name(Mechanism m);

}  // namespace scband

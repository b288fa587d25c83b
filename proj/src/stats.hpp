#pragma once

#include <cstdint>
#include <random>

namespace scband {

double normal_pdf(double z);
double normal_cdf(double z);

// Inverse standard normal CDF (Wichura's AS 241, double precision).
double normal_quantile(double p);

// Upper tail P(chi2_dof > stat).
double chi_square_upper_tail(double stat, int dof);

// Deterministic substream keyed by (seed, stream). Uniform and normal
// variates are produced by inversion so the byte stream is identical
// across platforms for a given key.
class RepRng {
 public:
  RepRng(std::uint64_t seed, std::uint64_t stream);

  // Uniform on (0,1), 53-bit resolution.
  double uniform01();
  double normal();

 private:
  std::mt19937_64 gen_;
};

// Neumaier compensated accumulator; keeps reductions stable under
// permutation of the input order.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v);
  double value() const { return sum + comp; }
};

}  // namespace scband

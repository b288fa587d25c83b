#include "kernel.hpp"

#include <cmath>

#include "errors.hpp"

namespace scband {

namespace {

double quartic_eval(double u) {
  if (std::abs(u) > 1.0) return 0.0;
  const double t = 1.0 - u * u;
  return (15.0 / 16.0) * t * t;
}

double quartic_deriv(double u) {
  if (std::abs(u) > 1.0) return 0.0;
  // d/du (15/16)(1-u^2)^2 = -(15/4) u (1-u^2)
  return -(15.0 / 4.0) * u * (1.0 - u * u);
}

}  // namespace

const KernelSpec& quartic_kernel() {
  // lambda = 5/7, C(K) = 3, mu2 = 1/7; exact values for the quartic kernel.
  static const KernelSpec spec{
      quartic_eval, quartic_deriv, 1.0, 5.0 / 7.0, 3.0, 1.0 / 7.0};
  return spec;
}

double rescaled_eval(const KernelSpec& kernel, double u, double h) {
  if (!(h > 0.0)) {
    throw error(errc::invalid_argument, "rescaled_eval: bandwidth must be positive");
  }
  return kernel.eval(u / h) / h;
}

}  // namespace scband

#pragma once

namespace scband {

// Compactly supported symmetric kernel together with the analytic
// functionals that enter bandwidth rules and band constants.
//
// lambda = int K^2(u) du
// cee    = lambda^{-1} int {K'(u)}^2 du
// mu2    = int u^2 K(u) du
//
// The derivative is supplied analytically per kernel; cee must be exact
// because it feeds the critical constants.
struct KernelSpec {
  double (*eval)(double u);
  double (*deriv)(double u);
  double support_halfwidth;
  double lambda;
  double cee;
  double mu2;
};

// Quartic (biweight) kernel K(u) = (15/16)(1-u^2)^2 on [-1,1].
const KernelSpec& quartic_kernel();

// K_h(u) = h^{-1} K(u/h). Throws on nonpositive h.
double rescaled_eval(const KernelSpec& kernel, double u, double h);

}  // namespace scband

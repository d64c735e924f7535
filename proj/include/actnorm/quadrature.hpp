#pragma once

#include <functional>
#include <vector>

namespace actnorm {

/// Quadrature against the standard Gaussian probability measure: nodes are in
/// z-space (unit variance) and the weights absorb the density, so
/// integrate(rule, f) approximates E[f(Z)], Z ~ N(0,1).
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, sum to 1
  int order = 0;                // number of points
};

/// Gauss-Hermite rule (probabilists' weight), exact for polynomials up to
/// degree 2*order-1. Valid orders: 2..512.
QuadratureRule build_rule(int order);

/// Cached Gauss-Hermite rule; order defaults to the project-wide smooth-integrand
/// workhorse.
const QuadratureRule& gauss_rule(int order = 128);

/// Cached composite-trapezoid rule on [-12, 12], split at x = 0 so integrands
/// with a kink or jump there are integrated piecewise smoothly. Near-oracle
/// accuracy (~1e-10) for such integrands, where Gauss rules stall.
const QuadratureRule& grid_rule();

/// Sum of w_i * f(x_i) with long double accumulation.
/// Throws numeric_error naming the offending node if f is not finite there.
double integrate(const QuadratureRule& rule, const std::function<double(double)>& f);

}  // namespace actnorm

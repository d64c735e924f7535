#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "actnorm/activation.hpp"
#include "actnorm/quadrature.hpp"

namespace actnorm {

/// Truncated expansion f(x) = sum_n coefficients[n] * H_n(x)/sqrt(n!) in the
/// probabilists' Hermite basis (orthonormal for the standard Gaussian
/// measure).
struct HermiteExpansion {
  std::vector<double> coefficients;  // f_0 .. f_K
  int truncation_order = 0;          // K
  std::string source_activation;

  double tail_energy() const;  // sum of f_n^2 for n >= 2
};

/// Probabilists' Hermite polynomial H_n(x); recurrence-based, n <= 64.
double hermite_poly(int n, double x);

/// Coefficients f_n = (1/sqrt(n!)) int f(z) H_n(z) Dz for n = 0..K.
/// Requires K <= 64 and rule.order >= 2K.
HermiteExpansion expand(const Activation& a, int k, const QuadratureRule& rule);

/// Zero f_0 and f_1, rescale so sum_{n>=2} f_n^2 = 1. Throws numeric_error if
/// the expansion is affine (nothing above order 1 to project onto).
HermiteExpansion project_to_H(const HermiteExpansion& e);

/// Pointwise reconstruction sum_n f_n H_n(x)/sqrt(n!).
double evaluate(const HermiteExpansion& e, double x);

/// CSV rows "n,f_n" for plotting.
void write_csv(const HermiteExpansion& e, std::ostream& os);

}  // namespace actnorm

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "actnorm/activation.hpp"
#include "actnorm/quadrature.hpp"

namespace actnorm {

/// Scales entering the Gaussian integrals: pre-activations are treated as
/// sigma_w * sigma_x * z with z standard normal.
struct NormalizationContext {
  double sigma_w = 1.0;
  double sigma_x = 1.0;
  double q_star = 1.0;  // limit pre-activation variance
};

struct NormalizationCoefficients {
  std::string activation;
  double alpha = 0.0;  // mean slope, int f'(sigma z) Dz
  double beta = 0.0;   // mean, int f(sigma z) Dz
  double gamma = 0.0;  // residual L2 norm after removing the affine part
  double xi = 0.0;     // alpha^2
  double eta = 0.0;    // int f(sigma z)^2 Dz
  double m2 = 0.0;     // int f'(sigma z)^2 Dz
  double m4 = 0.0;     // int f'(sigma z)^4 Dz
  // Largest |gauss - grid| across the coefficient integrals when the
  // activation is kinked and the two methods were compared; kinked integrands
  // defeat polynomial quadrature, so a large value here is expected for them
  // and the grid value wins.
  double method_discrepancy = 0.0;
  bool discrepancy_flagged = false;  // method_discrepancy > 1e-6
};

/// Coefficients with an explicit quadrature rule. Kinked activations are
/// additionally integrated on the grid rule; final values come from the grid
/// and the disagreement is recorded.
NormalizationCoefficients compute_coefficients(const Activation& a,
                                               const NormalizationContext& ctx,
                                               const QuadratureRule& rule);

/// Cached variant with automatic rule selection (Gauss 128 for smooth,
/// grid rule for kinked).
const NormalizationCoefficients& compute_coefficients(const Activation& a,
                                                      const NormalizationContext& ctx = {});

/// The statically normalized activation x -> (f(x) - alpha x - beta)/gamma
/// with derivative x -> (f'(x) - alpha)/gamma.
Activation normalize(const Activation& a, const NormalizationCoefficients& c);

/// Measure (xi, eta) of an already-normalized activation; rule chosen
/// automatically from the kink flag.
std::pair<double, double> recompute_diagnostics(const Activation& a_h);

/// Built-in reference row for cross-checking computed coefficients. Columns
/// are stored by meaning; the source layout labels the mean column "alpha" and
/// the slope column "beta", i.e. the opposite of the transform's convention.
struct ReferenceRow {
  std::string name;
  double mean;        // published alpha column
  double slope;       // published beta column
  double gamma;
  double m2_squared;  // published (f'^2 integral)^2 column
  double m4;          // published f'^4 integral column
};

/// The eight activations with published reference values.
const std::vector<ReferenceRow>& reference_coefficients();

}  // namespace actnorm

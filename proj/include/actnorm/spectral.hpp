#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "actnorm/activation.hpp"
#include "actnorm/matrix.hpp"
#include "actnorm/quadrature.hpp"

namespace actnorm {

// Absolutely continuous spectral law on a compact support interval.
struct SpectralDensity {
  double support_lo = 0.0;
  double support_hi = 0.0;
  std::function<double(double)> density;
  std::string name;
};

// Eigenvalues of one symmetric matrix, sorted descending, with provenance.
struct EmpiricalSpectrum {
  std::vector<double> eigenvalues;
  std::string source;
  int layer = -1;
  int epoch = -1;
};

enum class moment_kind { matrix, nonlinearity };

// moments[k-1] holds the k-th moment (m_k or mu_k).
struct MomentSeries {
  std::vector<double> moments;
  moment_kind kind = moment_kind::matrix;
};

// Marcenko-Pastur law with aspect ratio phi in (0, 1].
SpectralDensity mp_density(double phi);

// Integral of g against the density. Uses the substitution
// x = lo + (hi - lo) sin^2(theta), which absorbs inverse-square-root edge
// behaviour and converges fast for smooth edge factors.
double density_integral(const SpectralDensity& d, const std::function<double(double)>& g,
                        std::size_t panels = 4096);

// Distribution function of the density, clamped to [0, 1] off the support.
double density_cdf(const SpectralDensity& d, double x, std::size_t panels = 2048);

// Closed-form CDF of the square Marcenko-Pastur law (phi = 1).
double mp_unit_cdf(double x);

// Eigenvalues of a symmetric matrix, descending. The matrix is symmetrized
// defensively; asymmetry beyond 1e-10 is rejected.
EmpiricalSpectrum empirical_spectrum(const Matrix& m, std::string source = "", int layer = -1,
                                     int epoch = -1);

// Cauchy-Stieltjes transform in the integral convention: G(z) = E[1/(lambda - z)],
// so z * G(z) -> -1 as |z| -> infinity.
std::complex<double> stieltjes_transform(const SpectralDensity& d, std::complex<double> z,
                                         std::size_t panels = 4096);
std::complex<double> stieltjes_transform(const EmpiricalSpectrum& s, std::complex<double> z);

// Same transform with the opposite overall sign, G(z) = E[1/(z - lambda)],
// so z * G(z) -> +1. This is the resolvent-trace sign convention.
std::complex<double> green_function(const SpectralDensity& d, std::complex<double> z,
                                    std::size_t panels = 4096);
std::complex<double> green_function(const EmpiricalSpectrum& s, std::complex<double> z);

// Ordinary moment generating function Sum_{k>=0} m_k u^k = green_function(1/u) / u.
// Defined for u with 1/u off the support; returns 1 at u = 0.
std::complex<double> moment_generating(const SpectralDensity& d, std::complex<double> u,
                                       std::size_t panels = 4096);

// Raw moments m_k = integral of x^k against the density / spectrum.
MomentSeries density_moments(const SpectralDensity& d, std::size_t k_max,
                             std::size_t panels = 4096);
MomentSeries spectrum_moments(const EmpiricalSpectrum& s, std::size_t k_max);

// Gaussian moments of the squared activation derivative:
// mu_k = integral over the standard Gaussian of f'(sqrt(q_star) h)^(2k).
// The overload without a rule picks the kink-safe grid rule when needed.
MomentSeries nonlinearity_moments(const Activation& a, double q_star, std::size_t k_max,
                                  const QuadratureRule& rule);
MomentSeries nonlinearity_moments(const Activation& a, double q_star, std::size_t k_max);

// Truncated moment transform Sum_{k=1..K} m_k z^{-k}. Requires
// |z| >= 2 * max(1, max_k |m_k|^{1/k}) so the tail is negligible.
std::complex<double> m_transform_from_moments(const MomentSeries& ms, std::complex<double> z);

// Moment transform of the squared-derivative diagonal D^2 of an activation.
std::complex<double> m_transform_d2(const Activation& a, double q_star, std::complex<double> z,
                                    std::size_t k_max = 16);

// Taylor coefficients s_0 .. s_{order-1} of the S-transform at 0, obtained by
// series reversion of the moment transform. Needs m_1 != 0 and order <= 8.
std::vector<double> s_transform_from_moments(const MomentSeries& ms, std::size_t order);

// Inverse direction: rebuild m_1 .. m_k from S-transform coefficients.
MomentSeries moments_from_s(const std::vector<double>& s, std::size_t k_max);

// Two-sided Kolmogorov-Smirnov distance between an empirical spectrum and a
// reference distribution function.
double ks_distance(const EmpiricalSpectrum& s, const std::function<double(double)>& cdf);
double ks_distance(const EmpiricalSpectrum& s, const SpectralDensity& d);

}  // namespace actnorm

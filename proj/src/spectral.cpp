#include "actnorm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "actnorm/eigen.hpp"
#include "actnorm/errors.hpp"
#include "actnorm/series.hpp"

namespace actnorm {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_density(const SpectralDensity& d) {
  if (!d.density) throw validation_error("spectral density has no density function");
  if (!(d.support_lo < d.support_hi))
    throw validation_error("spectral density support is empty or inverted");
}

bool on_support(const SpectralDensity& d, std::complex<double> z) {
  return z.imag() == 0.0 && z.real() >= d.support_lo && z.real() <= d.support_hi;
}

// Midpoint rule in theta for integrals over [lo, hi] after the substitution
// x = lo + (hi - lo) sin^2(theta), dx = (hi - lo) sin(2 theta) dtheta.
template <typename Acc, typename F>
Acc theta_midpoint(double lo, double hi, std::size_t panels, const F& f) {
  const double span = hi - lo;
  const double h = (kPi / 2.0) / static_cast<double>(panels);
  Acc acc{};
  for (std::size_t i = 0; i < panels; ++i) {
    const double theta = (static_cast<double>(i) + 0.5) * h;
    const double s = std::sin(theta);
    const double x = lo + span * s * s;
    const double jac = span * std::sin(2.0 * theta);
    acc += Acc(f(x)) * jac;
  }
  return acc * h;
}

struct complex_acc {
  long double re = 0.0L, im = 0.0L;
  complex_acc() = default;
  explicit complex_acc(std::complex<double> v) : re(v.real()), im(v.imag()) {}
  complex_acc& operator+=(const complex_acc& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  complex_acc operator*(double s) const {
    complex_acc out;
    out.re = re * s;
    out.im = im * s;
    return out;
  }
  std::complex<double> value() const {
    return {static_cast<double>(re), static_cast<double>(im)};
  }
};

struct real_acc {
  long double v = 0.0L;
  real_acc() = default;
  explicit real_acc(double x) : v(x) {}
  real_acc& operator+=(const real_acc& o) {
    v += o.v;
    return *this;
  }
  real_acc operator*(double s) const {
    real_acc out;
    out.v = v * s;
    return out;
  }
  double value() const { return static_cast<double>(v); }
};

}  // namespace

SpectralDensity mp_density(double phi) {
  if (!(phi > 0.0) || phi > 1.0)
    throw validation_error("mp_density: shape parameter must lie in (0, 1]");
  const double root = std::sqrt(phi);
  const double lo = (1.0 - root) * (1.0 - root);
  const double hi = (1.0 + root) * (1.0 + root);
  SpectralDensity d;
  d.support_lo = lo;
  d.support_hi = hi;
  d.name = "marcenko_pastur";
  d.density = [lo, hi, phi](double x) {
    if (x <= lo || x >= hi) return 0.0;
    return std::sqrt((hi - x) * (x - lo)) / (2.0 * kPi * phi * x);
  };
  return d;
}

double density_integral(const SpectralDensity& d, const std::function<double(double)>& g,
                        std::size_t panels) {
  require_density(d);
  if (panels == 0) throw validation_error("density_integral: panel count must be positive");
  const auto& rho = d.density;
  return theta_midpoint<real_acc>(d.support_lo, d.support_hi, panels,
                                  [&](double x) { return rho(x) * g(x); })
      .value();
}

double density_cdf(const SpectralDensity& d, double x, std::size_t panels) {
  require_density(d);
  if (x <= d.support_lo) return 0.0;
  if (x >= d.support_hi) return 1.0;
  const auto& rho = d.density;
  const double mass =
      theta_midpoint<real_acc>(d.support_lo, x, panels, [&](double t) { return rho(t); }).value();
  return std::clamp(mass, 0.0, 1.0);
}

double mp_unit_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 4.0) return 1.0;
  const double theta = std::asin(std::sqrt(x) / 2.0);
  return (2.0 / kPi) * (theta + std::sin(theta) * std::cos(theta));
}

EmpiricalSpectrum empirical_spectrum(const Matrix& m, std::string source, int layer, int epoch) {
  if (m.rows() != m.cols()) throw validation_error("empirical_spectrum: matrix must be square");
  if (!m.all_finite()) throw numeric_error("empirical_spectrum: matrix has non-finite entries");
  const std::size_t n = m.rows();
  double asym = 0.0;
  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      asym = std::max(asym, std::fabs(m(i, j) - m(j, i)));
      sym(i, j) = 0.5 * (m(i, j) + m(j, i));
    }
  if (asym > 1e-10) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "empirical_spectrum: asymmetry %.3e exceeds 1e-10", asym);
    throw validation_error(buf);
  }
  EmpiricalSpectrum out;
  out.eigenvalues = symmetric_eigenvalues(sym);
  std::reverse(out.eigenvalues.begin(), out.eigenvalues.end());
  out.source = std::move(source);
  out.layer = layer;
  out.epoch = epoch;
  return out;
}

std::complex<double> stieltjes_transform(const SpectralDensity& d, std::complex<double> z,
                                         std::size_t panels) {
  require_density(d);
  if (on_support(d, z))
    throw numeric_error("stieltjes_transform: evaluation point lies on the support");
  const auto& rho = d.density;
  return theta_midpoint<complex_acc>(d.support_lo, d.support_hi, panels,
                                     [&](double x) { return rho(x) / (x - z); })
      .value();
}

std::complex<double> stieltjes_transform(const EmpiricalSpectrum& s, std::complex<double> z) {
  if (s.eigenvalues.empty()) throw validation_error("stieltjes_transform: empty spectrum");
  complex_acc acc;
  for (double lam : s.eigenvalues) {
    const std::complex<double> dz = std::complex<double>(lam, 0.0) - z;
    if (std::abs(dz) < 1e-12)
      throw numeric_error("stieltjes_transform: evaluation point coincides with an eigenvalue");
    acc += complex_acc(1.0 / dz);
  }
  return acc.value() * (1.0 / static_cast<double>(s.eigenvalues.size()));
}

std::complex<double> green_function(const SpectralDensity& d, std::complex<double> z,
                                    std::size_t panels) {
  return -stieltjes_transform(d, z, panels);
}

std::complex<double> green_function(const EmpiricalSpectrum& s, std::complex<double> z) {
  return -stieltjes_transform(s, z);
}

std::complex<double> moment_generating(const SpectralDensity& d, std::complex<double> u,
                                       std::size_t panels) {
  if (u == std::complex<double>(0.0, 0.0)) return {1.0, 0.0};
  const std::complex<double> z = 1.0 / u;
  return green_function(d, z, panels) / u;
}

MomentSeries density_moments(const SpectralDensity& d, std::size_t k_max, std::size_t panels) {
  if (k_max == 0) throw validation_error("density_moments: order must be positive");
  MomentSeries ms;
  ms.kind = moment_kind::matrix;
  ms.moments.resize(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double kk = static_cast<double>(k);
    ms.moments[k - 1] =
        density_integral(d, [kk](double x) { return std::pow(x, kk); }, panels);
  }
  return ms;
}

MomentSeries spectrum_moments(const EmpiricalSpectrum& s, std::size_t k_max) {
  if (k_max == 0) throw validation_error("spectrum_moments: order must be positive");
  if (s.eigenvalues.empty()) throw validation_error("spectrum_moments: empty spectrum");
  MomentSeries ms;
  ms.kind = moment_kind::matrix;
  ms.moments.assign(k_max, 0.0);
  const double inv_n = 1.0 / static_cast<double>(s.eigenvalues.size());
  for (std::size_t k = 1; k <= k_max; ++k) {
    long double acc = 0.0L;
    for (double lam : s.eigenvalues) acc += std::pow(static_cast<long double>(lam), k);
    ms.moments[k - 1] = static_cast<double>(acc) * inv_n;
  }
  return ms;
}

MomentSeries nonlinearity_moments(const Activation& a, double q_star, std::size_t k_max,
                                  const QuadratureRule& rule) {
  if (!(q_star > 0.0)) throw validation_error("nonlinearity_moments: q_star must be positive");
  if (k_max == 0 || k_max > 16)
    throw validation_error("nonlinearity_moments: order must lie in [1, 16]");
  const double scale = std::sqrt(q_star);
  const std::size_t n = rule.nodes.size();
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double fp = a.derivative(scale * rule.nodes[i]);
    if (!std::isfinite(fp))
      throw numeric_error("nonlinearity_moments: derivative is non-finite at a node");
    sq[i] = fp * fp;
  }
  MomentSeries ms;
  ms.kind = moment_kind::nonlinearity;
  ms.moments.resize(k_max);
  std::vector<double> pw(n, 1.0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      pw[i] *= sq[i];
      acc += static_cast<long double>(rule.weights[i]) * pw[i];
    }
    const double mu = static_cast<double>(acc);
    if (!std::isfinite(mu)) throw numeric_error("nonlinearity_moments: divergent moment integral");
    ms.moments[k - 1] = mu;
  }
  return ms;
}

MomentSeries nonlinearity_moments(const Activation& a, double q_star, std::size_t k_max) {
  const QuadratureRule& rule = a.kinked() ? grid_rule() : gauss_rule();
  return nonlinearity_moments(a, q_star, k_max, rule);
}

std::complex<double> m_transform_from_moments(const MomentSeries& ms, std::complex<double> z) {
  double radius = 1.0;
  for (std::size_t k = 1; k <= ms.moments.size(); ++k) {
    const double mk = std::fabs(ms.moments[k - 1]);
    if (mk > 0.0) radius = std::max(radius, std::pow(mk, 1.0 / static_cast<double>(k)));
  }
  if (std::abs(z) < 2.0 * radius)
    throw numeric_error("m_transform_from_moments: |z| inside the truncation guard radius");
  const std::complex<double> inv = 1.0 / z;
  std::complex<double> out = 0.0;
  std::complex<double> p = 1.0;
  for (double mk : ms.moments) {
    p *= inv;
    out += mk * p;
  }
  return out;
}

std::complex<double> m_transform_d2(const Activation& a, double q_star, std::complex<double> z,
                                    std::size_t k_max) {
  return m_transform_from_moments(nonlinearity_moments(a, q_star, k_max), z);
}

std::vector<double> s_transform_from_moments(const MomentSeries& ms, std::size_t order) {
  if (order == 0 || order > 8)
    throw validation_error("s_transform_from_moments: order must lie in [1, 8]");
  if (ms.moments.size() < order)
    throw validation_error("s_transform_from_moments: need at least `order` moments");
  if (std::fabs(ms.moments[0]) < 1e-12)
    throw numeric_error("s_transform_from_moments: degenerate series, first moment vanishes");

  // M(z) as a power series in w = 1/z: A(w) = Sum m_k w^k, then revert to get
  // the functional inverse B and read S off S(w) = (1 + w) B(w) / w.
  std::vector<double> a(order + 1, 0.0);
  for (std::size_t k = 1; k <= order; ++k) a[k] = ms.moments[k - 1];
  const std::vector<double> b = series_revert(a);
  std::vector<double> s(order, 0.0);
  for (std::size_t k = 0; k < order; ++k) s[k] = b[k + 1] + (k >= 1 ? b[k] : 0.0);
  return s;
}

MomentSeries moments_from_s(const std::vector<double>& s, std::size_t k_max) {
  if (k_max == 0 || k_max > 8) throw validation_error("moments_from_s: order must lie in [1, 8]");
  if (s.size() < k_max) throw validation_error("moments_from_s: need at least `k_max` coefficients");
  if (std::fabs(s[0]) < 1e-12)
    throw numeric_error("moments_from_s: degenerate transform, leading coefficient vanishes");
  // B(w) = w S(w) / (1 + w), then revert B to recover the moment series.
  std::vector<double> b(k_max + 1, 0.0);
  for (std::size_t j = 1; j <= k_max; ++j) b[j] = s[j - 1] - b[j - 1];
  const std::vector<double> a = series_revert(b);
  MomentSeries ms;
  ms.kind = moment_kind::matrix;
  ms.moments.assign(a.begin() + 1, a.end());
  return ms;
}

double ks_distance(const EmpiricalSpectrum& s, const std::function<double(double)>& cdf) {
  if (s.eigenvalues.empty()) throw validation_error("ks_distance: empty spectrum");
  std::vector<double> asc(s.eigenvalues);
  std::sort(asc.begin(), asc.end());
  const double n = static_cast<double>(asc.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < asc.size(); ++i) {
    const double f = cdf(asc[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n;
    const double lo = static_cast<double>(i) / n;
    worst = std::max({worst, std::fabs(hi - f), std::fabs(f - lo)});
  }
  return worst;
}

double ks_distance(const EmpiricalSpectrum& s, const SpectralDensity& d) {
  return ks_distance(s, [&d](double x) { return density_cdf(d, x); });
}

}  // namespace actnorm

#include "actnorm/hermite.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "actnorm/errors.hpp"

namespace actnorm {

double HermiteExpansion::tail_energy() const {
  long double sum = 0.0L;
  for (std::size_t n = 2; n < coefficients.size(); ++n)
    sum += static_cast<long double>(coefficients[n]) * coefficients[n];
  return static_cast<double>(sum);
}

double hermite_poly(int n, double x) {
  if (n < 0) throw validation_error("hermite order must be nonnegative");
  if (n > 64)
    throw validation_error("hermite order " + std::to_string(n) +
                           " exceeds the overflow-guarded cap 64");
  if (n == 0) return 1.0;
  double h_prev = 1.0, h_cur = x;
  for (int k = 1; k < n; ++k) {
    const double h_next = x * h_cur - k * h_prev;
    h_prev = h_cur;
    h_cur = h_next;
  }
  return h_cur;
}

HermiteExpansion expand(const Activation& a, int k, const QuadratureRule& rule) {
  if (k < 0 || k > 64)
    throw validation_error("expansion order " + std::to_string(k) + " out of range [0, 64]");
  if (rule.order < 2 * k)
    throw validation_error("quadrature order " + std::to_string(rule.order) +
                           " too low for expansion order " + std::to_string(k) +
                           " (need at least 2K)");

  HermiteExpansion e;
  e.truncation_order = k;
  e.source_activation = a.name;

  // Accumulate against the orthonormal recurrence
  // p_{n+1} = (x p_n - sqrt(n) p_{n-1}) / sqrt(n+1), which keeps the basis
  // values O(1) in the oscillatory region instead of n!-sized.
  std::vector<long double> acc(k + 1, 0.0L);
  std::vector<long double> sqrt_n(k + 2);
  for (int n = 0; n <= k + 1; ++n) sqrt_n[n] = std::sqrt(static_cast<long double>(n));

  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const long double x = rule.nodes[i];
    const long double wf =
        static_cast<long double>(rule.weights[i]) * a.value(rule.nodes[i]);
    long double p_prev = 0.0L, p_cur = 1.0L;
    acc[0] += wf;
    for (int n = 0; n < k; ++n) {
      const long double p_next = (x * p_cur - sqrt_n[n] * p_prev) / sqrt_n[n + 1];
      p_prev = p_cur;
      p_cur = p_next;
      acc[n + 1] += wf * p_cur;
    }
  }
  e.coefficients.resize(k + 1);
  for (int n = 0; n <= k; ++n) e.coefficients[n] = static_cast<double>(acc[n]);
  return e;
}

HermiteExpansion project_to_H(const HermiteExpansion& e) {
  HermiteExpansion out = e;
  if (out.coefficients.size() < 3)
    throw numeric_error("projection onto orders >= 2 needs an expansion of order >= 2");
  out.coefficients[0] = 0.0;
  out.coefficients[1] = 0.0;
  const double scale = std::sqrt(out.tail_energy());
  if (scale < 1e-12)
    throw numeric_error("degenerate projection: '" + e.source_activation +
                        "' has no content above the affine part");
  for (double& c : out.coefficients) c /= scale;
  return out;
}

double evaluate(const HermiteExpansion& e, double x) {
  long double sum = e.coefficients.empty() ? 0.0L : e.coefficients[0];
  long double p_prev = 0.0L, p_cur = 1.0L;
  for (std::size_t n = 1; n < e.coefficients.size(); ++n) {
    const long double p_next =
        (static_cast<long double>(x) * p_cur - std::sqrt(static_cast<long double>(n - 1)) * p_prev) /
        std::sqrt(static_cast<long double>(n));
    p_prev = p_cur;
    p_cur = p_next;
    sum += e.coefficients[n] * p_cur;
  }
  return static_cast<double>(sum);
}

void write_csv(const HermiteExpansion& e, std::ostream& os) {
  os << "n,f_n\n";
  for (std::size_t n = 0; n < e.coefficients.size(); ++n) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", e.coefficients[n]);
    os << n << "," << buf << "\n";
  }
}

}  // namespace actnorm

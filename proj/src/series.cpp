#include "actnorm/series.hpp"

#include <cmath>

#include "actnorm/errors.hpp"

namespace actnorm {

std::vector<double> series_multiply(const std::vector<double>& a, const std::vector<double>& b,
                                    std::size_t max_order) {
  std::vector<double> c(max_order + 1, 0.0);
  for (std::size_t i = 0; i < a.size() && i <= max_order; ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size() && i + j <= max_order; ++j) c[i + j] += a[i] * b[j];
  }
  return c;
}

std::vector<double> series_revert(const std::vector<double>& a) {
  const std::size_t k = a.empty() ? 0 : a.size() - 1;
  if (k < 1 || a[0] != 0.0 || a[1] == 0.0)
    throw numeric_error("series reversion needs a[0] = 0 and a[1] != 0");

  std::vector<double> b(k + 1, 0.0);
  b[1] = 1.0 / a[1];
  for (std::size_t n = 2; n <= k; ++n) {
    // Solve [w^n] A(B(w)) = 0 for b[n]: the j=1 term contributes a[1]*b[n],
    // every higher power of B only involves b[1..n-1].
    std::vector<double> b_pow(b.begin(), b.begin() + n);  // B mod w^n, b[n] unknown
    b_pow.resize(n + 1, 0.0);
    std::vector<double> cur = b_pow;  // B^1
    double acc = 0.0;
    for (std::size_t j = 2; j <= n; ++j) {
      cur = series_multiply(cur, b_pow, n);
      acc += a[j] * cur[n];
    }
    b[n] = -acc / a[1];
  }
  return b;
}

std::vector<double> series_divide_one_plus_w(const std::vector<double>& a) {
  std::vector<double> q(a.size(), 0.0);
  double carry = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    q[j] = a[j] - carry;
    carry = q[j];
  }
  return q;
}

}  // namespace actnorm

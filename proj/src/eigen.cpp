#include "actnorm/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actnorm/errors.hpp"

namespace actnorm {

namespace {

double hypot2(double a, double b) { return std::hypot(a, b); }

}  // namespace

Tridiagonal householder_tridiagonalize(Matrix a) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw validation_error("tridiagonalize needs a square matrix");
  Tridiagonal t;
  t.diag.assign(n, 0.0);
  t.offdiag.assign(n > 0 ? n - 1 : 0, 0.0);
  if (n == 0) return t;
  if (n == 1) {
    t.diag[0] = a(0, 0);
    return t;
  }

  // Classic symmetric Householder reduction working on the lower triangle.
  std::vector<double> e(n, 0.0);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t l = i - 1;
    double scale = 0.0, h = 0.0;
    if (l > 0) {
      for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
      if (scale == 0.0) {
        e[i] = a(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = f >= 0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          e[j] = g / h;
          f += e[j] * a(i, j);
        }
        double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = a(i, j);
          e[j] = g = e[j] - hh * f;
          for (std::size_t k = 0; k <= j; ++k) a(j, k) -= f * e[k] + g * a(i, k);
        }
      }
    } else {
      e[i] = a(i, l);
    }
    t.diag[i] = h;
  }
  t.diag[0] = 0.0;
  e[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) t.diag[i] = a(i, i);
  for (std::size_t i = 1; i < n; ++i) t.offdiag[i - 1] = e[i];
  return t;
}

std::vector<double> ql_eigenvalues(Tridiagonal t) {
  const std::size_t n = t.diag.size();
  std::vector<double>& d = t.diag;
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = t.offdiag[i - 1];

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (++iter == 50)
          throw numeric_error("tridiagonal QL failed to converge for eigenvalue index " +
                              std::to_string(l));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = hypot2(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0 ? std::fabs(r) : -std::fabs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (long long i = static_cast<long long>(m) - 1; i >= static_cast<long long>(l); --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = hypot2(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
  return ql_eigenvalues(householder_tridiagonalize(m));
}

}  // namespace actnorm

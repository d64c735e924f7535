#include "actnorm/quadrature.hpp"

#include <cfloat>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "actnorm/eigen.hpp"
#include "actnorm/errors.hpp"

namespace actnorm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Weights via the Christoffel identity w = 1 / sum_k p_k(x)^2 over the
// orthonormal recurrence. Extreme nodes of large rules produce sums near
// e^{x^2/2}, which overflows double around order 60; long double carries
// through order 512.
double christoffel_weight(double x, int order) {
  long double p_prev = 0.0L, p_cur = 1.0L, sum = 1.0L;
  for (int k = 0; k + 1 < order; ++k) {
    long double p_next =
        (static_cast<long double>(x) * p_cur - std::sqrt(static_cast<long double>(k)) * p_prev) /
        std::sqrt(static_cast<long double>(k + 1));
    p_prev = p_cur;
    p_cur = p_next;
    sum += p_cur * p_cur;
  }
  long double w = 1.0L / sum;
  if (w < static_cast<long double>(DBL_TRUE_MIN)) return DBL_TRUE_MIN;
  return static_cast<double>(w);
}

}  // namespace

QuadratureRule build_rule(int order) {
  if (order < 2 || order > 512)
    throw validation_error("quadrature order " + std::to_string(order) +
                           " out of range [2, 512]");

  // Nodes are the eigenvalues of the Jacobi matrix of the probabilists'
  // Hermite recurrence: zero diagonal, offdiagonal sqrt(k).
  Tridiagonal jacobi;
  jacobi.diag.assign(order, 0.0);
  jacobi.offdiag.resize(order - 1);
  for (int k = 1; k < order; ++k) jacobi.offdiag[k - 1] = std::sqrt(static_cast<double>(k));

  QuadratureRule rule;
  rule.order = order;
  rule.nodes = ql_eigenvalues(std::move(jacobi));

  // Odd orders put a node at the origin; nudge it off so piecewise-defined
  // integrands never get evaluated exactly at their seam.
  for (double& x : rule.nodes)
    if (std::fabs(x) < 1e-11) x = 1e-12;

  rule.weights.resize(order);
  long double total = 0.0L;
  for (int i = 0; i < order; ++i) {
    rule.weights[i] = christoffel_weight(rule.nodes[i], order);
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w = static_cast<double>(w / total);
  return rule;
}

const QuadratureRule& gauss_rule(int order) {
  static std::map<int, QuadratureRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

const QuadratureRule& grid_rule() {
  static const QuadratureRule rule = [] {
    constexpr double kLimit = 12.0;
    constexpr double kSeam = 1e-13;
    constexpr int kPanelsPerSide = 1 << 18;

    QuadratureRule r;
    const double pieces[2][2] = {{-kLimit, -kSeam}, {kSeam, kLimit}};
    for (const auto& piece : pieces) {
      const double a = piece[0], b = piece[1];
      const double h = (b - a) / kPanelsPerSide;
      for (int i = 0; i <= kPanelsPerSide; ++i) {
        const double x = a + h * i;
        const double trap = (i == 0 || i == kPanelsPerSide) ? 0.5 : 1.0;
        r.nodes.push_back(x);
        r.weights.push_back(trap * h * std::exp(-0.5 * x * x) / std::sqrt(kTwoPi));
      }
    }
    r.order = static_cast<int>(r.nodes.size());
    return r;
  }();
  return rule;
}

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v))
      throw numeric_error("integrand not finite at node " + std::to_string(rule.nodes[i]));
    acc += static_cast<long double>(rule.weights[i]) * v;
  }
  return static_cast<double>(acc);
}

}  // namespace actnorm

#include "actnorm/normalizer.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

#include "actnorm/errors.hpp"

namespace actnorm {

namespace {

struct RawCoefficients {
  double alpha, beta, gamma2, eta, m2, m4;
};

RawCoefficients integrate_all(const Activation& a, double sigma, const QuadratureRule& rule) {
  // Single pass over the nodes; the pieces of gamma^2 are assembled from
  // moments so f is evaluated once per node.
  long double alpha = 0, beta = 0, eta = 0, m2 = 0, m4 = 0, fz = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z = rule.nodes[i];
    const long double w = rule.weights[i];
    const double f = a.value(sigma * z);
    const double fp = a.derivative(sigma * z);
    if (!std::isfinite(f) || !std::isfinite(fp))
      throw numeric_error("activation '" + a.name + "' not finite at " +
                          std::to_string(sigma * z));
    const long double fp2 = static_cast<long double>(fp) * fp;
    alpha += w * fp;
    beta += w * f;
    eta += w * f * f;
    fz += w * f * z;
    m2 += w * fp2;
    m4 += w * fp2 * fp2;
  }
  RawCoefficients out;
  out.alpha = static_cast<double>(alpha);
  out.beta = static_cast<double>(beta);
  out.eta = static_cast<double>(eta);
  out.m2 = static_cast<double>(m2);
  out.m4 = static_cast<double>(m4);
  // gamma^2 = int (f - alpha*sigma*z - beta)^2 = eta - 2 alpha sigma <fz>
  //           - beta^2 + alpha^2 sigma^2   (using <z>=0, <z^2>=1 moments of
  //           the rule, which hold to 1e-12)
  out.gamma2 = static_cast<double>(eta - 2.0L * alpha * sigma * fz + alpha * alpha * sigma * sigma -
                                   beta * beta);
  return out;
}

double max_discrepancy(const RawCoefficients& a, const RawCoefficients& b) {
  double d = 0.0;
  d = std::max(d, std::fabs(a.alpha - b.alpha));
  d = std::max(d, std::fabs(a.beta - b.beta));
  d = std::max(d, std::fabs(std::sqrt(std::fabs(a.gamma2)) - std::sqrt(std::fabs(b.gamma2))));
  d = std::max(d, std::fabs(a.m2 - b.m2));
  d = std::max(d, std::fabs(a.m4 - b.m4));
  return d;
}

}  // namespace

NormalizationCoefficients compute_coefficients(const Activation& a,
                                               const NormalizationContext& ctx,
                                               const QuadratureRule& rule) {
  if (ctx.sigma_w <= 0 || ctx.sigma_x <= 0 || ctx.q_star <= 0)
    throw validation_error("normalization context fields must be strictly positive");
  const double sigma = ctx.sigma_w * ctx.sigma_x;

  RawCoefficients raw = integrate_all(a, sigma, rule);
  NormalizationCoefficients c;
  c.activation = a.name;
  if (a.kinked()) {
    // Polynomial rules stall on kinked integrands; the grid value wins and the
    // disagreement is surfaced.
    RawCoefficients grid = integrate_all(a, sigma, grid_rule());
    c.method_discrepancy = max_discrepancy(raw, grid);
    c.discrepancy_flagged = c.method_discrepancy > 1e-6;
    raw = grid;
  }

  c.alpha = raw.alpha;
  c.beta = raw.beta;
  if (raw.gamma2 < 1e-20)
    throw numeric_error("activation '" + a.name +
                        "' is affine under the Gaussian measure; nothing to normalize");
  c.gamma = std::sqrt(raw.gamma2);
  c.xi = raw.alpha * raw.alpha;
  c.eta = raw.eta;
  c.m2 = raw.m2;
  c.m4 = raw.m4;
  return c;
}

const NormalizationCoefficients& compute_coefficients(const Activation& a,
                                                      const NormalizationContext& ctx) {
  using Key = std::tuple<std::string, std::uint64_t, std::uint64_t, std::uint64_t>;
  static std::map<Key, NormalizationCoefficients> cache;
  static std::mutex mutex;

  auto bits = [](double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof(u));
    return u;
  };
  Key key{a.name, bits(ctx.sigma_w), bits(ctx.sigma_x), bits(ctx.q_star)};

  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    // Always hand the Gauss rule down; the kinked path inside re-integrates on
    // the grid rule itself, so passing the grid here would make the recorded
    // method comparison vacuous.
    it = cache.emplace(key, compute_coefficients(a, ctx, gauss_rule())).first;
  }
  return it->second;
}

Activation normalize(const Activation& a, const NormalizationCoefficients& c) {
  if (c.activation != a.name)
    throw validation_error("coefficients were computed for '" + c.activation +
                           "', not '" + a.name + "'");
  if (!(c.gamma > 0)) throw validation_error("normalization needs gamma > 0");

  Activation out;
  out.name = a.name + "_normalized";
  const double alpha = c.alpha, beta = c.beta, gamma = c.gamma;
  auto f = a.value;
  auto fp = a.derivative;
  out.value = [f, alpha, beta, gamma](double x) { return (f(x) - alpha * x - beta) / gamma; };
  out.derivative = [fp, alpha, gamma](double x) { return (fp(x) - alpha) / gamma; };
  out.kinks = a.kinks;
  if (a.lipschitz_hint)
    out.lipschitz_hint = (*a.lipschitz_hint + std::fabs(alpha)) / gamma;
  return out;
}

std::pair<double, double> recompute_diagnostics(const Activation& a_h) {
  const QuadratureRule& rule = a_h.kinked() ? grid_rule() : gauss_rule();
  const double mean_grad = integrate(rule, a_h.derivative);
  const double eta = integrate(rule, [&a_h](double z) {
    const double v = a_h.value(z);
    return v * v;
  });
  return {mean_grad * mean_grad, eta};
}

const std::vector<ReferenceRow>& reference_coefficients() {
  // Columns keyed by meaning (see header); the m2_squared and m4 cells for
  // softplus and sigmoid are reproduced exactly as published even though
  // direct integration disagrees with three of them; the table diff makes the
  // disagreement visible rather than papering over it.
  static const std::vector<ReferenceRow> rows = {
      {"relu", 0.398942, 0.5, 0.301405, 0.25, 0.5},
      {"softplus", 0.806059, 0.5, 0.146678, 0.0680713, 0.131594},
      {"sigmoid", 0.5, 0.206621, 0.0262071, 0.0680713, 0.131594},
      {"tanh", 0.0, 0.605706, 0.165576, 0.21567, 0.341509},
      {"gelu", 0.325735, 0.5, 0.323942, 0.239622, 0.497433},
      {"swish", 0.206621, 0.5, 0.251164, 0.144007, 0.286581},
      {"elu", 0.160521, 0.761578, 0.197932, 0.44636, 0.594411},
      {"xtanh", 0.605706, 0.0, 0.625308, 0.749437, 1.01452},
  };
  return rows;
}

}  // namespace actnorm

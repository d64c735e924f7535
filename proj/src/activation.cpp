#include "actnorm/activation.hpp"

#include <cmath>
#include <map>
#include <string>

#include "actnorm/errors.hpp"

namespace actnorm {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)
constexpr double kInvSqrtPi = 0.56418958354775628695;    // 1/sqrt(pi)

double sigmoid(double x) {
  // One-sided exp keeps the intermediate bounded for large |x|.
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

// The registry's gelu is x * Phi(sqrt(2) x) = x (1 + erf x)/2; this is the
// variant whose Gaussian moments the built-in reference table reproduces.
double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x)); }
double gelu_prime(double x) {
  return 0.5 * (1.0 + std::erf(x)) + x * std::exp(-x * x) * kInvSqrtPi;
}

std::map<std::string, Activation> make_registry() {
  std::map<std::string, Activation> reg;
  auto add = [&reg](Activation a) { reg.emplace(a.name, std::move(a)); };

  add({"relu", [](double x) { return x > 0 ? x : 0.0; },
       [](double x) { return x > 0 ? 1.0 : 0.0; },  // derivative at 0 defined as 0
       {0.0},
       1.0});
  add({"softplus", softplus, sigmoid, {}, 1.0});
  add({"sigmoid", sigmoid, [](double x) { const double s = sigmoid(x); return s * (1.0 - s); },
       {},
       0.25});
  add({"tanh", [](double x) { return std::tanh(x); },
       [](double x) { const double t = std::tanh(x); return 1.0 - t * t; }, {}, 1.0});
  add({"gelu", gelu, gelu_prime, {}, std::nullopt});
  add({"swish", [](double x) { return x * sigmoid(x); },
       [](double x) {
         const double s = sigmoid(x);
         return s + x * s * (1.0 - s);
       },
       {},
       std::nullopt});
  add({"elu", [](double x) { return x > 0 ? x : std::expm1(x); },
       [](double x) { return x > 0 ? 1.0 : std::exp(x); }, {0.0}, 1.0});
  add({"xtanh", [](double x) { return x * std::tanh(x); },
       [](double x) {
         const double t = std::tanh(x);
         return t + x * (1.0 - t * t);
       },
       {},
       std::nullopt});
  add({"tilted_relu", [](double x) { return std::fabs(x) - kSqrt2OverPi; },
       [](double x) { return x >= 0 ? 1.0 : -1.0; }, {0.0}, 1.0});
  add({"abs", [](double x) { return std::fabs(x); },
       [](double x) { return x >= 0 ? 1.0 : -1.0; }, {0.0}, 1.0});
  return reg;
}

const std::map<std::string, Activation>& registry() {
  static const std::map<std::string, Activation> reg = make_registry();
  return reg;
}

}  // namespace

const Activation& get(const std::string& name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) {
    std::string valid;
    for (const auto& [key, unused] : reg) {
      if (!valid.empty()) valid += ", ";
      valid += key;
    }
    throw validation_error("unknown activation '" + name + "'; valid names are: " + valid);
  }
  return it->second;
}

const std::vector<std::string>& activation_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [key, unused] : registry()) out.push_back(key);
    return out;
  }();
  return names;
}

std::vector<double> evaluate_elementwise(const Activation& a, const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw numeric_error("non-finite input component at index " + std::to_string(i));
    out[i] = a.value(v[i]);
  }
  return out;
}

}  // namespace actnorm

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace actnorm {

/// Scalar activation with its analytic first derivative. `kinks` lists the
/// points where value or derivative is not smooth; quadrature and
/// normalization code switch to the piecewise grid rule when it is nonempty.
struct Activation {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::vector<double> kinks;
  std::optional<double> lipschitz_hint;

  bool kinked() const { return !kinks.empty(); }
};

/// Look up a registry activation by name. Throws validation_error listing the
/// valid names on a miss.
const Activation& get(const std::string& name);

/// All registry names, registration order.
const std::vector<std::string>& activation_names();

/// Componentwise application; throws numeric_error on non-finite input.
std::vector<double> evaluate_elementwise(const Activation& a, const std::vector<double>& v);

}  // namespace actnorm

#include <cmath>
#include <numbers>

#include "actnorm/activation.hpp"
#include "actnorm/errors.hpp"
#include "actnorm/normalizer.hpp"
#include "actnorm/quadrature.hpp"
#include "doctest.h"

using namespace actnorm;

TEST_CASE("relu coefficients have closed forms") {
  const NormalizationCoefficients& c = compute_coefficients(get("relu"));
  const double beta = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(c.alpha == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(c.beta == doctest::Approx(beta).epsilon(1e-9));
  CHECK(c.gamma == doctest::Approx(std::sqrt(0.25 - beta * beta)).epsilon(1e-8));
  CHECK(c.xi == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(c.eta == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(c.m2 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(c.m4 == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("normalized relu is the shifted absolute value up to scale") {
  const Activation& relu = get("relu");
  const NormalizationCoefficients& c = compute_coefficients(relu);
  const Activation hat = normalize(relu, c);
  const double shift = std::sqrt(2.0 / std::numbers::pi);
  // Slope of the normalized function is 1/(2 gamma); undo it.
  const double scale = 2.0 * c.gamma;
  for (int i = 0; i <= 100; ++i) {
    const double x = -5.0 + 0.1 * i;
    CHECK(std::fabs(scale * hat.value(x) - (std::fabs(x) - shift)) < 1e-8);
  }
}

TEST_CASE("normalization zeroes the bias shift and restores unit variance") {
  for (const char* name : {"relu", "tanh", "gelu", "elu", "swish"}) {
    const Activation& a = get(name);
    const Activation hat = normalize(a, compute_coefficients(a));
    const auto [xi, eta] = recompute_diagnostics(hat);
    CHECK(std::fabs(xi) < 1e-12);
    CHECK(eta == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("normalized xtanh spot value") {
  const Activation& xt = get("xtanh");
  const Activation hat = normalize(xt, compute_coefficients(xt));
  // (0 - 0.605706...)/0.625308... with the slope term vanishing by symmetry.
  CHECK(hat.value(0.0) == doctest::Approx(-0.96865).epsilon(1e-4));
  CHECK(hat.value(1.0) == doctest::Approx(hat.value(-1.0)).epsilon(1e-9));
}

TEST_CASE("kinked activations flag the method disagreement") {
  CHECK(compute_coefficients(get("relu")).discrepancy_flagged);
  CHECK(compute_coefficients(get("abs")).discrepancy_flagged);
  const NormalizationCoefficients& smooth = compute_coefficients(get("tanh"));
  CHECK_FALSE(smooth.discrepancy_flagged);
  CHECK(smooth.method_discrepancy == 0.0);
}

TEST_CASE("coefficient cache returns a stable reference") {
  const NormalizationCoefficients& a = compute_coefficients(get("gelu"));
  const NormalizationCoefficients& b = compute_coefficients(get("gelu"));
  CHECK(&a == &b);
}

TEST_CASE("context scaling changes the coefficients") {
  NormalizationContext wide;
  wide.sigma_w = 2.0;
  const NormalizationCoefficients base = compute_coefficients(get("tanh"), wide, gauss_rule(256));
  const NormalizationCoefficients unit =
      compute_coefficients(get("tanh"), NormalizationContext{}, gauss_rule(256));
  CHECK(base.alpha < unit.alpha);  // wider inputs saturate tanh, shrinking the mean slope
  NormalizationContext bad;
  bad.q_star = -1.0;
  CHECK_THROWS_AS(compute_coefficients(get("tanh"), bad, gauss_rule(256)), validation_error);
}

TEST_CASE("normalize validates its inputs") {
  const NormalizationCoefficients& c = compute_coefficients(get("relu"));
  CHECK_THROWS_AS(normalize(get("tanh"), c), validation_error);
}

TEST_CASE("reference table shape and anchor rows") {
  const auto& rows = reference_coefficients();
  REQUIRE(rows.size() == 8);
  const auto find = [&](const std::string& n) {
    for (const auto& r : rows)
      if (r.name == n) return r;
    FAIL("missing row " << n);
    return rows[0];
  };
  const ReferenceRow relu = find("relu");
  CHECK(relu.mean == doctest::Approx(0.398942).epsilon(1e-6));
  CHECK(relu.slope == doctest::Approx(0.5));
  CHECK(relu.m2_squared == doctest::Approx(0.25));
  const ReferenceRow xtanh = find("xtanh");
  CHECK(xtanh.mean == doctest::Approx(0.605706).epsilon(1e-6));
  CHECK(xtanh.slope == 0.0);
}

TEST_CASE("computed coefficients disagree with exactly three published cells") {
  // The published table carries a digit transposition in the softplus second
  // derivative moment and duplicates the softplus pair into the sigmoid row;
  // direct integration pins the correct values.
  std::vector<std::string> mismatches;
  for (const ReferenceRow& row : reference_coefficients()) {
    const NormalizationCoefficients& c = compute_coefficients(get(row.name));
    const auto cell = [&](const char* what, double computed, double published) {
      if (std::fabs(computed - published) > 1e-4)
        mismatches.push_back(row.name + std::string(".") + what);
    };
    cell("slope", c.alpha, row.slope);
    cell("mean", c.beta, row.mean);
    cell("gamma", c.gamma, row.gamma);
    cell("m2_squared", c.m2 * c.m2, row.m2_squared);
    cell("m4", c.m4, row.m4);
  }
  REQUIRE(mismatches.size() == 3);
  CHECK(mismatches[0] == "softplus.m2_squared");
  CHECK(mismatches[1] == "sigmoid.m2_squared");
  CHECK(mismatches[2] == "sigmoid.m4");

  // The true values behind the three defective cells.
  const NormalizationCoefficients& softplus = compute_coefficients(get("softplus"));
  CHECK(softplus.m2 * softplus.m2 == doctest::Approx(0.086071258681024193).epsilon(1e-7));
  const NormalizationCoefficients& sigmoid = compute_coefficients(get("sigmoid"));
  CHECK(sigmoid.m2 * sigmoid.m2 == doctest::Approx(0.0020102885384128797).epsilon(1e-7));
  CHECK(sigmoid.m4 == doctest::Approx(0.002285651286678948).epsilon(1e-7));
}

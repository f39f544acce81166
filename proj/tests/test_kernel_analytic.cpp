#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rfdyn/kernel_analytic.hpp"

using namespace rfdyn;

namespace {

constexpr double kPi = std::numbers::pi;

double weighted(double power, const std::function<double(double)>& f) {
  QuadratureOptions opts;
  opts.node_count = 64;
  opts.abs_tol = 1e-13;
  return integrate_sphere_weight(f, power, opts);
}

bool close(double value, double reference, double rel, double abs_floor = 1e-13) {
  return std::abs(value - reference) <= std::max(rel * std::abs(reference), abs_floor);
}

}  // namespace

TEST_SUITE("kernel_analytic") {

TEST_CASE("profile identities") {
  CHECK(kernel_profile(1.0) == kPi);
  CHECK(kernel_profile(0.0) == 1.0);
  CHECK(kernel_profile(-1.0) == 0.0);
  CHECK(kernel_profile(1.0 + 1e-13) == kPi);
  CHECK_THROWS_AS(kernel_profile(1.01), std::domain_error);
  double prev = -1.0;
  for (double t = -1.0; t <= 1.0; t += 0.01) {
    const double v = kernel_profile(t);
    CHECK(v >= 0.0);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("Monte Carlo kernel on the diagonal and for indicators") {
  const int d = 6;
  const auto relu = sample_features(4, FeatureKind::Relu, d, 200000);
  const Eigen::VectorXd x = Eigen::VectorXd::Unit(d, 0);
  const auto diag = kernel_mc(x, x, relu);
  CHECK(std::abs(diag.mean - 1.0 / (2.0 * d)) <= 5.0 * diag.std_error);
  CHECK(diag.mean == doctest::Approx(relu_profile_scale(d) * kernel_profile(1.0)).epsilon(0.02));

  const auto ind = sample_features(5, FeatureKind::Indicator, d, 200000);
  const auto half = kernel_mc(x, x, ind);
  CHECK(std::abs(half.mean - 0.5) <= 5.0 * half.std_error);
  CHECK_THROWS_AS(kernel_mc(x, x, FeatureSet{}), std::invalid_argument);
}

TEST_CASE("Monte Carlo kernel follows the profile shape") {
  const int d = 5;
  const auto feats = sample_features(8, FeatureKind::Relu, d, 100000);
  const Eigen::VectorXd x = Eigen::VectorXd::Unit(d, 0);
  std::vector<double> emp, prof, se;
  for (double t : {-0.9, -0.5, 0.0, 0.3, 0.7, 0.95}) {
    Eigen::VectorXd xp = Eigen::VectorXd::Zero(d);
    xp(0) = t;
    xp(1) = std::sqrt(1.0 - t * t);
    const auto v = kernel_mc(x, xp, feats);
    emp.push_back(v.mean);
    se.push_back(v.std_error);
    prof.push_back(kernel_profile(t));
  }
  const double s = fit_profile_scale(emp, prof);
  CHECK(s == doctest::Approx(relu_profile_scale(d)).epsilon(0.03));
  for (std::size_t i = 0; i < emp.size(); ++i) CHECK(std::abs(emp[i] - s * prof[i]) <= 5.0 * se[i] + 1e-12);
  CHECK_THROWS_AS(fit_profile_scale({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_profile_scale({1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("sphere areas and multiplicities") {
  CHECK(sphere_area(0) == doctest::Approx(2.0));
  CHECK(sphere_area(1) == doctest::Approx(2.0 * kPi));
  CHECK(sphere_area(2) == doctest::Approx(4.0 * kPi));
  CHECK(sphere_area(3) == doctest::Approx(2.0 * kPi * kPi));
  CHECK(harmonic_multiplicity(3, 0) == 1);
  for (int n = 1; n <= 10; ++n) CHECK(harmonic_multiplicity(3, n) == static_cast<std::uint64_t>(2 * n + 1));
  CHECK(harmonic_multiplicity(4, 3) == 16);  // (n + 1)^2 on S^3
  CHECK(harmonic_multiplicity(10, 1) == 10);
  CHECK(harmonic_multiplicity(10, 2) == 54);
  CHECK(harmonic_multiplicity(10, 3) == 210);
  CHECK_THROWS_AS(harmonic_multiplicity(2, 1), std::invalid_argument);
  CHECK(reciprocal_gamma(0.0) == 0.0);
  CHECK(reciprocal_gamma(-3.0) == 0.0);
  CHECK(reciprocal_gamma(4.0) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("Gegenbauer and Legendre values") {
  CHECK(gegenbauer(5, 3, 0.3) == doctest::Approx(-1.7775000000000005).epsilon(1e-13));
  CHECK(gegenbauer(10, 4, -0.7) == doctest::Approx(26.855999999999995).epsilon(1e-13));
  CHECK(gegenbauer(3, 5, 0.9) == doctest::Approx(-0.04114124999999985).epsilon(1e-12));
  CHECK(gegenbauer(7, 6, 0.25) == doctest::Approx(3.535995483398436).epsilon(1e-13));
  CHECK(legendre(3, 4, 0.3) == doctest::Approx(0.07293749999999993).epsilon(1e-12));
  for (int d : {3, 5, 10})
    for (int n = 0; n <= 8; ++n) {
      CHECK(legendre(d, n, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(legendre(d, n, -1.0)) == doctest::Approx(1.0).epsilon(1e-12));
    }
  const auto seq = gegenbauer_sequence(7, 6, 0.25);
  CHECK(seq.size() == 7);
  CHECK(seq.back() == gegenbauer(7, 6, 0.25));
}

TEST_CASE("Legendre orthogonality and norm under the sphere weight") {
  for (int d : {3, 5, 10}) {
    const double p = 0.5 * (d - 3);
    const double ratio = sphere_area(d - 2) / sphere_area(d - 1);
    for (int a = 0; a <= 5; ++a)
      for (int b = 0; b <= 5; ++b) {
        const double v = ratio * weighted(p, [&](double t) { return legendre(d, a, t) * legendre(d, b, t); });
        if (a == b)
          CHECK(close(v, 1.0 / static_cast<double>(harmonic_multiplicity(d, a)), 1e-10));
        else
          CHECK(std::abs(v) <= 1e-12);
      }
  }
}

TEST_CASE("Gegenbauer integral closed forms match quadrature") {
  for (int d : {3, 5, 10})
    for (int n = 0; n <= 8; ++n) {
      const double w = weighted(0.5 * (d - 2), [&](double t) { return gegenbauer(d, n, t); });
      const double arc = weighted(0.5 * (d - 3),
                                  [&](double t) { return t * (kPi - std::acos(t)) * gegenbauer(d, n, t); });
      const double ker = weighted(0.5 * (d - 3), [&](double t) { return kernel_profile(t) * gegenbauer(d, n, t); });
      CHECK(close(gegenbauer_weight_integral(d, n), w, 1e-8, 1e-12));
      CHECK(close(gegenbauer_arc_integral(d, n), arc, 1e-8, 1e-12));
      CHECK(close(gegenbauer_kernel_integral(d, n), ker, 1e-8, 1e-12));
    }
}

TEST_CASE("published degree factors: zeros and the successive ratio") {
  for (int d : {3, 4, 7, 10}) {
    for (int n = 3; n <= 15; n += 2) {
      CHECK(stage_factor(d, n) == 0.0);
      CHECK(analytic_eigenvalue(d, n) == 0.0);
    }
    for (int n : {0, 1, 2, 4, 6}) {
      const double ratio = stage_product(d, n + 2) / stage_product(d, n);
      CHECK(close(ratio, stage_ratio(d, n), 1e-12, 0.0));
    }
  }
  CHECK(analytic_eigenvalue(3, 0) == doctest::Approx(1.5 * kPi).epsilon(1e-14));
}

TEST_CASE("operator spectrum") {
  CHECK(operator_eigenvalue(3, 0) == doctest::Approx(1.1780972450961724644).epsilon(1e-13));
  CHECK(operator_eigenvalue(3, 0) == doctest::Approx(3.0 * kPi / 8.0).epsilon(1e-13));
  CHECK(operator_eigenvalue(3, 1) == doctest::Approx(kPi / 6.0).epsilon(1e-13));
  CHECK(operator_eigenvalue(3, 2) == doctest::Approx(0.073631077818510779026).epsilon(1e-12));
  CHECK(operator_eigenvalue(3, 4) == doctest::Approx(0.002045307717180854973).epsilon(1e-12));
  CHECK(operator_eigenvalue(5, 2) == doctest::Approx(0.030679615757712824594).epsilon(1e-12));
  CHECK(operator_eigenvalue(10, 0) == doctest::Approx(1.0511845150385943789).epsilon(1e-12));
  CHECK(operator_eigenvalue(10, 1) == doctest::Approx(0.15707963267948966192).epsilon(1e-12));
  CHECK(operator_eigenvalue(10, 2) == doctest::Approx(0.008687475330897474206).epsilon(1e-12));
  for (int d : {3, 5, 10}) {
    for (int n = 3; n <= 9; n += 2) {
      CHECK(operator_eigenvalue(d, n) == 0.0);
      CHECK(std::abs(quadrature_eigenvalue(d, n)) <= 1e-13);
    }
    for (int n = 0; n <= 8; ++n)
      CHECK(close(quadrature_eigenvalue(d, n) * sphere_area(d - 2), operator_eigenvalue(d, n), 1e-9, 1e-15));
    // even degrees n >= 2 fall off by the factor (n - 1)^2 / (n + d + 1)^2 per step
    for (int n = 2; n <= 8; n += 2)
      CHECK(close(operator_eigenvalue(d, n + 2) / operator_eigenvalue(d, n),
                  std::pow(n - 1.0, 2) / std::pow(n + d + 1.0, 2), 1e-12, 0.0));
  }
  CHECK_THROWS_AS(quadrature_eigenvalue(3, 2, 16), std::invalid_argument);
  CHECK_THROWS_AS(operator_eigenvalue(2, 0), std::invalid_argument);
}

TEST_CASE("stage-like analytic spectrum") {
  const auto spec = analytic_spectrum(10, 6, 0.5);
  REQUIRE(spec.eigenvalues.size() == 7);
  CHECK(spec.eigenvalues[2] == doctest::Approx(0.5 * operator_eigenvalue(10, 2)));
  CHECK(spec.area == doctest::Approx(sphere_area(9)));
  const auto flat = spec.flattened(1 + 10 + 54 + 5);
  REQUIRE(flat.size() == 70);
  CHECK(flat[0] == spec.eigenvalues[0]);
  for (int i = 1; i <= 10; ++i) CHECK(flat[i] == spec.eigenvalues[1]);
  for (int i = 11; i < 65; ++i) CHECK(flat[i] == spec.eigenvalues[2]);
  // every degree-wise drop exceeds the spread within a degree, which is zero
  for (std::size_t i = 1; i < flat.size(); ++i) CHECK(flat[i] <= flat[i - 1]);
  CHECK(flat[10] / flat[11] > 10.0);
}

}

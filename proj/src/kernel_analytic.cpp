#include "rfdyn/kernel_analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rfdyn {

namespace {

constexpr double kPi = std::numbers::pi;

void require_dim(int d, const char* where) {
  if (d < 3) throw std::invalid_argument(std::string(where) + ": dimension must be >= 3");
}

void require_order(int d, int n, const char* where) {
  require_dim(d, where);
  if (n < 0) throw std::invalid_argument(std::string(where) + ": order must be >= 0");
  // keeps every Gamma argument below the overflow threshold of tgamma
  if (n + d > 160) throw std::invalid_argument(std::string(where) + ": order too large");
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

double kernel_profile(double t) {
  if (!(std::abs(t) <= 1.0 + 1e-12)) throw std::domain_error("kernel_profile: |t| > 1");
  t = std::clamp(t, -1.0, 1.0);
  return std::sqrt(1.0 - t * t) + t * (kPi - std::acos(t));
}

MonteCarloValue kernel_mc(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& x_prime, const FeatureSet& feats) {
  const auto m = feats.count();
  if (m == 0) throw std::invalid_argument("kernel_mc: empty feature set");
  const Eigen::VectorXd prod = eval_features(feats, x).cwiseProduct(eval_features(feats, x_prime));
  MonteCarloValue out;
  out.mean = prod.mean();
  if (m > 1) {
    const double var = (prod.array() - out.mean).square().sum() / static_cast<double>(m - 1);
    out.std_error = std::sqrt(var / static_cast<double>(m));
  }
  return out;
}

double fit_profile_scale(const std::vector<double>& empirical, const std::vector<double>& profile) {
  if (empirical.size() != profile.size() || empirical.empty())
    throw std::invalid_argument("fit_profile_scale: need equal-length, nonempty inputs");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    num += empirical[i] * profile[i];
    den += profile[i] * profile[i];
  }
  if (den == 0.0) throw std::invalid_argument("fit_profile_scale: profile identically zero");
  return num / den;
}

double relu_profile_scale(int dim) {
  if (dim < 1) throw std::invalid_argument("relu_profile_scale: dimension must be >= 1");
  return 1.0 / (2.0 * kPi * dim);
}

double sphere_area(int k) {
  if (k < 0) throw std::invalid_argument("sphere_area: k must be >= 0");
  const double half = 0.5 * (k + 1);
  return 2.0 * std::pow(kPi, half) / std::tgamma(half);
}

double reciprocal_gamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

std::uint64_t harmonic_multiplicity(int d, int n) {
  require_dim(d, "harmonic_multiplicity");
  if (n < 0) throw std::invalid_argument("harmonic_multiplicity: order must be >= 0");
  if (n == 0) return 1;
  // binom(n + d - 3, n - 1), built incrementally so every partial product is exact
  const std::uint64_t top = static_cast<std::uint64_t>(n + d - 3);
  const std::uint64_t k = static_cast<std::uint64_t>(n - 1);
  std::uint64_t binom = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t factor = top - k + i;
    if (binom > std::numeric_limits<std::uint64_t>::max() / factor)
      throw std::overflow_error("harmonic_multiplicity: overflow");
    binom = binom * factor / i;
  }
  const std::uint64_t scaled = binom * static_cast<std::uint64_t>(2 * n + d - 2);
  return scaled / static_cast<std::uint64_t>(n);
}

std::vector<double> gegenbauer_sequence(int d, int max_order, double t) {
  require_dim(d, "gegenbauer");
  if (max_order < 0) throw std::invalid_argument("gegenbauer: order must be >= 0");
  std::vector<double> c(static_cast<std::size_t>(max_order) + 1);
  c[0] = 1.0;
  if (max_order >= 1) c[1] = (d - 2.0) * t;
  for (int n = 2; n <= max_order; ++n) {
    c[n] = ((2.0 * n + d - 4.0) * t * c[n - 1] - (n + d - 4.0) * c[n - 2]) / n;
  }
  return c;
}

double gegenbauer(int d, int n, double t) { return gegenbauer_sequence(d, n, t).back(); }

double legendre_conversion(int d, int n) {
  require_order(d, n, "legendre_conversion");
  const double alpha = 0.5 * (d - 2);
  const double bracket = sphere_area(d - 2) * static_cast<double>(harmonic_multiplicity(d, n)) *
                         std::pow(2.0, 3 - d) * kPi * std::tgamma(n + d - 2.0) /
                         (sphere_area(d - 1) * (n + alpha) * std::tgamma(n + 1.0) *
                          std::pow(std::tgamma(alpha), 2));
  return std::sqrt(bracket);
}

double legendre(int d, int n, double t) { return gegenbauer(d, n, t) / legendre_conversion(d, n); }

double gegenbauer_weight_integral(int d, int n) {
  require_order(d, n, "gegenbauer_weight_integral");
  return std::pow(kPi, 1.5) * std::pow(2.0, n - 2) * (d - 2) * std::tgamma(0.5 * (n + d - 2)) /
         factorial(n) * reciprocal_gamma(0.5 * (1 - n)) * reciprocal_gamma(0.5 * (3 - n)) /
         std::tgamma(0.5 * (n + d + 1));
}

double gegenbauer_arc_integral(int d, int n) {
  require_order(d, n, "gegenbauer_arc_integral");
  const double rg = reciprocal_gamma(0.5 * (3 - n));
  return std::pow(kPi, 1.5) * std::pow(2.0, n - 3) * (d - 2) *
         (static_cast<double>(n) * n + (d - 2.0) * n + 1.0) * std::tgamma(0.5 * (n + d - 2)) /
         ((n + d - 1.0) * factorial(n)) * rg * rg / std::tgamma(0.5 * (n + d + 1));
}

double gegenbauer_kernel_integral(int d, int n) {
  require_order(d, n, "gegenbauer_kernel_integral");
  const double rg = reciprocal_gamma(0.5 * (3 - n));
  return std::pow(kPi, 1.5) * d * (d - 2) * std::pow(2.0, n - 2) * std::tgamma(0.5 * (n + d - 2)) /
         (std::pow(n + d - 1.0, 2) * factorial(n)) * rg * rg / std::tgamma(0.5 * (n + d - 1));
}

double stage_constant(int d) {
  require_dim(d, "stage_constant");
  const double ratio = std::tgamma(0.5 * (d - 2)) * std::tgamma(d - 1.0) /
                       (std::tgamma(0.5 * (d - 1)) * std::tgamma(0.5 * d));
  return std::pow(2.0, 0.5 * (d - 5)) * std::pow(kPi, 0.25 * (2 * d + 3)) * d * (d - 2) *
         std::sqrt(ratio);
}

double stage_factor(int d, int n) {
  require_order(d, n, "stage_factor");
  const double rg = reciprocal_gamma(0.5 * (3 - n));
  return std::pow(2.0, n - 0.5) * std::tgamma(0.5 * (n + d - 2)) /
         (factorial(n + d - 3) * factorial(n + d - 1)) * rg * rg / std::tgamma(0.5 * (n + d - 1));
}

double stage_product(int d, int n) { return stage_constant(d) * stage_factor(d, n); }

double analytic_eigenvalue(int d, int n) {
  require_order(d, n, "analytic_eigenvalue");
  if (n == 0) {
    return 2.0 * std::sqrt(kPi) * d * std::tgamma(0.5 * d) /
           (std::tgamma(static_cast<double>(d)) * std::tgamma(0.5 * (d - 1)));
  }
  return stage_product(d, n);
}

double stage_ratio(int d, int n) {
  require_order(d, n, "stage_ratio");
  const double a = n + d - 1.0;
  return std::pow(n - 1.0, 2) / (a * a * (n + d + 1.0) * (n + d));
}

double operator_eigenvalue(int d, int n) {
  require_order(d, n, "operator_eigenvalue");
  // P_n = C_n / C_n(1); C_n(1) = Gamma(n + d - 2) / (n! Gamma(d - 2))
  const double c_at_one = std::tgamma(n + d - 2.0) / (factorial(n) * std::tgamma(d - 2.0));
  return sphere_area(d - 2) / sphere_area(d - 1) * gegenbauer_kernel_integral(d, n) / c_at_one;
}

double quadrature_eigenvalue(int d, int n, int node_count) {
  require_order(d, n, "quadrature_eigenvalue");
  if (node_count < 64) throw std::invalid_argument("quadrature_eigenvalue: node_count must be >= 64");
  const double conversion = legendre_conversion(d, n);
  QuadratureOptions opts;
  opts.node_count = node_count;
  const double integral = integrate_sphere_weight(
      [&](double t) { return kernel_profile(t) * gegenbauer(d, n, t) / conversion; }, 0.5 * (d - 3), opts);
  return integral / sphere_area(d - 1);
}

std::vector<double> AnalyticSpectrum::flattened(std::size_t count) const {
  std::vector<double> out;
  for (std::size_t n = 0; n < eigenvalues.size(); ++n) {
    const auto reps = std::min<std::uint64_t>(multiplicities[n], count);
    out.insert(out.end(), static_cast<std::size_t>(reps), eigenvalues[n]);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  if (out.size() > count) out.resize(count);
  return out;
}

AnalyticSpectrum analytic_spectrum(int d, int max_degree, double scale) {
  require_order(d, max_degree, "analytic_spectrum");
  AnalyticSpectrum spec;
  spec.dim = d;
  spec.constant = stage_constant(d);
  spec.area = sphere_area(d - 1);
  spec.area_lower = sphere_area(d - 2);
  for (int n = 0; n <= max_degree; ++n) {
    spec.eigenvalues.push_back(scale * operator_eigenvalue(d, n));
    spec.multiplicities.push_back(harmonic_multiplicity(d, n));
    spec.degree_factors.push_back(stage_factor(d, n));
  }
  return spec;
}

}  // namespace rfdyn

#pragma once

// Closed-form ReLU kernel on the sphere, Gegenbauer/Legendre families, and the
// spectrum of the associated integral operator.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rfdyn/features.hpp"
#include "rfdyn/quadrature.hpp"

namespace rfdyn {

enum class KernelKind { ReluClosedForm, MonteCarlo };

struct KernelSpec {
  KernelKind kind = KernelKind::ReluClosedForm;
  int dim = 3;
  int mc_feature_count = 0;
  /// Multiplier turning the closed-form profile into E_b phi(x;b) phi(x';b).
  double scale = 1.0;
};

/// k(t) = sqrt(1 - t^2) + t (pi - arccos t). Inputs within 1e-12 outside
/// [-1, 1] are clipped; anything further out throws std::domain_error.
double kernel_profile(double t);

struct MonteCarloValue {
  double mean = 0.0;
  double std_error = 0.0;
};

/// (1/m) sum_k phi(x; b_k) phi(x'; b_k) with its standard error.
MonteCarloValue kernel_mc(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& x_prime,
                          const FeatureSet& feats);

/// Least-squares scalar s minimizing sum (empirical_i - s * profile_i)^2.
double fit_profile_scale(const std::vector<double>& empirical,
                         const std::vector<double>& profile);

/// Exact scale for ReLU features with directions uniform on S^{d-1}:
/// E_b relu(b.x) relu(b.x') = k(x.x') / (2 pi d).
double relu_profile_scale(int dim);

/// Area of the unit sphere S^k embedded in R^{k+1}.
double sphere_area(int k);

/// 1 / Gamma(x), exactly 0 at the poles x = 0, -1, -2, ...
double reciprocal_gamma(double x);

/// Dimension of degree-n spherical harmonics on S^{d-1}.
std::uint64_t harmonic_multiplicity(int d, int n);

/// Gegenbauer C_n^{(d-2)/2}(t) by the three-term recurrence.
double gegenbauer(int d, int n, double t);
/// All of C_0..C_max_order at t.
std::vector<double> gegenbauer_sequence(int d, int max_order, double t);

/// Factor between Gegenbauer and Legendre: C_n(t) = conversion * P_n(t).
double legendre_conversion(int d, int n);
/// Legendre polynomial of dimension d, normalized so that P_n(1) = 1.
double legendre(int d, int n, double t);

/// Closed forms of int (1-t^2)^{(d-2)/2} C_n dt, int (1-t^2)^{(d-3)/2}
/// t (pi - arccos t) C_n dt and int (1-t^2)^{(d-3)/2} k(t) C_n dt.
double gegenbauer_weight_integral(int d, int n);
double gegenbauer_arc_integral(int d, int n);
double gegenbauer_kernel_integral(int d, int n);

/// Prefactor C(d) and degree factor Lambda(d, n) of the published eigenvalue
/// formula, and their product.
double stage_constant(int d);
double stage_factor(int d, int n);
double stage_product(int d, int n);

/// Published eigenvalue: the closed-form lambda_0 for n = 0 and
/// C(d) Lambda(d, n) for n >= 1. Odd n >= 3 give exactly 0.
double analytic_eigenvalue(int d, int n);

/// Closed-form ratio lambda_{n+2} / lambda_n implied by Lambda(d, n).
double stage_ratio(int d, int n);

/// Eigenvalue of f -> int k(x.x') f(x') dpi(x') on harmonics of degree n,
/// with pi the uniform probability measure (Funk-Hecke applied to the
/// Gegenbauer kernel integral).
double operator_eigenvalue(int d, int n);

/// (1/Omega_{d-1}) int k(t) P_n(t) (1-t^2)^{(d-3)/2} dt by adaptive quadrature.
double quadrature_eigenvalue(int d, int n, int node_count = 64);

struct AnalyticSpectrum {
  int dim = 0;
  std::vector<double> eigenvalues;                // index = degree n
  std::vector<std::uint64_t> multiplicities;      // N(d, n)
  double constant = 0.0;                          // C(d)
  std::vector<double> degree_factors;             // Lambda(d, n)
  double area = 0.0;                              // Omega_{d-1}
  double area_lower = 0.0;                        // Omega_{d-2}

  /// Eigenvalues repeated by multiplicity, descending, truncated to `count`.
  std::vector<double> flattened(std::size_t count) const;
};

/// Operator spectrum for degrees 0..max_degree, scaled by `scale`.
AnalyticSpectrum analytic_spectrum(int d, int max_degree, double scale = 1.0);

}  // namespace rfdyn

#pragma once

// Generalization-bound formulas for the gradient-flow solution and empirical
// estimates of the constants they depend on.

#include <Eigen/Dense>

#include "rfdyn/features.hpp"
#include "rfdyn/spectral_flow.hpp"

namespace rfdyn {

/// d(lambda, t) = (1 - exp(-lambda^2 t / (m n))) / lambda, and 0 at lambda = 0.
double damping(double lambda, double t, double m, double n);

struct CappedRate {
  double value = 0.0;
  bool degenerate = false;  // lambda_hat_n == 0, the 1/lambda_hat_n cap is dropped
};

/// min{sqrt(t), lambda_hat_{floor(sqrt n)+1} t, 1 / lambda_hat_n} with 1-based
/// indices into the descending vector `scaled`. Entries past the end count as 0.
CappedRate capped_rate(double t, const Eigen::VectorXd& scaled, Eigen::Index n);

struct DampingProfile {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double time = 0.0;
  Eigen::VectorXd factors;  // d(lambda_i, t)
  double sup_bound = 0.0;   // sqrt(t / (m n))
  CappedRate rate;
};

DampingProfile damping_profile(const SpectralDecomposition& dec, double t);

/// Constants shared by the Hoeffding-type bounds.
struct RoughConstants {
  double n = 1.0;
  double m = 1.0;
  double M = 1.0;             // sup |f*| and sup |phi|
  double delta = 0.1;
  double f_norm = 1.0;        // ||f*||_{l2}
  double feat_norm_sq = 1.0;  // E_b ||phi(.; b)||^2_{l2}
};

/// (norm_sq + sqrt(2 M^2 log(2/delta) / count))^{1/2}; count may be infinite.
double hoeffding_factor(double norm_sq, double M, double delta, double count);

/// Product of the data-side and feature-side Hoeffding factors.
double rough_factor(const RoughConstants& c);

/// Bound on ||f_t||_{l2}: rough_factor * sqrt(t).
double norm_bound_rough(double t, const RoughConstants& c);

/// Bound on ||f_s - f*||: err_at_t + rough_factor * sqrt(s - t). Requires s >= t.
double error_growth_bound(double t, double s, const RoughConstants& c, double err_at_t);

/// Same bound anchored at a reference pair: rough_factor * sqrt(t - t0) + epsilon.
double error_growth_bound_from(double t, double t0, double epsilon, const RoughConstants& c);

struct FinerBound {
  double stated = 0.0;      // 3 e^{-2 l1^2 t} + (5C + 1 + 2 sqrt(C) M d(t))^2 n^{-1/2}
  double proof_form = 0.0;  // e^{-l1^2 t} + 3C/sqrt(n) + (2C+1) n^{-1/4} + 2 sqrt(C) M d(t) n^{-1/4}
  CappedRate rate;
};

/// Throws std::domain_error when C / sqrt(n) >= 1.
FinerBound finer_bound(double t, double C, double M_kernel, const Eigen::VectorXd& scaled, Eigen::Index n);

struct RegimeWindow {
  double t_low = 0.0;            // c2 log n
  double t_high = 0.0;           // c2 n^{1/4}
  double c1 = 0.0;               // 2 + 5C + 2 sqrt(C) C' c2 M
  double c2 = 0.0;               // 1 / (4 lambda_hat_1^2)
  double level_squared = 0.0;    // c1 / sqrt(n), bound on the squared error
  double level_unsquared = 0.0;  // c1 n^{-1/4}, bound on the error itself
  bool nonempty = false;
};

RegimeWindow regime_window(double C, double C_prime, double M_kernel, double lambda1_hat, double n);

struct AssumptionReport {
  // individual discrepancies
  double norm_gap = 0.0;         // | ||y||^2 / n - 1 |
  double projection_gap = 0.0;   // | u_1^T y / sqrt(n) - 1 |
  double eigenfunction_gap = 0.0;  // || g_1 - psi_1 ||
  double orthogonality_gap = 0.0;  // max |<g_i, g_j> - delta_ij|, 2 <= i, j <= floor(sqrt n)
  double training_identity_gap = 0.0;  // same inner products on the training points

  double C_measured = 0.0;  // sqrt(n) * max of the four gaps above
  double C_prime = 0.0;     // max_k lambda_hat_k sqrt(k), k <= floor(sqrt n) + 1
  double M_bound = 0.0;
  double M_kernel = 0.0;    // sqrt(mean ||phi(x; B)||^2 / n)
  double delta = 0.1;
  double epsilon = 0.0;     // filled by the runner from the trajectory minimum
  double t0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  Eigen::Index concentration_index = 0;

  bool hypothesis_holds(double n) const;
};

/// Estimates the constants of the finer bound. `train_points` are the points
/// behind the decomposition; inner products of g_i use `mc_points`.
AssumptionReport measure_assumptions(const SpectralDecomposition& dec, const Eigen::VectorXd& y,
                                     const FeatureSet& feats, const TargetSpec& target,
                                     const Dataset& train_points, const Dataset& mc_points,
                                     double delta = 0.1);

}  // namespace rfdyn

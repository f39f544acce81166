#pragma once

// Closed-form gradient-flow trajectories of
//   min_a ||Phi a - y||^2 / (2 m n),   da/dt = -Phi^T (Phi a - y) / (m n),
// started from a(0) = 0, evaluated through the SVD of Phi.

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rfdyn/features.hpp"

namespace rfdyn {

/// Sentinel for t = infinity (the minimum-norm least-squares solution).
inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// Relative cutoff below which singular values are treated as zero.
inline constexpr double kRankTolerance = 1e-12;

struct SpectralDecomposition {
  Eigen::MatrixXd U;                // n x r
  Eigen::VectorXd singular_values;  // length r, descending; sub-threshold values set to 0
  Eigen::MatrixXd V;                // m x r
  Eigen::VectorXd scaled_values;    // singular_values / n
  Eigen::Index rows = 0;            // n
  Eigen::Index cols = 0;            // m
  Eigen::Index rank = 0;            // number of singular values above threshold
  double threshold = 0.0;           // absolute cutoff used for the rank decision

  Eigen::Index size() const { return singular_values.size(); }
};

/// Thin SVD with r = min(n, m). Throws std::invalid_argument on non-finite input.
SpectralDecomposition decompose(const FeatureMatrix& phi, double rank_tolerance = kRankTolerance);

/// Per-mode weights (1 - exp(-lambda_i^2 t / (m n))) / lambda_i, zero for
/// dropped modes. t = kInfiniteTime gives 1 / lambda_i.
Eigen::VectorXd mode_weights(const SpectralDecomposition& dec, double t);

/// Coefficients of a(t) in the V basis, i.e. V^T a(t).
Eigen::VectorXd modal_coefficients(const SpectralDecomposition& dec,
                                   const Eigen::VectorXd& projections, double t);

/// a(t) = sum_i (1 - exp(-lambda_i^2 t / (m n))) / lambda_i (u_i^T y) v_i.
Eigen::VectorXd coefficients_at(const SpectralDecomposition& dec, const Eigen::VectorXd& y, double t);

/// f(x) = sum_k a_k phi(x; b_k); predict_rows evaluates every row of `points`.
double predict(const Eigen::VectorXd& coeffs, const FeatureSet& feats,
               const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd predict_rows(const Eigen::VectorXd& coeffs, const FeatureSet& feats,
                             const Eigen::MatrixXd& points);

struct TrajectorySnapshot {
  double time = 0.0;
  double train_error = 0.0;      // ||Phi a - y||^2 / (2n)
  double test_error = 0.0;       // RMS of f_t - f* over the test points
  double param_norm = 0.0;       // ||a(t)||
  double prediction_norm = 0.0;  // RMS of f_t over the test points
  std::optional<Eigen::VectorXd> coefficients;
};

/// Snapshots at every time in `times` (ascending, >= 0, infinity allowed last).
/// f* on the test points comes from `target`, or from the stored targets of
/// `test_points` when the target is a label table.
std::vector<TrajectorySnapshot> errors_on_grid(const SpectralDecomposition& dec, const Eigen::VectorXd& y,
                                               const FeatureSet& feats, const TargetSpec& target,
                                               const Dataset& test_points, const std::vector<double>& times,
                                               bool keep_coefficients = false);

struct EnergyProfile {
  Eigen::VectorXd cumulative;      // c_p = sum_{i <= p} (u_i^T y)^2 / ||y||^2
  Eigen::Index concentration = 0;  // smallest p (1-based) with c_p >= level
};

EnergyProfile spectral_energy_profile(const SpectralDecomposition& dec, const Eigen::VectorXd& y,
                                      double level = 0.99);

/// 10^start .. 10^stop with `per_decade` points per decade, optionally
/// followed by the infinity sentinel.
std::vector<double> log_time_grid(double start_exponent, double stop_exponent, int per_decade,
                                  bool append_infinity = false);

}  // namespace rfdyn

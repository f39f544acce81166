#pragma once

// Gram and kernel matrices, symmetric spectra, and Marchenko-Pastur analysis
// of the smallest Gram eigenvalue.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rfdyn/features.hpp"
#include "rfdyn/kernel_analytic.hpp"

namespace rfdyn {

/// G = Phi Phi^T / (n m).
Eigen::MatrixXd gram_matrix(const FeatureMatrix& phi);

/// K_ij = scale * k(x_i . x_j) / n with k the closed-form ReLU profile.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points, double scale = 1.0);

/// Full spectrum of a symmetric matrix, descending. Throws when
/// max |A - A^T| exceeds `symmetry_tol` times max(1, max |A|).
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& A, double symmetry_tol = 1e-10);

/// Nonzero spectrum of Phi Phi^T / (n m), taken from the smaller of the two
/// Gram products (the nonzero eigenvalues of both coincide). Descending.
Eigen::VectorXd gram_spectrum(const FeatureMatrix& phi);

/// Smallest eigenvalue of the min(n, m)-sized Gram product.
double smallest_gram_eigenvalue(const FeatureMatrix& phi);

/// (lambda_-, lambda_+) = ((1 - sqrt g)^2, (1 + sqrt g)^2).
std::pair<double, double> mp_edges(double gamma);

/// Continuous part sqrt((l+ - l)(l - l-)) / (2 pi gamma l) on (l-, l+), 0 elsewhere.
double mp_density(double gamma, double lambda);

/// Point mass at 0, max(0, 1 - 1/gamma).
double mp_atom(double gamma);

/// Integral of the continuous part over the support, by quadrature.
double mp_continuous_mass(double gamma);

/// (1 - sqrt g)^2 for g <= 1 and (1 - sqrt(1/g))^2 for g > 1.
double mp_shape(double gamma);

/// c * mp_shape(gamma).
double predict_smallest(double gamma, double c);

struct Calibration {
  double c = 0.0;
  double residual = 0.0;  // sum of squared residuals at the fitted c
  std::size_t used = 0;   // measurements with nonzero shape
};

/// Least-squares c for lambda = c * shape(gamma). Points at gamma = 1 carry no
/// information and are ignored; throws when nothing else is left.
Calibration calibrate_c(const std::vector<std::pair<double, double>>& measurements);

struct MPModel {
  double gamma = 1.0;
  double lower = 0.0;
  double upper = 4.0;
  double atom_mass = 0.0;
  double calibration = 0.0;

  double density(double lambda) const { return mp_density(gamma, lambda); }
  double predict() const { return predict_smallest(gamma, calibration); }
};

MPModel mp_model(double gamma, double calibration = 0.0);

enum class SpectrumSource { Gram, KernelMatrix, Analytic };

std::string to_string(SpectrumSource source);

struct SymmetricSpectrum {
  SpectrumSource source = SpectrumSource::Gram;
  Eigen::VectorXd eigenvalues;  // descending
  double gamma = 0.0;
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  int d = 0;
};

struct TailSummary {
  double min_eigenvalue = 0.0;
  Eigen::Index below_threshold = 0;  // count below 1e-6 * lambda_1
};

struct SpectrumComparison {
  std::vector<double> gram_vs_kernel;      // per-rank |g - k| / |k|
  std::vector<double> gram_vs_analytic;    // per-rank |g - a| / |a|
  std::vector<double> kernel_vs_analytic;
  double analytic_fit = 0.0;  // least-squares scalar s with gram ~ s * analytic, diagnostic only
  TailSummary gram_tail;
  TailSummary kernel_tail;
};

double relative_difference(double value, double reference);

/// Compares the top `top` eigenvalues of the three spectra. The analytic
/// spectrum is expanded by multiplicity; pass it already scaled.
SpectrumComparison spectrum_report(const SymmetricSpectrum& gram, const SymmetricSpectrum& kernel,
                                   const AnalyticSpectrum& analytic, std::size_t top = 20);

TailSummary tail_summary(const Eigen::VectorXd& eigenvalues);

}  // namespace rfdyn

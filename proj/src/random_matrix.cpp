#include "rfdyn/random_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "rfdyn/quadrature.hpp"

namespace rfdyn {

Eigen::MatrixXd gram_matrix(const FeatureMatrix& phi) {
  if (phi.size() == 0) throw std::invalid_argument("gram_matrix: empty feature matrix");
  const double nm = static_cast<double>(phi.rows()) * static_cast<double>(phi.cols());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(phi.rows(), phi.rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0 / nm);
  return g.selfadjointView<Eigen::Lower>();
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points, double scale) {
  if (points.rows() == 0) throw std::invalid_argument("kernel_matrix: no points");
  const Eigen::Index n = points.rows();
  const Eigen::MatrixXd cosines = points * points.transpose();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = scale * kernel_profile(std::clamp(cosines(i, j), -1.0, 1.0)) / static_cast<double>(n);
      k(i, j) = v;
      k(j, i) = v;
    }
  return k;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& A, double symmetry_tol) {
  if (A.rows() != A.cols()) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
  if (A.size() == 0) throw std::invalid_argument("symmetric_eigenvalues: empty matrix");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * scale)
    throw std::invalid_argument("symmetric_eigenvalues: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric_eigenvalues: solver failed");
  return solver.eigenvalues().reverse();
}

Eigen::VectorXd gram_spectrum(const FeatureMatrix& phi) {
  if (phi.size() == 0) throw std::invalid_argument("gram_spectrum: empty feature matrix");
  if (phi.rows() <= phi.cols()) return symmetric_eigenvalues(gram_matrix(phi));
  const double nm = static_cast<double>(phi.rows()) * static_cast<double>(phi.cols());
  Eigen::MatrixXd small = Eigen::MatrixXd::Zero(phi.cols(), phi.cols());
  small.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose(), 1.0 / nm);
  return symmetric_eigenvalues(Eigen::MatrixXd(small.selfadjointView<Eigen::Lower>()));
}

double smallest_gram_eigenvalue(const FeatureMatrix& phi) {
  const Eigen::VectorXd ev = gram_spectrum(phi);
  return ev(ev.size() - 1);
}

namespace {

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || std::isinf(gamma)) throw std::invalid_argument("gamma must be positive and finite");
}

}  // namespace

std::pair<double, double> mp_edges(double gamma) {
  require_gamma(gamma);
  const double r = std::sqrt(gamma);
  return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
}

double mp_density(double gamma, double lambda) {
  const auto [lo, hi] = mp_edges(gamma);
  if (!(lambda > lo && lambda < hi) || lambda <= 0.0) return 0.0;
  return std::sqrt((hi - lambda) * (lambda - lo)) / (2.0 * std::numbers::pi * gamma * lambda);
}

double mp_atom(double gamma) {
  require_gamma(gamma);
  return std::max(0.0, 1.0 - 1.0 / gamma);
}

double mp_continuous_mass(double gamma) {
  const auto [lo, hi] = mp_edges(gamma);
  // lambda = lo + (hi - lo)(1 - cos theta)/2 removes both square-root edges
  const double half = 0.5 * (hi - lo);
  return integrate(
      [&](double theta) {
        const double lambda = lo + half * (1.0 - std::cos(theta));
        if (lambda <= 0.0) return 0.0;
        const double s = std::sin(theta);
        return half * half * s * s / (2.0 * std::numbers::pi * gamma * lambda);
      },
      0.0, std::numbers::pi);
}

double mp_shape(double gamma) {
  require_gamma(gamma);
  const double r = gamma <= 1.0 ? std::sqrt(gamma) : std::sqrt(1.0 / gamma);
  return (1.0 - r) * (1.0 - r);
}

double predict_smallest(double gamma, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("predict_smallest: calibration must be positive");
  return c * mp_shape(gamma);
}

Calibration calibrate_c(const std::vector<std::pair<double, double>>& measurements) {
  double num = 0.0, den = 0.0;
  Calibration out;
  for (const auto& [gamma, value] : measurements) {
    const double s = mp_shape(gamma);
    if (s == 0.0) continue;
    num += s * value;
    den += s * s;
    ++out.used;
  }
  if (out.used == 0) throw std::invalid_argument("calibrate_c: no measurement away from gamma = 1");
  out.c = num / den;
  for (const auto& [gamma, value] : measurements) {
    const double r = value - out.c * mp_shape(gamma);
    out.residual += r * r;
  }
  return out;
}

MPModel mp_model(double gamma, double calibration) {
  MPModel model;
  model.gamma = gamma;
  std::tie(model.lower, model.upper) = mp_edges(gamma);
  model.atom_mass = mp_atom(gamma);
  model.calibration = calibration;
  return model;
}

std::string to_string(SpectrumSource source) {
  switch (source) {
    case SpectrumSource::Gram: return "gram";
    case SpectrumSource::KernelMatrix: return "kernel-matrix";
    case SpectrumSource::Analytic: return "analytic";
  }
  return "unknown";
}

double relative_difference(double value, double reference) {
  if (reference == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(value - reference) / std::abs(reference);
}

TailSummary tail_summary(const Eigen::VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0) throw std::invalid_argument("tail_summary: empty spectrum");
  TailSummary tail;
  tail.min_eigenvalue = eigenvalues.minCoeff();
  const double cut = 1e-6 * eigenvalues.maxCoeff();
  tail.below_threshold = (eigenvalues.array() < cut).count();
  return tail;
}

SpectrumComparison spectrum_report(const SymmetricSpectrum& gram, const SymmetricSpectrum& kernel,
                                   const AnalyticSpectrum& analytic, std::size_t top) {
  if (gram.eigenvalues.size() == 0 || kernel.eigenvalues.size() == 0 || analytic.eigenvalues.empty())
    throw std::invalid_argument("spectrum_report: empty spectrum");
  if (gram.d != 0 && analytic.dim != 0 && gram.d != analytic.dim)
    throw std::invalid_argument("spectrum_report: dimension mismatch");
  const std::vector<double> flat = analytic.flattened(top);
  const auto limit = [&](Eigen::Index a, std::size_t b) {
    return std::min(static_cast<std::size_t>(a), std::min(b, top));
  };
  SpectrumComparison cmp;
  for (std::size_t i = 0; i < limit(std::min(gram.eigenvalues.size(), kernel.eigenvalues.size()), top); ++i)
    cmp.gram_vs_kernel.push_back(relative_difference(gram.eigenvalues(i), kernel.eigenvalues(i)));
  std::vector<double> g_top, a_top;
  for (std::size_t i = 0; i < limit(gram.eigenvalues.size(), flat.size()); ++i) {
    cmp.gram_vs_analytic.push_back(relative_difference(gram.eigenvalues(i), flat[i]));
    g_top.push_back(gram.eigenvalues(i));
    a_top.push_back(flat[i]);
  }
  for (std::size_t i = 0; i < limit(kernel.eigenvalues.size(), flat.size()); ++i)
    cmp.kernel_vs_analytic.push_back(relative_difference(kernel.eigenvalues(i), flat[i]));
  cmp.analytic_fit = fit_profile_scale(g_top, a_top);
  cmp.gram_tail = tail_summary(gram.eigenvalues);
  cmp.kernel_tail = tail_summary(kernel.eigenvalues);
  return cmp;
}

}  // namespace rfdyn

#include "rfdyn/spectral_flow.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace rfdyn {

SpectralDecomposition decompose(const FeatureMatrix& phi, double rank_tolerance) {
  if (phi.size() == 0) throw std::invalid_argument("decompose: empty matrix");
  if (!phi.allFinite()) throw std::invalid_argument("decompose: non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SpectralDecomposition dec;
  dec.U = svd.matrixU();
  dec.V = svd.matrixV();
  dec.singular_values = svd.singularValues();
  dec.rows = phi.rows();
  dec.cols = phi.cols();
  const double top = dec.singular_values.size() > 0 ? dec.singular_values(0) : 0.0;
  dec.threshold = rank_tolerance * top;
  dec.rank = 0;
  for (Eigen::Index i = 0; i < dec.singular_values.size(); ++i) {
    if (dec.singular_values(i) > dec.threshold && dec.singular_values(i) > 0.0) {
      ++dec.rank;
    } else {
      dec.singular_values(i) = 0.0;
    }
  }
  dec.scaled_values = dec.singular_values / static_cast<double>(dec.rows);
  return dec;
}

Eigen::VectorXd mode_weights(const SpectralDecomposition& dec, double t) {
  if (std::isnan(t) || t < 0.0) throw std::invalid_argument("mode_weights: time must be >= 0");
  const double mn = static_cast<double>(dec.rows) * static_cast<double>(dec.cols);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dec.size());
  for (Eigen::Index i = 0; i < dec.rank; ++i) {
    const double lam = dec.singular_values(i);
    w(i) = std::isinf(t) ? 1.0 / lam : -std::expm1(-lam * lam * t / mn) / lam;
  }
  return w;
}

Eigen::VectorXd modal_coefficients(const SpectralDecomposition& dec, const Eigen::VectorXd& projections,
                                   double t) {
  return mode_weights(dec, t).cwiseProduct(projections);
}

Eigen::VectorXd coefficients_at(const SpectralDecomposition& dec, const Eigen::VectorXd& y, double t) {
  if (y.size() != dec.rows) throw std::invalid_argument("coefficients_at: target length mismatch");
  return dec.V * modal_coefficients(dec, dec.U.transpose() * y, t);
}

double predict(const Eigen::VectorXd& coeffs, const FeatureSet& feats,
               const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (coeffs.size() != feats.count()) throw std::invalid_argument("predict: coefficient length mismatch");
  return eval_features(feats, x).dot(coeffs);
}

Eigen::VectorXd predict_rows(const Eigen::VectorXd& coeffs, const FeatureSet& feats, const Eigen::MatrixXd& points) {
  if (coeffs.size() != feats.count()) throw std::invalid_argument("predict: coefficient length mismatch");
  return build_feature_matrix(points, feats) * coeffs;
}

std::vector<TrajectorySnapshot> errors_on_grid(const SpectralDecomposition& dec, const Eigen::VectorXd& y,
                                               const FeatureSet& feats, const TargetSpec& target,
                                               const Dataset& test_points, const std::vector<double>& times,
                                               bool keep_coefficients) {
  if (test_points.size() == 0) throw std::invalid_argument("errors_on_grid: empty test set");
  if (y.size() != dec.rows) throw std::invalid_argument("errors_on_grid: target length mismatch");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::isnan(times[k]) || times[k] < 0.0) throw std::invalid_argument("errors_on_grid: negative time");
    if (k > 0 && times[k] < times[k - 1]) throw std::invalid_argument("errors_on_grid: times not ascending");
  }
  const Eigen::VectorXd truth = target.kind == TargetKind::ExternalLabels
                                    ? test_points.targets
                                    : eval_targets(target, test_points.points);
  const Eigen::VectorXd proj = dec.U.transpose() * y;
  // test predictions only ever need Phi_test V
  const Eigen::MatrixXd test_modes = build_feature_matrix(test_points.points, feats) * dec.V;
  const double n = static_cast<double>(dec.rows);
  const double n_test = static_cast<double>(test_points.size());

  std::vector<TrajectorySnapshot> out;
  out.reserve(times.size());
  for (double t : times) {
    const Eigen::VectorXd c = modal_coefficients(dec, proj, t);
    const Eigen::VectorXd residual = dec.U * dec.singular_values.cwiseProduct(c) - y;
    const Eigen::VectorXd pred = test_modes * c;
    TrajectorySnapshot snap;
    snap.time = t;
    snap.train_error = residual.squaredNorm() / (2.0 * n);
    snap.test_error = std::sqrt((pred - truth).squaredNorm() / n_test);
    snap.param_norm = c.norm();
    snap.prediction_norm = std::sqrt(pred.squaredNorm() / n_test);
    if (keep_coefficients) snap.coefficients = dec.V * c;
    out.push_back(std::move(snap));
  }
  return out;
}

EnergyProfile spectral_energy_profile(const SpectralDecomposition& dec, const Eigen::VectorXd& y, double level) {
  const double total = y.squaredNorm();
  if (total == 0.0) throw std::invalid_argument("spectral_energy_profile: zero target vector");
  if (y.size() != dec.rows) throw std::invalid_argument("spectral_energy_profile: target length mismatch");
  const Eigen::VectorXd proj = dec.U.transpose() * y;
  EnergyProfile prof;
  prof.cumulative.resize(proj.size());
  double acc = 0.0;
  prof.concentration = proj.size();
  bool found = false;
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    acc += proj(i) * proj(i);
    prof.cumulative(i) = acc / total;
    if (!found && prof.cumulative(i) >= level) {
      prof.concentration = i + 1;
      found = true;
    }
  }
  return prof;
}

std::vector<double> log_time_grid(double start_exponent, double stop_exponent, int per_decade,
                                  bool append_infinity) {
  if (per_decade < 1) throw std::invalid_argument("log_time_grid: per_decade must be >= 1");
  if (stop_exponent < start_exponent) throw std::invalid_argument("log_time_grid: empty range");
  const auto steps = static_cast<long>(std::llround((stop_exponent - start_exponent) * per_decade));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + 2);
  for (long k = 0; k <= steps; ++k)
    grid.push_back(std::pow(10.0, start_exponent + static_cast<double>(k) / per_decade));
  if (append_infinity) grid.push_back(kInfiniteTime);
  return grid;
}

}  // namespace rfdyn

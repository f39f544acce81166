#include "rfdyn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfdyn {

double damping(double lambda, double t, double m, double n) {
  if (!(lambda >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("damping: negative input");
  if (!(m > 0.0) || !(n > 0.0)) throw std::invalid_argument("damping: m and n must be positive");
  if (lambda == 0.0) return 0.0;
  if (std::isinf(t)) return 1.0 / lambda;
  return -std::expm1(-lambda * lambda * t / (m * n)) / lambda;
}

CappedRate capped_rate(double t, const Eigen::VectorXd& scaled, Eigen::Index n) {
  if (!(t >= 0.0)) throw std::invalid_argument("capped_rate: negative time");
  if (n < 1) throw std::invalid_argument("capped_rate: n must be >= 1");
  const auto mid = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
  if (scaled.size() <= mid) throw std::invalid_argument("capped_rate: spectrum shorter than floor(sqrt n) + 1");
  const double lam_mid = scaled(mid);
  const double lam_last = n - 1 < scaled.size() ? scaled(n - 1) : 0.0;
  CappedRate out;
  out.value = std::min(std::sqrt(t), lam_mid * t);
  if (lam_last > 0.0) {
    out.value = std::min(out.value, 1.0 / lam_last);
  } else {
    out.degenerate = true;
  }
  return out;
}

DampingProfile damping_profile(const SpectralDecomposition& dec, double t) {
  DampingProfile prof;
  prof.n = dec.rows;
  prof.m = dec.cols;
  prof.time = t;
  const double n = static_cast<double>(dec.rows), m = static_cast<double>(dec.cols);
  prof.factors.resize(dec.size());
  for (Eigen::Index i = 0; i < dec.size(); ++i) prof.factors(i) = damping(dec.singular_values(i), t, m, n);
  prof.sup_bound = std::sqrt(t / (m * n));
  prof.rate = capped_rate(t, dec.scaled_values, dec.rows);
  return prof;
}

double hoeffding_factor(double norm_sq, double M, double delta, double count) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("hoeffding_factor: delta must lie in (0, 1)");
  if (!(norm_sq >= 0.0) || !(M >= 0.0)) throw std::invalid_argument("hoeffding_factor: negative norm");
  if (!(count > 0.0)) throw std::invalid_argument("hoeffding_factor: count must be positive");
  return std::sqrt(norm_sq + std::sqrt(2.0 * M * M * std::log(2.0 / delta) / count));
}

double rough_factor(const RoughConstants& c) {
  return hoeffding_factor(c.f_norm * c.f_norm, c.M, c.delta, c.n) *
         hoeffding_factor(c.feat_norm_sq, c.M, c.delta, c.m);
}

double norm_bound_rough(double t, const RoughConstants& c) {
  if (!(t >= 0.0)) throw std::invalid_argument("norm_bound_rough: negative time");
  return rough_factor(c) * std::sqrt(t);
}

double error_growth_bound(double t, double s, const RoughConstants& c, double err_at_t) {
  if (!(t >= 0.0)) throw std::invalid_argument("error_growth_bound: negative time");
  if (s < t) throw std::invalid_argument("error_growth_bound: s must not precede t");
  return err_at_t + rough_factor(c) * std::sqrt(s - t);
}

double error_growth_bound_from(double t, double t0, double epsilon, const RoughConstants& c) {
  if (t < t0) throw std::invalid_argument("error_growth_bound_from: t must not precede t0");
  return rough_factor(c) * std::sqrt(t - t0) + epsilon;
}

FinerBound finer_bound(double t, double C, double M_kernel, const Eigen::VectorXd& scaled, Eigen::Index n) {
  if (!(C >= 0.0) || !(M_kernel >= 0.0)) throw std::invalid_argument("finer_bound: negative constant");
  if (scaled.size() == 0) throw std::invalid_argument("finer_bound: empty spectrum");
  const double rn = std::sqrt(static_cast<double>(n));
  if (C / rn >= 1.0) throw std::domain_error("finer_bound: requires C / sqrt(n) < 1");
  FinerBound out;
  out.rate = capped_rate(t, scaled, n);
  const double l1sq = scaled(0) * scaled(0);
  const double n_quarter = std::pow(static_cast<double>(n), -0.25);
  const double growth = 2.0 * std::sqrt(C) * M_kernel * out.rate.value;
  const double bracket = 5.0 * C + 1.0 + growth;
  out.stated = 3.0 * std::exp(-2.0 * l1sq * t) + bracket * bracket / rn;
  out.proof_form = std::exp(-l1sq * t) + 3.0 * C / rn + (2.0 * C + 1.0) * n_quarter + growth * n_quarter;
  return out;
}

RegimeWindow regime_window(double C, double C_prime, double M_kernel, double lambda1_hat, double n) {
  if (!(lambda1_hat > 0.0)) throw std::invalid_argument("regime_window: lambda_hat_1 must be positive");
  if (!(n > 1.0)) throw std::invalid_argument("regime_window: n must exceed 1");
  RegimeWindow w;
  w.c2 = 1.0 / (4.0 * lambda1_hat * lambda1_hat);
  w.c1 = 2.0 + 5.0 * C + 2.0 * std::sqrt(C) * C_prime * w.c2 * M_kernel;
  w.t_low = w.c2 * std::log(n);
  w.t_high = w.c2 * std::pow(n, 0.25);
  w.level_squared = w.c1 / std::sqrt(n);
  w.level_unsquared = w.c1 * std::pow(n, -0.25);
  w.nonempty = w.t_high > w.t_low;
  return w;
}

bool AssumptionReport::hypothesis_holds(double n) const { return C_measured / std::sqrt(n) < 1.0; }

AssumptionReport measure_assumptions(const SpectralDecomposition& dec, const Eigen::VectorXd& y,
                                     const FeatureSet& feats, const TargetSpec& target,
                                     const Dataset& train_points, const Dataset& mc_points, double delta) {
  if (mc_points.size() == 0) throw std::invalid_argument("measure_assumptions: empty Monte Carlo set");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("measure_assumptions: delta must lie in (0, 1)");
  if (y.size() != dec.rows || train_points.size() != dec.rows)
    throw std::invalid_argument("measure_assumptions: size mismatch");
  const double n = static_cast<double>(dec.rows);
  const double rn = std::sqrt(n);
  const auto k_max = static_cast<Eigen::Index>(std::floor(rn));
  const Eigen::Index used = std::max<Eigen::Index>(k_max, 1);
  if (dec.size() < used)
    throw std::invalid_argument("measure_assumptions: too few modes");
  for (Eigen::Index i = 0; i < used; ++i)
    if (!(dec.singular_values(i) > 0.0))
      throw std::domain_error("measure_assumptions: zero singular value among the modes used");

  // orient mode 1 so that u_1^T y >= 0; the pair (u_1, v_1) is only defined up to sign
  const double sign = dec.U.col(0).dot(y) < 0.0 ? -1.0 : 1.0;

  AssumptionReport rep;
  rep.delta = delta;
  rep.norm_gap = std::abs(y.squaredNorm() / n - 1.0);
  rep.projection_gap = std::abs(sign * dec.U.col(0).dot(y) / rn - 1.0);

  // g_i(x) = sqrt(n) / lambda_i v_i^T phi(x; B), evaluated for i = 1..used
  auto g_values = [&](const Eigen::MatrixXd& points) {
    Eigen::MatrixXd g = build_feature_matrix(points, feats) * dec.V.leftCols(used);
    for (Eigen::Index i = 0; i < used; ++i) g.col(i) *= rn / dec.singular_values(i);
    g.col(0) *= sign;
    return g;
  };

  const Eigen::MatrixXd g_mc = g_values(mc_points.points);
  const double n_mc = static_cast<double>(mc_points.size());
  const Eigen::VectorXd psi = target.kind == TargetKind::ExternalLabels ? mc_points.targets
                                                                        : eval_targets(target, mc_points.points);
  rep.eigenfunction_gap = std::sqrt((g_mc.col(0) - psi).squaredNorm() / n_mc);

  auto orth_gap = [&](const Eigen::MatrixXd& g, double count) {
    double gap = 0.0;
    if (used >= 2) {
      const Eigen::MatrixXd inner = g.rightCols(used - 1).transpose() * g.rightCols(used - 1) / count;
      gap = (inner - Eigen::MatrixXd::Identity(used - 1, used - 1)).cwiseAbs().maxCoeff();
    }
    return gap;
  };
  rep.orthogonality_gap = orth_gap(g_mc, n_mc);
  rep.training_identity_gap = orth_gap(g_values(train_points.points), n);

  rep.C_measured = rn * std::max({rep.norm_gap, rep.projection_gap, rep.eigenfunction_gap, rep.orthogonality_gap});

  const Eigen::Index k_prime = std::min<Eigen::Index>(k_max + 1, dec.size());
  for (Eigen::Index k = 0; k < k_prime; ++k)
    rep.C_prime = std::max(rep.C_prime, dec.scaled_values(k) * std::sqrt(static_cast<double>(k + 1)));

  rep.M_bound = std::max(feature_sup_bound(feats.kind, train_points.points), target_sup_bound(target));
  const Eigen::MatrixXd phi_mc = build_feature_matrix(mc_points.points, feats);
  rep.M_kernel = std::sqrt(phi_mc.rowwise().squaredNorm().mean() / n);

  const RegimeWindow w = regime_window(rep.C_measured, rep.C_prime, rep.M_kernel, dec.scaled_values(0), n);
  rep.c1 = w.c1;
  rep.c2 = w.c2;
  rep.concentration_index = spectral_energy_profile(dec, y).concentration;
  return rep;
}

}  // namespace rfdyn

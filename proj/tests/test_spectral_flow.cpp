#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles/ode_oracle.hpp"
#include "rfdyn/features.hpp"
#include "rfdyn/runner.hpp"
#include "rfdyn/spectral_flow.hpp"

using namespace rfdyn;

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_stream(seed, 50);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = normal(rng);
  return a;
}

Eigen::VectorXd gaussian_vector(int n, std::uint64_t seed) { return gaussian_matrix(n, 1, seed).col(0); }

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

struct Instance {
  Dataset train;
  Dataset test;
  FeatureSet feats;
  TargetSpec target;
};

Instance relu_instance(int d, int n, int m, std::uint64_t seed, int test_count = 2000) {
  Instance in;
  in.target = TargetSpec::constant();
  Rng r1 = make_stream(seed, 10), r2 = make_stream(seed, 11);
  in.train = sample_dataset(r1, d, n, in.target);
  in.test = sample_dataset(r2, d, test_count, in.target);
  in.feats = sample_features(seed, FeatureKind::Relu, d, m);
  return in;
}

}  // namespace

TEST_SUITE("spectral_flow") {

TEST_CASE("decomposition of tiny matrices") {
  const auto one = decompose(Eigen::MatrixXd::Constant(1, 1, 2.0));
  CHECK(one.singular_values(0) == doctest::Approx(2.0));
  CHECK(one.U(0, 0) * one.V(0, 0) == doctest::Approx(1.0));
  const auto eye = decompose(Eigen::MatrixXd::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(eye.singular_values(i) == doctest::Approx(1.0));
  CHECK(eye.rank == 3);
}

TEST_CASE("decomposition invariants on a random rectangular matrix") {
  const Eigen::MatrixXd phi = gaussian_matrix(5, 7, 1);
  const auto dec = decompose(phi);
  CHECK(dec.size() == 5);
  CHECK(dec.rows == 5);
  CHECK(dec.cols == 7);
  const Eigen::MatrixXd rebuilt = dec.U * dec.singular_values.asDiagonal() * dec.V.transpose();
  CHECK((phi - rebuilt).norm() <= 1e-10 * phi.norm());
  CHECK((dec.U.transpose() * dec.U - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((dec.V.transpose() * dec.V - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index i = 1; i < dec.size(); ++i) CHECK(dec.singular_values(i) <= dec.singular_values(i - 1));
  CHECK((dec.scaled_values - dec.singular_values / 5.0).norm() == 0.0);
}

TEST_CASE("rank decisions and non-finite input") {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(3, 3);
  phi(0, 0) = 1.0;
  phi(1, 1) = 1e-14;
  const auto dec = decompose(phi);
  CHECK(dec.rank == 1);
  CHECK(dec.singular_values(1) == 0.0);
  phi(2, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(decompose(phi), std::invalid_argument);
  phi(2, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(decompose(phi), std::invalid_argument);
}

TEST_CASE("scalar trajectory") {
  const auto dec = decompose(Eigen::MatrixXd::Constant(1, 1, 2.0));
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 3.0);
  CHECK(coefficients_at(dec, y, 0.0).norm() == 0.0);
  for (double t : {0.01, 0.3, 1.0, 4.0})
    CHECK(coefficients_at(dec, y, t)(0) == doctest::Approx(1.5 * (1.0 - std::exp(-4.0 * t))).epsilon(1e-14));
  CHECK(coefficients_at(dec, y, kInfiniteTime)(0) == doctest::Approx(1.5));
  CHECK_THROWS_AS(coefficients_at(dec, y, -1.0), std::invalid_argument);
}

TEST_CASE("ode oracle") {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 3.0);
  CHECK(oracle::ode_oracle(phi, y, 0.0, 1e-5).norm() == 0.0);
  CHECK(std::abs(oracle::ode_oracle(phi, y, 1.0, 1e-5)(0) - 1.5 * (1.0 - std::exp(-4.0))) <= 1e-4);
  CHECK_THROWS_AS(oracle::ode_oracle(phi, y, 1.0, 0.05), std::invalid_argument);
}

TEST_CASE("closed form agrees with the Euler oracle") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int n = 2 + static_cast<int>(seed % 4) * 2, m = 10 - static_cast<int>(seed);
    const Instance in = relu_instance(4, n, m, seed, 10);
    const FeatureMatrix phi = build_feature_matrix(in.train.points, in.feats);
    const Eigen::VectorXd y = gaussian_vector(n, seed + 100);
    const auto dec = decompose(phi);
    for (double t : {0.1, 1.0, 10.0}) {
      const Eigen::VectorXd exact = coefficients_at(dec, y, t);
      const Eigen::VectorXd euler = oracle::ode_oracle(phi, y, t, 1e-4);
      CHECK(rel(exact, euler) <= 1e-3);
    }
  }
  const Eigen::MatrixXd phi = gaussian_matrix(5, 5, 7);
  const Eigen::VectorXd y = gaussian_vector(5, 8);
  const auto dec = decompose(phi);
  for (double t : {0.1, 1.0, 10.0}) CHECK(rel(coefficients_at(dec, y, t), oracle::ode_oracle(phi, y, t, 1e-4)) <= 1e-3);
}

TEST_CASE("infinite time gives the pseudo-inverse solution") {
  const Eigen::MatrixXd phi = gaussian_matrix(6, 9, 3);
  const Eigen::VectorXd y = gaussian_vector(6, 4);
  const auto dec = decompose(phi);
  const Eigen::VectorXd a_inf = coefficients_at(dec, y, kInfiniteTime);
  const Eigen::VectorXd pinv = phi.completeOrthogonalDecomposition().pseudoInverse() * y;
  CHECK((a_inf - pinv).norm() <= 1e-8 * a_inf.norm());
  double prev = 0.0;
  for (double t : log_time_grid(-2, 6, 4)) {
    const double norm = coefficients_at(dec, y, t).norm();
    CHECK(norm >= prev - 1e-14);
    CHECK(norm <= a_inf.norm() * (1.0 + 1e-12));
    prev = norm;
  }
}

TEST_CASE("prediction") {
  const FeatureSet feats = sample_features(2, FeatureKind::Relu, 3, 4);
  const Eigen::VectorXd x = sample_sphere(3, 3, 1).row(0).transpose();
  CHECK(predict(Eigen::VectorXd::Zero(4), feats, x) == 0.0);
  FeatureSet single{x.transpose(), FeatureKind::Relu};
  CHECK(predict(Eigen::VectorXd::Constant(1, 2.0), single, x) == doctest::Approx(2.0));
  CHECK_THROWS_AS(predict(Eigen::VectorXd::Zero(3), feats, x), std::invalid_argument);

  const Instance in = relu_instance(5, 12, 12, 9, 10);
  const FeatureMatrix phi = build_feature_matrix(in.train.points, in.feats);
  const Eigen::VectorXd y = gaussian_vector(12, 10);
  const auto dec = decompose(phi);
  REQUIRE(dec.rank == 12);
  const Eigen::VectorXd a = coefficients_at(dec, y, kInfiniteTime);
  CHECK((predict_rows(a, in.feats, in.train.points) - y).norm() <= 1e-8 * y.norm());
}

TEST_CASE("errors on a grid") {
  const Instance in = relu_instance(5, 20, 20, 2, 200);
  const FeatureMatrix phi = build_feature_matrix(in.train.points, in.feats);
  const auto dec = decompose(phi);
  const Eigen::VectorXd& y = in.train.targets;
  const auto start = errors_on_grid(dec, y, in.feats, in.target, in.test, {0.0});
  REQUIRE(start.size() == 1);
  CHECK(start[0].train_error == doctest::Approx(y.squaredNorm() / 40.0));
  CHECK(start[0].param_norm == 0.0);
  CHECK(start[0].test_error == doctest::Approx(1.0));

  const auto ends = errors_on_grid(dec, y, in.feats, in.target, in.test, {0.0, kInfiniteTime});
  CHECK(ends[1].train_error <= 1e-12 * ends[0].train_error);

  const auto grid = log_time_grid(-1, 8, 5, true);
  const auto snaps = errors_on_grid(dec, y, in.feats, in.target, in.test, grid, true);
  for (std::size_t k = 1; k < snaps.size(); ++k) {
    CHECK(snaps[k].train_error <= snaps[k - 1].train_error + 1e-15);
    CHECK(snaps[k].param_norm >= snaps[k - 1].param_norm - 1e-12);
    CHECK(snaps[k].coefficients->norm() == doctest::Approx(snaps[k].param_norm));
  }
  // test error is the RMS deviation from f* over the test points
  const Eigen::VectorXd a = *snaps[10].coefficients;
  const Eigen::VectorXd pred = predict_rows(a, in.feats, in.test.points);
  CHECK(snaps[10].test_error == doctest::Approx(std::sqrt((pred.array() - 1.0).square().mean())));

  Dataset empty;
  empty.points.resize(0, 5);
  CHECK_THROWS_AS(errors_on_grid(dec, y, in.feats, in.target, empty, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(errors_on_grid(dec, y, in.feats, in.target, in.test, {2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("slow deterioration: descend, plateau, late ascent") {
  const Instance in = relu_instance(10, 500, 500, 0);
  const auto dec = decompose(build_feature_matrix(in.train.points, in.feats));
  const auto grid = log_time_grid(-1, 10, 20, true);
  const auto snaps = errors_on_grid(dec, in.train.targets, in.feats, in.target, in.test, grid);
  double best = snaps[0].test_error;
  double best_t = 0.0;
  for (const auto& s : snaps)
    if (std::isfinite(s.time) && s.test_error < best) {
      best = s.test_error;
      best_t = s.time;
    }
  CHECK(snaps.front().test_error > 10.0 * best);
  CHECK(best_t >= 1e1);
  CHECK(best_t <= 1e6);
  double onset = kInfiniteTime;
  for (const auto& s : snaps)
    if (s.time > best_t && s.test_error > 2.0 * best) {
      onset = s.time;
      break;
    }
  CHECK(onset > 1e6);
  CHECK(snaps.back().test_error > 10.0 * best);
}

TEST_CASE("spectral energy profile") {
  const Eigen::MatrixXd phi = gaussian_matrix(6, 6, 12);
  const auto dec = decompose(phi);
  const auto top = spectral_energy_profile(dec, dec.U.col(0));
  CHECK(top.concentration == 1);
  CHECK(top.cumulative(0) == doctest::Approx(1.0));

  const Eigen::VectorXd flat = dec.U * Eigen::VectorXd::Ones(6);
  const auto even = spectral_energy_profile(dec, flat);
  for (int p = 0; p < 6; ++p) CHECK(even.cumulative(p) == doctest::Approx((p + 1) / 6.0));
  CHECK(even.cumulative(5) <= 1.0 + 1e-10);
  CHECK_THROWS_AS(spectral_energy_profile(dec, Eigen::VectorXd::Zero(6)), std::invalid_argument);

  const Problem p = build_problem(ExperimentConfig{});
  const auto big = decompose(build_feature_matrix(p.train.points, p.features));
  const auto prof = spectral_energy_profile(big, p.train.targets);
  for (Eigen::Index i = 1; i < prof.cumulative.size(); ++i) CHECK(prof.cumulative(i) >= prof.cumulative(i - 1));
  CHECK(prof.concentration <= 10);
  // recorded value for the default configuration
  CHECK(prof.concentration == 4);
}

TEST_CASE("log time grid") {
  const auto g = log_time_grid(-1, 1, 2, true);
  REQUIRE(g.size() == 6);
  CHECK(g[0] == doctest::Approx(0.1));
  CHECK(g[4] == doctest::Approx(10.0));
  CHECK(std::isinf(g[5]));
  CHECK_THROWS_AS(log_time_grid(2, 1, 3), std::invalid_argument);
}

}

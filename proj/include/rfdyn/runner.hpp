#pragma once

// Seeded experiment runner: single runs, sweeps over m or gamma = m/n, and the
// smallest-eigenvalue sweep.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rfdyn/bounds.hpp"
#include "rfdyn/config.hpp"
#include "rfdyn/features.hpp"
#include "rfdyn/random_matrix.hpp"
#include "rfdyn/spectral_flow.hpp"

namespace rfdyn {

/// Name of the environment variable holding the IDX dataset directory.
inline constexpr const char* kDataDirEnv = "RFDYN_DATA_DIR";

// purpose tags for make_stream
inline constexpr std::uint64_t kTrainStream = 10;
inline constexpr std::uint64_t kTestStream = 11;
inline constexpr std::uint64_t kMonteCarloStream = 12;
inline constexpr std::uint64_t kFeatureStream = 13;
inline constexpr std::uint64_t kNormStream = 14;

struct Problem {
  Dataset train;
  Dataset test;
  Dataset mc;  // points for the assumption inner products
  FeatureSet features;
  TargetSpec target;
};

/// Draws data and features for `config` (sphere data or IDX files).
Problem build_problem(const ExperimentConfig& config);

/// Directory with the IDX files: config.data_dir, else $RFDYN_DATA_DIR.
/// Empty when neither is set.
std::string resolve_data_dir(const ExperimentConfig& config);

/// True when the training image and label files exist under `dir`.
bool mnist_available(const std::string& dir);

/// Monte Carlo estimates of ||f*||_{l2} and E_b ||phi(.; b)||^2_{l2}, cached
/// per (feature, target, dimension, sample count).
std::pair<double, double> reference_norms(const ExperimentConfig& config, const TargetSpec& target);

struct TimeMapping {
  double lambda_max = 0.0;          // largest eigenvalue of Phi Phi^T / (n m)
  double learning_rate = 0.0;       // eta used for the discrete iteration
  double flow_per_iteration = 0.0;  // t = T * flow_per_iteration
  TimeConvention convention = TimeConvention::Flow;
};

TimeMapping time_mapping(const SpectralDecomposition& dec, const ExperimentConfig& config);

struct RunRecord {
  ExperimentConfig config;
  std::string config_hash;
  int m = 0;

  std::vector<TrajectorySnapshot> snapshots;
  std::vector<double> bound_rough;   // per snapshot
  std::vector<double> bound_finer;   // per snapshot, NaN when the hypothesis fails
  std::vector<double> bound_finer_proof;

  std::vector<double> iteration_times;  // flow times of config.iterations
  std::vector<TrajectorySnapshot> iteration_snapshots;

  Eigen::VectorXd scaled_values;
  Eigen::Index rank = 0;
  double rank_threshold = 0.0;
  double smallest_gram = 0.0;
  TimeMapping mapping;
  RoughConstants rough;
  Eigen::Index concentration_index = 0;
  double min_test_error = 0.0;
  double min_test_time = 0.0;

  std::optional<AssumptionReport> assumptions;
  std::string assumption_error;

  /// Sorted key/value metadata written next to the CSV.
  std::vector<std::pair<std::string, std::string>> metadata() const;
};

RunRecord run_experiment(const ExperimentConfig& config);

/// Runs body(i) for i in [0, count) on up to `workers` threads. If any call
/// throws, the exception of the lowest failing index is rethrown, prefixed
/// with "cell <i>".
void parallel_cells(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

enum class SweepAxis { M, Gamma };

struct SweepCell {
  std::size_t axis_index = 0;
  double axis_value = 0.0;
  std::uint64_t seed = 0;
  RunRecord record;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // ordered by (axis index, seed index)
  Table fixed_time;              // m, iterations, flow_time_median, median/mean test error
  Table min_norm;                // m, gamma, median/mean min-norm test error, median/mean smallest eigenvalue
};

/// Sweep over m (values are m) or gamma (values are m / n, rounded to the
/// nearest integer m) for every seed in `seeds`.
SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                      const std::vector<std::uint64_t>& seeds, int workers);

struct Curve {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;
};

/// Shifts every curve additively so all share the smallest minimum.
std::vector<Curve> translate_curves(const std::vector<Curve>& curves);

struct EnvelopeFit {
  double c = 0.0;          // smallest c with value(t) <= min + c sqrt(t) after each argmin
  std::size_t worst = 0;   // curve attaining c
  bool holds = false;      // every checked point satisfies the envelope with this c
};

EnvelopeFit fit_sqrt_envelope(const std::vector<Curve>& curves);

struct MPCell {
  double gamma = 0.0;
  int m = 0;
  std::uint64_t seed = 0;
  double smallest = 0.0;
};

struct MPRow {
  double gamma = 0.0;
  int m = 0;
  double mean = 0.0;
  double median = 0.0;
  double prediction = 0.0;
  double relative_error = 0.0;
};

struct MPSweepResult {
  std::vector<MPCell> cells;
  std::vector<MPRow> rows;
  Calibration calibration;
  double window_low = 0.8;
  double window_high = 1.25;
  std::size_t argmin = 0;  // row with the smallest mean
};

/// Smallest Gram eigenvalue over a gamma grid, `seed_count` seeds per cell,
/// calibrated on the means with gamma inside [window_low, window_high].
MPSweepResult run_mp_sweep(const ExperimentConfig& base, const std::vector<double>& gammas, int seed_count,
                           int workers, double window_low = 0.8, double window_high = 1.25);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

}  // namespace rfdyn

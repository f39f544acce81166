#include "rfdyn/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "rfdyn/idx.hpp"

namespace rfdyn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TargetSpec sphere_target(const ExperimentConfig& config) {
  switch (config.target) {
    case TargetKind::ConstantHarmonic: return TargetSpec::constant(1.0);
    case TargetKind::Legendre: {
      Eigen::VectorXd axis = Eigen::VectorXd::Zero(config.d);
      axis(0) = 1.0;
      return TargetSpec::legendre(config.target_order, axis);
    }
    case TargetKind::ExternalLabels: break;
  }
  throw std::invalid_argument("external-labels targets need source = mnist");
}

// First `count` entries of a seeded random permutation of 0..size-1.
std::vector<Eigen::Index> random_rows(Eigen::Index size, Eigen::Index count, Rng& rng) {
  if (count > size) throw std::invalid_argument("not enough samples in the selected classes");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, size - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

void relabel(Dataset& data, int positive_class) {
  for (Eigen::Index i = 0; i < data.size(); ++i)
    data.targets(i) = static_cast<int>(data.targets(i)) == positive_class ? 1.0 : -1.0;
}

Problem mnist_problem(const ExperimentConfig& config) {
  const std::string dir = resolve_data_dir(config);
  if (dir.empty())
    throw std::runtime_error(std::string("no IDX directory: set data_dir or ") + kDataDirEnv);
  if (config.classes.empty()) throw std::invalid_argument("classes must not be empty");
  namespace fs = std::filesystem;
  const fs::path root(dir);
  Dataset pool = filter_classes(
      load_idx((root / "train-images-idx3-ubyte").string(), (root / "train-labels-idx1-ubyte").string()),
      config.classes);
  Problem p;
  Rng train_rng = make_stream(config.seed, kTrainStream);
  const bool has_test = fs::exists(root / "t10k-images-idx3-ubyte") && fs::exists(root / "t10k-labels-idx1-ubyte");
  if (has_test) {
    p.train = select_rows(pool, random_rows(pool.size(), config.n, train_rng));
    Dataset test_pool = filter_classes(
        load_idx((root / "t10k-images-idx3-ubyte").string(), (root / "t10k-labels-idx1-ubyte").string()),
        config.classes);
    Rng test_rng = make_stream(config.seed, kTestStream);
    p.test = subsample(test_pool, std::min<Eigen::Index>(config.test_count, test_pool.size()), test_rng);
  } else {
    const Eigen::Index want = std::min<Eigen::Index>(pool.size(), config.n + config.test_count);
    const auto rows = random_rows(pool.size(), want, train_rng);
    p.train = select_rows(pool, {rows.begin(), rows.begin() + config.n});
    p.test = select_rows(pool, {rows.begin() + config.n, rows.end()});
  }
  if (p.test.size() == 0) throw std::runtime_error("no test samples left for the selected classes");
  relabel(p.train, config.classes.front());
  relabel(p.test, config.classes.front());
  p.mc = p.test;

  auto table = std::make_shared<LabelTable>();
  for (const Dataset* data : {&p.train, &p.test})
    for (Eigen::Index i = 0; i < data->size(); ++i) table->insert(data->points.row(i).transpose(), data->targets(i));
  p.target = TargetSpec::external(std::move(table));

  Rng feat_rng = make_stream(config.seed, kFeatureStream);
  p.features = sample_features(feat_rng, config.feature, p.train.dim, config.resolved_m());
  return p;
}

}  // namespace

std::string resolve_data_dir(const ExperimentConfig& config) {
  if (!config.data_dir.empty()) return config.data_dir;
  const char* env = std::getenv(kDataDirEnv);
  return env ? std::string(env) : std::string();
}

bool mnist_available(const std::string& dir) {
  if (dir.empty()) return false;
  namespace fs = std::filesystem;
  return fs::exists(fs::path(dir) / "train-images-idx3-ubyte") && fs::exists(fs::path(dir) / "train-labels-idx1-ubyte");
}

Problem build_problem(const ExperimentConfig& config) {
  if (config.source == DataSource::Mnist) return mnist_problem(config);
  Problem p;
  p.target = sphere_target(config);
  Rng train_rng = make_stream(config.seed, kTrainStream);
  p.train = sample_dataset(train_rng, config.d, config.n, p.target);
  Rng test_rng = make_stream(config.seed, kTestStream);
  p.test = sample_dataset(test_rng, config.d, config.test_count, p.target);
  Rng mc_rng = make_stream(config.seed, kMonteCarloStream);
  p.mc = sample_dataset(mc_rng, config.d, config.mc_count, p.target);
  Rng feat_rng = make_stream(config.seed, kFeatureStream);
  p.features = sample_features(feat_rng, config.feature, config.d, config.resolved_m());
  return p;
}

std::pair<double, double> reference_norms(const ExperimentConfig& config, const TargetSpec& target) {
  if (target.kind == TargetKind::ExternalLabels)
    throw std::invalid_argument("reference_norms: no population norm for label tables");
  static std::mutex mutex;
  static std::map<std::string, std::pair<double, double>> cache;
  const std::string key = to_string(config.feature) + "|" + to_string(target.kind) + "|" +
                          std::to_string(target.order) + "|" + std::to_string(config.d) + "|" +
                          std::to_string(config.norm_samples);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  // fixed stream: the estimate is a property of the configuration, not of the run seed
  Rng rng = make_stream(0, kNormStream);
  const Eigen::MatrixXd x = sample_sphere(rng, config.d, config.norm_samples);
  const FeatureSet b = sample_features(rng, config.feature, config.d, config.norm_samples);
  double f_sq = 0.0, phi_sq = 0.0;
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    const double f = eval_target(target, x.row(k).transpose());
    const double phi = eval_feature(b.kind, b.directions.row(k).transpose(), x.row(k).transpose());
    f_sq += f * f;
    phi_sq += phi * phi;
  }
  const double count = static_cast<double>(x.rows());
  const std::pair<double, double> value{std::sqrt(f_sq / count), phi_sq / count};
  std::lock_guard lock(mutex);
  cache.emplace(key, value);
  return value;
}

TimeMapping time_mapping(const SpectralDecomposition& dec, const ExperimentConfig& config) {
  TimeMapping map;
  map.convention = config.convention;
  const double n = static_cast<double>(dec.rows), m = static_cast<double>(dec.cols);
  const double top_sq = dec.singular_values(0) * dec.singular_values(0);
  map.lambda_max = top_sq / (n * m);
  if (config.convention == TimeConvention::Flow) {
    // Hessian Phi^T Phi / (m n); one step of size eta advances flow time by eta
    map.learning_rate = config.learning_rate > 0.0 ? config.learning_rate : n * m / top_sq;
    map.flow_per_iteration = map.learning_rate;
  } else {
    // Hessian Phi^T Phi / n; its flow runs m times faster than the 1/(m n) flow
    map.learning_rate = config.learning_rate > 0.0 ? config.learning_rate : n / top_sq;
    map.flow_per_iteration = map.learning_rate * m;
  }
  return map;
}

std::vector<std::pair<std::string, std::string>> RunRecord::metadata() const {
  std::map<std::string, std::string> kv;
  for (const auto& [key, value] : config.to_map()) kv["config." + key] = value;
  kv["config_hash"] = config_hash;
  kv["m"] = std::to_string(m);
  kv["rank"] = std::to_string(rank);
  kv["rank_tolerance"] = format_double(kRankTolerance);
  kv["rank_threshold"] = format_double(rank_threshold);
  kv["smallest_gram_eigenvalue"] = format_double(smallest_gram);
  kv["time.convention"] = to_string(mapping.convention);
  kv["time.lambda_max"] = format_double(mapping.lambda_max);
  kv["time.learning_rate"] = format_double(mapping.learning_rate);
  kv["time.flow_per_iteration"] = format_double(mapping.flow_per_iteration);
  kv["target"] = to_string(config.target);
  kv["concentration_index"] = std::to_string(concentration_index);
  kv["min_test_error"] = format_double(min_test_error);
  kv["min_test_time"] = format_double(min_test_time);
  kv["rough.M"] = format_double(rough.M);
  kv["rough.delta"] = format_double(rough.delta);
  kv["rough.f_norm"] = format_double(rough.f_norm);
  kv["rough.feat_norm_sq"] = format_double(rough.feat_norm_sq);
  if (assumptions) {
    const auto& a = *assumptions;
    kv["assumption.C_measured"] = format_double(a.C_measured);
    kv["assumption.C_prime"] = format_double(a.C_prime);
    kv["assumption.M_bound"] = format_double(a.M_bound);
    kv["assumption.M_kernel"] = format_double(a.M_kernel);
    kv["assumption.norm_gap"] = format_double(a.norm_gap);
    kv["assumption.projection_gap"] = format_double(a.projection_gap);
    kv["assumption.eigenfunction_gap"] = format_double(a.eigenfunction_gap);
    kv["assumption.orthogonality_gap"] = format_double(a.orthogonality_gap);
    kv["assumption.c1"] = format_double(a.c1);
    kv["assumption.c2"] = format_double(a.c2);
    kv["assumption.epsilon"] = format_double(a.epsilon);
    kv["assumption.t0"] = format_double(a.t0);
    kv["assumption.hypothesis_holds"] = a.hypothesis_holds(config.n) ? "true" : "false";
  } else {
    kv["assumption.error"] = assumption_error;
  }
  for (std::size_t k = 0; k < iteration_times.size(); ++k)
    kv["iterations." + format_double(config.iterations[k]) + ".flow_time"] = format_double(iteration_times[k]);
  return {kv.begin(), kv.end()};
}

RunRecord run_experiment(const ExperimentConfig& config) {
  try {
    RunRecord rec;
    rec.config = config;
    rec.config_hash = config.hash();
    const Problem p = build_problem(config);
    rec.m = static_cast<int>(p.features.count());
    const double n = static_cast<double>(p.train.size());
    const double m = static_cast<double>(rec.m);

    const SpectralDecomposition dec = decompose(build_feature_matrix(p.train.points, p.features));
    const Eigen::VectorXd& y = p.train.targets;
    rec.scaled_values = dec.scaled_values;
    rec.rank = dec.rank;
    rec.rank_threshold = dec.threshold;
    const double last = dec.singular_values(dec.size() - 1);
    rec.smallest_gram = last * last / (n * m);
    rec.mapping = time_mapping(dec, config);

    const auto times = log_time_grid(config.time_start, config.time_stop, config.per_decade, config.include_infinity);
    rec.snapshots = errors_on_grid(dec, y, p.features, p.target, p.test, times);

    // fixed iteration budgets, evaluated in ascending order and stored in config order
    std::vector<std::size_t> order(config.iterations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return config.iterations[a] < config.iterations[b];
    });
    std::vector<double> sorted_times;
    for (std::size_t k : order) {
      if (!(config.iterations[k] >= 0.0)) throw std::invalid_argument("iteration counts must be >= 0");
      sorted_times.push_back(config.iterations[k] * rec.mapping.flow_per_iteration);
    }
    const auto iter_snaps = errors_on_grid(dec, y, p.features, p.target, p.test, sorted_times);
    rec.iteration_times.resize(order.size());
    rec.iteration_snapshots.resize(order.size());
    for (std::size_t j = 0; j < order.size(); ++j) {
      rec.iteration_times[order[j]] = sorted_times[j];
      rec.iteration_snapshots[order[j]] = iter_snaps[j];
    }

    rec.rough.n = n;
    rec.rough.m = m;
    rec.rough.delta = config.delta;
    if (p.target.kind == TargetKind::ExternalLabels) {
      rec.rough.f_norm = std::sqrt(y.squaredNorm() / n);
      const FeatureMatrix phi_test = build_feature_matrix(p.test.points, p.features);
      rec.rough.feat_norm_sq = phi_test.squaredNorm() / static_cast<double>(phi_test.size());
      rec.rough.M = std::max(feature_sup_bound(p.features.kind, p.train.points), y.cwiseAbs().maxCoeff());
    } else {
      std::tie(rec.rough.f_norm, rec.rough.feat_norm_sq) = reference_norms(config, p.target);
      rec.rough.M = std::max(feature_sup_bound(p.features.kind, p.train.points), target_sup_bound(p.target));
    }

    rec.min_test_error = std::numeric_limits<double>::infinity();
    for (const auto& s : rec.snapshots) {
      if (std::isfinite(s.time) && s.test_error < rec.min_test_error) {
        rec.min_test_error = s.test_error;
        rec.min_test_time = s.time;
      }
    }

    try {
      rec.assumptions = measure_assumptions(dec, y, p.features, p.target, p.train, p.mc, config.delta);
      rec.assumptions->epsilon = rec.min_test_error;
      rec.assumptions->t0 = rec.min_test_time;
    } catch (const std::exception& e) {
      rec.assumption_error = e.what();
    }
    if (y.squaredNorm() > 0.0) rec.concentration_index = spectral_energy_profile(dec, y).concentration;

    const bool finer_ok = rec.assumptions && rec.assumptions->hypothesis_holds(n);
    for (const auto& s : rec.snapshots) {
      rec.bound_rough.push_back(norm_bound_rough(s.time, rec.rough));
      if (finer_ok) {
        const FinerBound fb = finer_bound(s.time, rec.assumptions->C_measured, rec.assumptions->M_kernel,
                                          dec.scaled_values, dec.rows);
        rec.bound_finer.push_back(fb.stated);
        rec.bound_finer_proof.push_back(fb.proof_form);
      } else {
        rec.bound_finer.push_back(kNaN);
        rec.bound_finer_proof.push_back(kNaN);
      }
    }
    return rec;
  } catch (const std::exception& e) {
    throw std::runtime_error("run_experiment [" + config.hash() + "]: " + e.what());
  }
}

void parallel_cells(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("cell " + std::to_string(i) + ": " + e.what());
    } catch (...) {
      throw std::runtime_error("cell " + std::to_string(i) + ": unknown error");
    }
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean of empty set");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

int cell_m(const ExperimentConfig& base, SweepAxis axis, double value) {
  const double m = axis == SweepAxis::M ? value : value * base.n;
  const long rounded = std::lround(m);
  if (rounded < 1) throw std::invalid_argument("sweep value gives m < 1");
  return static_cast<int>(rounded);
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                      const std::vector<std::uint64_t>& seeds, int workers) {
  if (values.empty() || seeds.empty()) throw std::invalid_argument("run_sweep: empty sweep axis");
  SweepResult out;
  for (std::size_t a = 0; a < values.size(); ++a)
    for (std::uint64_t s : seeds) {
      SweepCell cell;
      cell.axis_index = a;
      cell.axis_value = values[a];
      cell.seed = s;
      out.cells.push_back(std::move(cell));
    }
  parallel_cells(out.cells.size(), workers, [&](std::size_t i) {
    SweepCell& cell = out.cells[i];
    ExperimentConfig cfg = base;
    cfg.seed = cell.seed;
    cfg.m_rule = MRule::Fixed;
    cfg.m = cell_m(base, axis, cell.axis_value);
    cell.record = run_experiment(cfg);
  });

  out.fixed_time.columns = {"m", "iterations", "flow_time_median", "test_error_median", "test_error_mean"};
  out.min_norm.columns = {"m", "gamma", "test_error_median", "test_error_mean", "smallest_gram_median",
                          "smallest_gram_mean"};
  const std::size_t per = seeds.size();
  for (std::size_t a = 0; a < values.size(); ++a) {
    const auto first = out.cells.begin() + static_cast<std::ptrdiff_t>(a * per);
    const double m = first->record.m;
    for (std::size_t k = 0; k < base.iterations.size(); ++k) {
      std::vector<double> errs, flow;
      for (std::size_t s = 0; s < per; ++s) {
        errs.push_back(first[static_cast<std::ptrdiff_t>(s)].record.iteration_snapshots[k].test_error);
        flow.push_back(first[static_cast<std::ptrdiff_t>(s)].record.iteration_times[k]);
      }
      out.fixed_time.rows.push_back({m, base.iterations[k], median(flow), median(errs), mean(errs)});
    }
    std::vector<double> final_err, smallest;
    for (std::size_t s = 0; s < per; ++s) {
      const RunRecord& r = first[static_cast<std::ptrdiff_t>(s)].record;
      final_err.push_back(!r.snapshots.empty() && std::isinf(r.snapshots.back().time) ? r.snapshots.back().test_error
                                                                                     : kNaN);
      smallest.push_back(r.smallest_gram);
    }
    out.min_norm.rows.push_back({m, m / base.n, median(final_err), mean(final_err), median(smallest), mean(smallest)});
  }
  return out;
}

std::vector<Curve> translate_curves(const std::vector<Curve>& curves) {
  std::vector<double> minima;
  for (const auto& c : curves) {
    if (c.values.empty()) throw std::invalid_argument("translate_curves: empty curve " + c.name);
    double lo = std::numeric_limits<double>::infinity();
    for (double v : c.values)
      if (std::isfinite(v)) lo = std::min(lo, v);
    if (!std::isfinite(lo)) throw std::invalid_argument("translate_curves: no finite value in " + c.name);
    minima.push_back(lo);
  }
  if (minima.empty()) return {};
  const double target = *std::min_element(minima.begin(), minima.end());
  std::vector<Curve> out = curves;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (double& v : out[i].values) v += target - minima[i];
  return out;
}

EnvelopeFit fit_sqrt_envelope(const std::vector<Curve>& curves) {
  EnvelopeFit fit;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Curve& c = curves[i];
    if (c.values.empty() || c.values.size() != c.times.size())
      throw std::invalid_argument("fit_sqrt_envelope: malformed curve " + c.name);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < c.values.size(); ++k)
      if (std::isfinite(c.times[k]) && c.values[k] < c.values[arg]) arg = k;
    for (std::size_t k = arg + 1; k < c.values.size(); ++k) {
      if (!std::isfinite(c.times[k]) || c.times[k] <= 0.0) continue;
      const double need = (c.values[k] - c.values[arg]) / std::sqrt(c.times[k]);
      if (need > fit.c) {
        fit.c = need;
        fit.worst = i;
      }
    }
  }
  fit.holds = true;
  for (const Curve& c : curves) {
    std::size_t arg = 0;
    for (std::size_t k = 1; k < c.values.size(); ++k)
      if (std::isfinite(c.times[k]) && c.values[k] < c.values[arg]) arg = k;
    for (std::size_t k = arg + 1; k < c.values.size(); ++k)
      if (std::isfinite(c.times[k]) && c.values[k] > c.values[arg] + fit.c * std::sqrt(c.times[k]) * (1.0 + 1e-12))
        fit.holds = false;
  }
  return fit;
}

MPSweepResult run_mp_sweep(const ExperimentConfig& base, const std::vector<double>& gammas, int seed_count,
                           int workers, double window_low, double window_high) {
  if (gammas.empty() || seed_count < 1) throw std::invalid_argument("run_mp_sweep: empty sweep axis");
  MPSweepResult out;
  out.window_low = window_low;
  out.window_high = window_high;
  for (double g : gammas)
    for (int s = 0; s < seed_count; ++s) {
      MPCell cell;
      cell.gamma = g;
      cell.m = cell_m(base, SweepAxis::Gamma, g);
      cell.seed = base.seed + static_cast<std::uint64_t>(s);
      out.cells.push_back(cell);
    }
  parallel_cells(out.cells.size(), workers, [&](std::size_t i) {
    MPCell& cell = out.cells[i];
    Rng point_rng = make_stream(cell.seed, kTrainStream);
    const Eigen::MatrixXd x = sample_sphere(point_rng, base.d, base.n);
    Rng feat_rng = make_stream(cell.seed, kFeatureStream);
    const FeatureSet feats = sample_features(feat_rng, base.feature, base.d, cell.m);
    cell.smallest = smallest_gram_eigenvalue(build_feature_matrix(x, feats));
  });

  std::vector<std::pair<double, double>> fit_points;
  for (std::size_t a = 0; a < gammas.size(); ++a) {
    std::vector<double> vals;
    for (int s = 0; s < seed_count; ++s) vals.push_back(out.cells[a * seed_count + s].smallest);
    MPRow row;
    row.gamma = gammas[a];
    row.m = out.cells[a * seed_count].m;
    row.mean = mean(vals);
    row.median = median(vals);
    out.rows.push_back(row);
    if (row.gamma >= window_low && row.gamma <= window_high) fit_points.emplace_back(row.gamma, row.mean);
  }
  out.calibration = calibrate_c(fit_points);
  for (std::size_t a = 0; a < out.rows.size(); ++a) {
    MPRow& row = out.rows[a];
    row.prediction = predict_smallest(row.gamma, out.calibration.c);
    row.relative_error = relative_difference(row.prediction, row.mean);
    if (row.mean < out.rows[out.argmin].mean) out.argmin = a;
  }
  return out;
}

}  // namespace rfdyn

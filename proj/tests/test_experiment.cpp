#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rfdyn/config.hpp"
#include "rfdyn/idx.hpp"
#include "rfdyn/output.hpp"
#include "rfdyn/runner.hpp"

using namespace rfdyn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rfdyn_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 8x8 images: class 0 lights the left half, class 1 the right half, with noise
void write_synthetic_idx(const fs::path& dir, const std::string& prefix, int count, std::uint64_t seed) {
  IdxImages img;
  img.count = static_cast<std::uint32_t>(count);
  img.rows = 8;
  img.cols = 8;
  std::vector<std::uint8_t> labels;
  Rng rng = make_stream(seed, 70);
  std::uniform_int_distribution<int> noise(0, 80), cls(0, 2);
  for (int k = 0; k < count; ++k) {
    const int label = cls(rng);
    labels.push_back(static_cast<std::uint8_t>(label));
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        const bool lit = (label == 0 && c < 4) || (label == 1 && c >= 4) || (label == 2 && r < 4);
        img.pixels.push_back(static_cast<std::uint8_t>((lit ? 170 : 0) + noise(rng)));
      }
  }
  write_idx_images((dir / (prefix + "-images-idx3-ubyte")).string(), img);
  write_idx_labels((dir / (prefix + "-labels-idx1-ubyte")).string(), labels);
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 40;
  cfg.m = 60;
  cfg.d = 5;
  cfg.test_count = 200;
  cfg.mc_count = 200;
  cfg.norm_samples = 5000;
  cfg.time_start = 0;
  cfg.time_stop = 6;
  cfg.per_decade = 4;
  return cfg;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("IDX round trip and malformed files") {
  const fs::path dir = scratch("idx");
  IdxImages img{3, 2, 2, {0, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100}};
  write_idx_images((dir / "img").string(), img);
  write_idx_labels((dir / "lab").string(), {7, 1, 7});
  const IdxImages back = read_idx_images((dir / "img").string());
  CHECK(back.count == 3);
  CHECK(back.rows == 2);
  CHECK(back.pixels == img.pixels);
  CHECK(read_idx_labels((dir / "lab").string()) == std::vector<std::uint8_t>{7, 1, 7});

  const Dataset data = load_idx((dir / "img").string(), (dir / "lab").string());
  CHECK(data.size() == 3);
  CHECK(data.dim == 4);
  CHECK(data.points(0, 1) == doctest::Approx(1.0));
  CHECK(data.targets(1) == 1.0);
  const Dataset sevens = filter_classes(data, {7});
  CHECK(sevens.size() == 2);
  CHECK(sevens.points(1, 0) == doctest::Approx(70.0 / 255.0));
  Rng rng = make_stream(1, 2);
  const Dataset two = subsample(data, 2, rng);
  CHECK(two.size() == 2);
  CHECK_THROWS(subsample(data, 4, rng));
  const Dataset picked = select_rows(data, {2, 0});
  CHECK(picked.targets(0) == 7.0);
  CHECK(picked.points(1, 1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(read_idx_images((dir / "lab").string()), std::runtime_error);
  CHECK_THROWS_AS(read_idx_images((dir / "missing").string()), std::runtime_error);
  write_idx_labels((dir / "short").string(), {1, 2});
  CHECK_THROWS(load_idx((dir / "img").string(), (dir / "short").string()));
  {
    std::string bytes = read_file((dir / "img").string());
    bytes.resize(bytes.size() - 3);
    write_file((dir / "trunc").string(), bytes);
  }
  CHECK_THROWS_AS(read_idx_images((dir / "trunc").string()), std::runtime_error);
}

TEST_CASE("config parsing, canonical form and hash") {
  const ExperimentConfig cfg = parse_config(
      "# comment\n"
      "n = 100\n"
      "m_rule = sqrt-n   # trailing comment\n"
      "feature = indicator\n"
      "iterations = 10, 1000\n"
      "\n");
  CHECK(cfg.n == 100);
  CHECK(cfg.resolved_m() == 10);
  CHECK(cfg.feature == FeatureKind::Indicator);
  CHECK(cfg.iterations == std::vector<double>{10.0, 1000.0});
  CHECK_THROWS_AS(parse_config("bogus = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n = -3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("delta = 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n 3\n"), std::invalid_argument);

  ExperimentConfig a;
  ExperimentConfig b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.out_dir = "elsewhere";
  b.data_dir = "/data";
  CHECK(a.hash() == b.hash());
  b.seed = 1;
  CHECK(a.hash() != b.hash());
  CHECK(parse_config(a.canonical()).canonical() == a.canonical());
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");

  ExperimentConfig sq;
  sq.n = 7;
  sq.m_rule = MRule::NSquared;
  CHECK(sq.resolved_m() == 49);
}

TEST_CASE("one-point, one-feature run") {
  ExperimentConfig cfg = small_config();
  cfg.n = 1;
  cfg.m = 1;
  const RunRecord rec = run_experiment(cfg);
  REQUIRE(!rec.snapshots.empty());
  CHECK(std::isinf(rec.snapshots.back().time));
  CHECK(rec.snapshots.back().train_error <= 1e-20);
  CHECK(rec.snapshots.front().train_error > 0.0);
  CHECK(rec.rank == 1);
}

TEST_CASE("trajectory CSV round trip and header") {
  const RunRecord rec = run_experiment(small_config());
  const std::string csv = trajectory_csv(rec);
  CHECK(csv.rfind(std::string(kTrajectoryHeader) + "\n", 0) == 0);
  const auto rows = parse_trajectory_csv(csv);
  REQUIRE(rows.size() == rec.snapshots.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].time == rec.snapshots[i].time);
    CHECK(rows[i].test_error == rec.snapshots[i].test_error);
    CHECK(rows[i].config_hash == rec.config_hash);
  }
  CHECK(parse_trajectory_csv(std::string(kTrajectoryHeader) + "\n").empty());
  CHECK_THROWS(parse_trajectory_csv("wrong,header\n"));

  Table t{{"a", "b"}, {{1.0, 2.5}, {3.0, std::numeric_limits<double>::infinity()}}};
  const Table back = parse_table_csv(table_csv(t));
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  CHECK(metadata_text(rec).find("config_hash = " + rec.config_hash) != std::string::npos);
}

TEST_CASE("runs are deterministic and independent of worker count") {
  const ExperimentConfig cfg = small_config();
  CHECK(trajectory_csv(run_experiment(cfg)) == trajectory_csv(run_experiment(cfg)));
  CHECK(metadata_text(run_experiment(cfg)) == metadata_text(run_experiment(cfg)));

  const std::vector<double> ms{20, 40, 60};
  const std::vector<std::uint64_t> seeds{0, 1};
  const SweepResult one = run_sweep(cfg, SweepAxis::M, ms, seeds, 1);
  const SweepResult three = run_sweep(cfg, SweepAxis::M, ms, seeds, 3);
  CHECK(table_csv(one.fixed_time) == table_csv(three.fixed_time));
  CHECK(table_csv(one.min_norm) == table_csv(three.min_norm));
  REQUIRE(one.cells.size() == 6);
  for (std::size_t i = 0; i < one.cells.size(); ++i)
    CHECK(trajectory_csv(one.cells[i].record) == trajectory_csv(three.cells[i].record));

  // a sweep cell is exactly the stand-alone run with the same settings
  ExperimentConfig single = cfg;
  single.m = 40;
  single.seed = 1;
  CHECK(trajectory_csv(one.cells[3].record) == trajectory_csv(run_experiment(single)));
}

TEST_CASE("parallel cells report the lowest failing cell") {
  std::vector<int> hit(10, 0);
  parallel_cells(10, 4, [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) CHECK(h == 1);
  try {
    parallel_cells(10, 4, [&](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error("boom");
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "cell 3: boom");
  }
  CHECK_THROWS_AS(parallel_cells(2, 0, [](std::size_t) {}), std::invalid_argument);
}

TEST_CASE("curve translation and square-root envelope") {
  Curve a{"a", {1, 4, 9, 16}, {0.5, 0.3, 0.4, 0.6}};
  Curve b{"b", {1, 4, 9, 16}, {0.9, 0.7, 0.8, 0.7}};
  const auto moved = translate_curves({a, b});
  CHECK(moved[0].values == a.values);
  CHECK(moved[1].values[1] == doctest::Approx(0.3));
  const auto fit = fit_sqrt_envelope(moved);
  CHECK(fit.holds);
  CHECK(fit.c == doctest::Approx(0.3 / 4.0));
  CHECK(fit.worst == 0);
  CHECK_THROWS(translate_curves({Curve{"empty", {}, {}}}));
}

TEST_CASE("SVG output is deterministic") {
  const RunRecord rec = run_experiment(small_config());
  const std::string svg = render_svg(trajectory_plot(rec));
  CHECK(svg == render_svg(trajectory_plot(rec)));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("width=\"960\"") != std::string::npos);
  PlotSpec spec;
  spec.title = "a < b & c";
  spec.series.push_back({"s", {1, 10, 100}, {1, 0, std::nan("")}, false});
  const std::string escaped = render_svg(spec);
  CHECK(escaped.find("a &lt; b &amp; c") != std::string::npos);
}

TEST_CASE("time mapping under both conventions") {
  ExperimentConfig cfg = small_config();
  const RunRecord flow = run_experiment(cfg);
  cfg.convention = TimeConvention::Objective;
  const RunRecord obj = run_experiment(cfg);
  const double m = cfg.m;
  CHECK(flow.mapping.learning_rate == doctest::Approx(1.0 / flow.mapping.lambda_max));
  CHECK(obj.mapping.learning_rate == doctest::Approx(flow.mapping.learning_rate / m));
  for (std::size_t k = 0; k < cfg.iterations.size(); ++k)
    CHECK(flow.iteration_times[k] == doctest::Approx(obj.iteration_times[k]));
  CHECK(flow.iteration_times[0] == doctest::Approx(cfg.iterations[0] / flow.mapping.lambda_max));
}

TEST_CASE("min-norm test error peaks near m = n on sphere data") {
  ExperimentConfig cfg;
  cfg.n = 100;
  cfg.test_count = 1000;
  cfg.norm_samples = 20000;
  cfg.time_start = 0;
  cfg.time_stop = 8;
  cfg.per_decade = 2;
  const std::vector<double> ms{25, 50, 80, 100, 125, 200, 400};
  const SweepResult res = run_sweep(cfg, SweepAxis::M, ms, {0, 1, 2}, 4);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < res.min_norm.rows.size(); ++i)
    if (res.min_norm.rows[i][2] > res.min_norm.rows[arg][2]) arg = i;
  CHECK(res.min_norm.rows[arg][0] >= 80.0);
  CHECK(res.min_norm.rows[arg][0] <= 125.0);

  // under a fixed iteration budget the curve stays far below the interpolation peak
  const std::size_t per = cfg.iterations.size();
  const std::size_t at_n = 3;
  const double early = res.fixed_time.rows[at_n * per + 0][3];
  CHECK(early < 0.5 * res.min_norm.rows[at_n][2]);
  // and the fixed-budget error at m = n grows with the budget once it is long enough
  CHECK(res.fixed_time.rows[at_n * per + 3][3] >= res.fixed_time.rows[at_n * per + 2][3]);
}

TEST_CASE("indicator features obey a square-root envelope") {
  ExperimentConfig cfg;
  cfg.n = 200;
  cfg.feature = FeatureKind::Indicator;
  cfg.test_count = 1000;
  cfg.norm_samples = 20000;
  cfg.time_start = 0;
  cfg.time_stop = 9;
  cfg.per_decade = 4;
  cfg.include_infinity = false;
  std::vector<Curve> curves;
  for (int m : {50, 200, 800}) {
    cfg.m = m;
    const RunRecord rec = run_experiment(cfg);
    Curve c{"m=" + std::to_string(m), {}, {}};
    for (const auto& s : rec.snapshots) {
      c.times.push_back(s.time);
      c.values.push_back(s.test_error);
    }
    curves.push_back(c);
  }
  const auto fit = fit_sqrt_envelope(translate_curves(curves));
  CHECK(fit.holds);
  CHECK(std::isfinite(fit.c));
  CHECK(fit.c > 0.0);
}

TEST_CASE("pipeline on synthetic IDX files") {
  const fs::path dir = scratch("mnist");
  write_synthetic_idx(dir, "train", 600, 1);
  CHECK(mnist_available(dir.string()));
  CHECK_FALSE(mnist_available((dir / "nope").string()));

  ExperimentConfig cfg;
  cfg.source = DataSource::Mnist;
  cfg.data_dir = dir.string();
  cfg.feature = FeatureKind::AffineRelu;
  cfg.target = TargetKind::ExternalLabels;
  cfg.n = 100;
  cfg.m = 80;
  cfg.test_count = 100;
  cfg.time_start = 0;
  cfg.time_stop = 6;
  cfg.per_decade = 2;
  const Problem p = build_problem(cfg);
  CHECK(p.train.size() == 100);
  CHECK(p.test.size() <= 100);
  CHECK(p.train.dim == 64);
  for (Eigen::Index i = 0; i < p.train.size(); ++i) CHECK(std::abs(p.train.targets(i)) == 1.0);
  const RunRecord rec = run_experiment(cfg);
  CHECK(rec.min_test_error < 0.5);
  CHECK(trajectory_csv(rec) == trajectory_csv(run_experiment(cfg)));

  write_synthetic_idx(dir, "t10k", 300, 2);
  const Problem with_test = build_problem(cfg);
  CHECK(with_test.test.size() == 100);

  ExperimentConfig none = cfg;
  none.data_dir = (dir / "absent").string();
  CHECK_THROWS(run_experiment(none));
}

}

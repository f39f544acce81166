// rfdyn: command-line front end for the random feature dynamics experiments.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rfdyn/config.hpp"
#include "rfdyn/kernel_analytic.hpp"
#include "rfdyn/output.hpp"
#include "rfdyn/random_matrix.hpp"
#include "rfdyn/runner.hpp"

namespace fs = std::filesystem;
using namespace rfdyn;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  long long seed = -1;
  std::string out;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key = value configuration file");
  cmd->add_option("--set", opts.sets, "override one option, key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--workers", opts.workers, "concurrent sweep cells")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonOptions& opts, ExperimentConfig base) {
  if (!opts.config_path.empty()) base = load_config(opts.config_path, base);
  for (const auto& s : opts.sets) base.apply(s);
  if (opts.seed >= 0) base.seed = static_cast<std::uint64_t>(opts.seed);
  if (!opts.out.empty()) base.out_dir = opts.out;
  return base;
}

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

std::vector<std::uint64_t> seed_list(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < cfg.seeds; ++k) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(k));
  return seeds;
}

void write_run(const RunRecord& rec, const std::string& dir, const std::string& stem) {
  emit_csv(rec, (fs::path(dir) / (stem + ".csv")).string());
  write_file((fs::path(dir) / (stem + ".meta")).string(), metadata_text(rec));
}

int cmd_run(const ExperimentConfig& cfg) {
  const RunRecord rec = run_experiment(cfg);
  write_run(rec, cfg.out_dir, "run");
  emit_svg(trajectory_plot(rec), path_in(cfg, "run.svg"));
  std::printf("config %s: min test error %.6g at t=%.6g, min-norm test error %.6g\n", rec.config_hash.c_str(),
              rec.min_test_error, rec.min_test_time, rec.snapshots.back().test_error);
  return 0;
}

int write_sweep(const ExperimentConfig& cfg, const SweepResult& res) {
  std::vector<Curve> curves;
  for (const auto& cell : res.cells) {
    char stem[96];
    std::snprintf(stem, sizeof stem, "cell_m%d_seed%llu", cell.record.m, static_cast<unsigned long long>(cell.seed));
    write_run(cell.record, path_in(cfg, "cells"), stem);
    if (cell.seed == res.cells.front().seed) {
      Curve c{"m=" + std::to_string(cell.record.m), {}, {}};
      for (const auto& s : cell.record.snapshots) {
        if (!std::isfinite(s.time)) continue;
        c.times.push_back(s.time);
        c.values.push_back(s.test_error);
      }
      curves.push_back(std::move(c));
    }
  }
  emit_table(res.fixed_time, path_in(cfg, "fixed_time.csv"));
  emit_table(res.min_norm, path_in(cfg, "min_norm.csv"));

  const auto shifted = translate_curves(curves);
  const EnvelopeFit fit = fit_sqrt_envelope(shifted);
  PlotSpec plot{"test error, translated to a common minimum", "t", "test error", true, true, {}};
  for (const auto& c : shifted) plot.series.push_back({c.name, c.times, c.values, false});
  if (!shifted.empty()) {
    const double lo = [&] {
      double v = shifted.front().values.front();
      for (const auto& c : shifted)
        for (double x : c.values) v = std::min(v, x);
      return v;
    }();
    Series env{"min + c sqrt(t)", {}, {}, true};
    for (double t : shifted.front().times) {
      env.x.push_back(t);
      env.y.push_back(lo + fit.c * std::sqrt(t));
    }
    plot.series.push_back(std::move(env));
  }
  emit_svg(plot, path_in(cfg, "translated.svg"));

  PlotSpec mplot{"test error vs m", "m", "test error", true, true, {}};
  Series min_norm{"min-norm", {}, {}, true};
  for (const auto& row : res.min_norm.rows) {
    min_norm.x.push_back(row[0]);
    min_norm.y.push_back(row[2]);
  }
  mplot.series.push_back(min_norm);
  for (std::size_t k = 0; k < cfg.iterations.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "T=%g", cfg.iterations[k]);
    Series s{name, {}, {}, false};
    for (const auto& row : res.fixed_time.rows)
      if (row[1] == cfg.iterations[k]) {
        s.x.push_back(row[0]);
        s.y.push_back(row[3]);
      }
    mplot.series.push_back(std::move(s));
  }
  emit_svg(mplot, path_in(cfg, "error_vs_m.svg"));
  write_file(path_in(cfg, "envelope.txt"), "c = " + format_double(fit.c) + "\n");
  std::printf("%zu cells, envelope c = %.6g\n", res.cells.size(), fit.c);
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, int workers) {
  SweepResult res;
  if (!cfg.gammas.empty()) {
    res = run_sweep(cfg, SweepAxis::Gamma, cfg.gammas, seed_list(cfg), workers);
  } else {
    if (cfg.m_list.empty()) throw std::invalid_argument("sweep needs m_list or gammas");
    res = run_sweep(cfg, SweepAxis::M, {cfg.m_list.begin(), cfg.m_list.end()}, seed_list(cfg), workers);
  }
  return write_sweep(cfg, res);
}

int cmd_spectra(const ExperimentConfig& cfg) {
  const Problem p = build_problem(cfg);
  const FeatureMatrix phi = build_feature_matrix(p.train.points, p.features);
  SymmetricSpectrum gram{SpectrumSource::Gram, symmetric_eigenvalues(gram_matrix(phi)),
                         static_cast<double>(p.features.count()) / cfg.n, cfg.seed, cfg.n, p.features.count(), cfg.d};
  SymmetricSpectrum kernel{SpectrumSource::KernelMatrix,
                           symmetric_eigenvalues(kernel_matrix(p.train.points, relu_profile_scale(cfg.d))),
                           0.0, cfg.seed, cfg.n, 0, cfg.d};
  const AnalyticSpectrum analytic = analytic_spectrum(cfg.d, 8, relu_profile_scale(cfg.d));
  const SpectrumComparison cmp = spectrum_report(gram, kernel, analytic);
  const auto flat = analytic.flattened(static_cast<std::size_t>(cfg.n));

  Table table{{"rank", "gram", "kernel_matrix", "analytic"}, {}};
  for (Eigen::Index i = 0; i < gram.eigenvalues.size(); ++i)
    table.rows.push_back({static_cast<double>(i + 1), gram.eigenvalues(i), kernel.eigenvalues(i),
                          static_cast<std::size_t>(i) < flat.size() ? flat[static_cast<std::size_t>(i)] : 0.0});
  emit_table(table, path_in(cfg, "spectra.csv"));

  std::string report;
  for (std::size_t i = 0; i < cmp.gram_vs_kernel.size(); ++i)
    report += "rank " + std::to_string(i + 1) + " gram_vs_kernel " + format_double(cmp.gram_vs_kernel[i]) + "\n";
  report += "analytic_fit = " + format_double(cmp.analytic_fit) + "\n";
  report += "gram_min = " + format_double(cmp.gram_tail.min_eigenvalue) + "\n";
  report += "gram_below_1e-6 = " + std::to_string(cmp.gram_tail.below_threshold) + "\n";
  write_file(path_in(cfg, "spectra_report.txt"), report);

  PlotSpec plot{"eigenvalues", "rank", "eigenvalue", true, true, {}};
  Series g{"gram", {}, {}, false}, k{"kernel matrix", {}, {}, false}, a{"analytic", {}, {}, true};
  for (const auto& row : table.rows) {
    g.x.push_back(row[0]); g.y.push_back(row[1]);
    k.x.push_back(row[0]); k.y.push_back(row[2]);
    a.x.push_back(row[0]); a.y.push_back(row[3]);
  }
  plot.series = {g, k, a};
  emit_svg(plot, path_in(cfg, "spectra.svg"));
  std::printf("top gram %.6g, top kernel %.6g, rel diff %.3g\n", gram.eigenvalues(0), kernel.eigenvalues(0),
              cmp.gram_vs_kernel.front());
  return 0;
}

int cmd_mp(ExperimentConfig cfg, int workers) {
  if (cfg.gammas.empty()) cfg.gammas = {0.5, 0.7, 0.85, 1.0, 1.2, 1.5, 2.0};
  const MPSweepResult res = run_mp_sweep(cfg, cfg.gammas, cfg.seeds, workers);
  Table rows{{"gamma", "m", "mean", "median", "prediction", "relative_error"}, {}};
  for (const auto& r : res.rows)
    rows.rows.push_back({r.gamma, static_cast<double>(r.m), r.mean, r.median, r.prediction, r.relative_error});
  emit_table(rows, path_in(cfg, "mp.csv"));
  Table cells{{"gamma", "m", "seed", "smallest"}, {}};
  for (const auto& c : res.cells)
    cells.rows.push_back({c.gamma, static_cast<double>(c.m), static_cast<double>(c.seed), c.smallest});
  emit_table(cells, path_in(cfg, "mp_cells.csv"));
  write_file(path_in(cfg, "mp_calibration.txt"),
             "c = " + format_double(res.calibration.c) + "\nresidual = " + format_double(res.calibration.residual) +
                 "\nwindow = [" + format_double(res.window_low) + ", " + format_double(res.window_high) + "]\n");
  PlotSpec plot{"smallest Gram eigenvalue", "gamma", "eigenvalue", true, true, {}};
  Series meas{"measured mean", {}, {}, false}, pred{"calibrated prediction", {}, {}, true};
  for (const auto& r : res.rows) {
    meas.x.push_back(r.gamma); meas.y.push_back(r.mean);
    pred.x.push_back(r.gamma); pred.y.push_back(r.prediction);
  }
  plot.series = {meas, pred};
  emit_svg(plot, path_in(cfg, "mp.svg"));
  std::printf("c = %.6g, minimum at gamma = %g\n", res.calibration.c, res.rows[res.argmin].gamma);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-flow dynamics of random feature models"};
  app.require_subcommand(1);
  CommonOptions opts;
  auto* run = app.add_subcommand("run", "single trajectory with bounds");
  auto* sweep = app.add_subcommand("sweep", "sweep over m_list or gammas for several seeds");
  auto* spectra = app.add_subcommand("spectra", "Gram, kernel-matrix and analytic spectra");
  auto* mp = app.add_subcommand("mp", "smallest Gram eigenvalue against the Marchenko-Pastur prediction");
  auto* mnist = app.add_subcommand("mnist", "sweep over m on two IDX classes");
  for (auto* cmd : {run, sweep, spectra, mp, mnist}) add_common(cmd, opts);
  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(resolve(opts, {}));
    if (sweep->parsed()) return cmd_sweep(resolve(opts, {}), opts.workers);
    if (spectra->parsed()) return cmd_spectra(resolve(opts, {}));
    if (mp->parsed()) {
      ExperimentConfig base;
      base.n = 1000;
      base.seeds = 10;
      return cmd_mp(resolve(opts, base), opts.workers);
    }
    if (mnist->parsed()) {
      ExperimentConfig base;
      base.source = DataSource::Mnist;
      base.feature = FeatureKind::AffineRelu;
      base.target = TargetKind::ExternalLabels;
      base.n = 500;
      base.m_list = {100, 200, 300, 400, 450, 500, 550, 600, 700, 800, 1000, 1500, 2500};
      const ExperimentConfig cfg = resolve(opts, base);
      if (!mnist_available(resolve_data_dir(cfg))) {
        std::fprintf(stderr, "IDX files not found; set %s or data_dir\n", kDataDirEnv);
        return 2;
      }
      return cmd_sweep(cfg, opts.workers);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

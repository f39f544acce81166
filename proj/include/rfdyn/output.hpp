#pragma once

// CSV and SVG artifacts. All numbers are written with 17 significant digits so
// a re-parse reproduces the in-memory values exactly.

#include <string>
#include <vector>

#include "rfdyn/runner.hpp"

namespace rfdyn {

inline constexpr const char* kTrajectoryHeader =
    "time,train_error,test_error,param_norm,bound_rough,bound_finer,config_hash";

struct CsvRow {
  double time = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  double param_norm = 0.0;
  double bound_rough = 0.0;
  double bound_finer = 0.0;
  std::string config_hash;
};

std::string trajectory_csv(const RunRecord& record);
std::vector<CsvRow> parse_trajectory_csv(const std::string& text);

std::string table_csv(const Table& table);
Table parse_table_csv(const std::string& text);

std::string metadata_text(const RunRecord& record);

/// Writes `body` to `path`, creating parent directories. Throws on I/O failure.
void write_file(const std::string& path, const std::string& body);
std::string read_file(const std::string& path);

void emit_csv(const RunRecord& record, const std::string& path);
void emit_table(const Table& table, const std::string& path);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  bool log_y = true;
  std::vector<Series> series;
};

/// 960 x 600 SVG, one polyline per series, decade ticks on log axes. Points
/// that are non-finite, or non-positive on a log axis, are skipped.
std::string render_svg(const PlotSpec& spec);
void emit_svg(const PlotSpec& spec, const std::string& path);

/// Train and test error against time for one run.
PlotSpec trajectory_plot(const RunRecord& record);

}  // namespace rfdyn

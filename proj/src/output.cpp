#include "rfdyn/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rfdyn {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_field(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::runtime_error("bad CSV number: " + s);
  return v;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string trajectory_csv(const RunRecord& record) {
  std::string out = std::string(kTrajectoryHeader) + "\n";
  for (std::size_t i = 0; i < record.snapshots.size(); ++i) {
    const auto& s = record.snapshots[i];
    const double rough = i < record.bound_rough.size() ? record.bound_rough[i] : std::nan("");
    const double finer = i < record.bound_finer.size() ? record.bound_finer[i] : std::nan("");
    out += format_double(s.time) + ',' + format_double(s.train_error) + ',' + format_double(s.test_error) + ',' +
           format_double(s.param_norm) + ',' + format_double(rough) + ',' + format_double(finer) + ',' +
           record.config_hash + '\n';
  }
  return out;
}

std::vector<CsvRow> parse_trajectory_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kTrajectoryHeader) throw std::runtime_error("missing trajectory CSV header");
  std::vector<CsvRow> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split(lines[k], ',');
    if (f.size() != 7) throw std::runtime_error("trajectory CSV row " + std::to_string(k) + " has wrong width");
    rows.push_back({parse_field(f[0]), parse_field(f[1]), parse_field(f[2]), parse_field(f[3]), parse_field(f[4]),
                    parse_field(f[5]), f[6]});
  }
  return rows;
}

std::string table_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::invalid_argument("table row width differs from header");
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += '\n';
  }
  return out;
}

Table parse_table_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw std::runtime_error("empty table CSV");
  Table table;
  table.columns = split(lines.front(), ',');
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split(lines[k], ',');
    if (f.size() != table.columns.size()) throw std::runtime_error("table CSV row has wrong width");
    std::vector<double> row;
    for (const auto& s : f) row.push_back(parse_field(s));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string metadata_text(const RunRecord& record) {
  std::string out;
  for (const auto& [key, value] : record.metadata()) out += key + " = " + value + "\n";
  return out;
}

void write_file(const std::string& path, const std::string& body) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit_csv(const RunRecord& record, const std::string& path) { write_file(path, trajectory_csv(record)); }

void emit_table(const Table& table, const std::string& path) { write_file(path, table_csv(table)); }

std::string render_svg(const PlotSpec& spec) {
  constexpr double W = 960, H = 600, left = 90, right = 220, top = 50, bottom = 70;
  const double pw = W - left - right, ph = H - top - bottom;
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      const double tx = spec.log_x ? std::log10(s.x[i]) : s.x[i];
      const double ty = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      x0 = std::min(x0, tx); x1 = std::max(x1, tx);
      y0 = std::min(y0, ty); y1 = std::max(y1, ty);
    }
  if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (spec.log_x) { x0 = std::floor(x0); x1 = std::ceil(x1); }
  if (spec.log_y) { y0 = std::floor(y0); y1 = std::ceil(y1); }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 600\" width=\"960\" height=\"600\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"960\" height=\"600\" fill=\"white\"/>\n";
  o << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">"
    << escape_xml(spec.title) << "</text>\n";
  o << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(pw) << "\" height=\""
    << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  auto ticks = [](double lo, double hi, bool log) {
    std::vector<double> t;
    if (log) {
      const double step = std::max(1.0, std::ceil((hi - lo) / 12.0));
      for (double v = lo; v <= hi + 1e-9; v += step) t.push_back(v);
    } else {
      for (int k = 0; k <= 5; ++k) t.push_back(lo + (hi - lo) * k / 5.0);
    }
    return t;
  };
  auto label = [](double v, bool log) {
    char buf[32];
    if (log) std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(v)));
    else std::snprintf(buf, sizeof buf, "%.3g", v);
    return std::string(buf);
  };
  for (double v : ticks(x0, x1, spec.log_x)) {
    o << "<line x1=\"" << fixed(px(v)) << "\" y1=\"" << fixed(top + ph) << "\" x2=\"" << fixed(px(v)) << "\" y2=\""
      << fixed(top + ph + 6) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fixed(px(v)) << "\" y=\"" << fixed(top + ph + 22) << "\" text-anchor=\"middle\" font-size=\"12\">"
      << label(v, spec.log_x) << "</text>\n";
  }
  for (double v : ticks(y0, y1, spec.log_y)) {
    o << "<line x1=\"" << fixed(left - 6) << "\" y1=\"" << fixed(py(v)) << "\" x2=\"" << fixed(left) << "\" y2=\""
      << fixed(py(v)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fixed(left - 10) << "\" y=\"" << fixed(py(v) + 4) << "\" text-anchor=\"end\" font-size=\"12\">"
      << label(v, spec.log_y) << "</text>\n";
  }
  o << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(H - 20) << "\" text-anchor=\"middle\" font-size=\"14\">"
    << escape_xml(spec.x_label) << "</text>\n";
  o << "<text x=\"20\" y=\"" << fixed(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 "
    << fixed(top + ph / 2) << ")\">" << escape_xml(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = colors[k % 10];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      const double tx = spec.log_x ? std::log10(s.x[i]) : s.x[i];
      const double ty = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      o << (first ? "" : " ") << fixed(px(tx)) << ',' << fixed(py(ty));
      first = false;
    }
    o << "\"/>\n";
    const double ly = top + 20 + 22.0 * static_cast<double>(k);
    o << "<line x1=\"" << fixed(left + pw + 15) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(left + pw + 45)
      << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    o << "<text x=\"" << fixed(left + pw + 52) << "\" y=\"" << fixed(ly + 4) << "\" font-size=\"12\">"
      << escape_xml(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_svg(const PlotSpec& spec, const std::string& path) { write_file(path, render_svg(spec)); }

PlotSpec trajectory_plot(const RunRecord& record) {
  PlotSpec spec;
  spec.title = "n=" + std::to_string(record.config.n) + ", m=" + std::to_string(record.m);
  spec.x_label = "t";
  spec.y_label = "error";
  Series train{"train error", {}, {}, false}, test{"test error", {}, {}, false};
  Series min_norm{"min-norm test error", {}, {}, true};
  for (const auto& s : record.snapshots) {
    if (!std::isfinite(s.time)) continue;
    train.x.push_back(s.time);
    train.y.push_back(s.train_error);
    test.x.push_back(s.time);
    test.y.push_back(s.test_error);
  }
  if (!record.snapshots.empty() && std::isinf(record.snapshots.back().time) && !test.x.empty()) {
    min_norm.x = {test.x.front(), test.x.back()};
    min_norm.y = {record.snapshots.back().test_error, record.snapshots.back().test_error};
  }
  spec.series = {train, test};
  if (!min_norm.x.empty()) spec.series.push_back(min_norm);
  return spec;
}

}  // namespace rfdyn

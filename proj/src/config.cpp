#include "rfdyn/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace rfdyn {

std::string to_string(MRule rule) {
  switch (rule) {
    case MRule::Fixed: return "fixed";
    case MRule::SqrtN: return "sqrt-n";
    case MRule::NSquared: return "n2";
    case MRule::List: return "list";
  }
  return "unknown";
}

std::string to_string(TimeConvention convention) {
  return convention == TimeConvention::Flow ? "flow" : "objective";
}

std::string to_string(DataSource source) { return source == DataSource::Sphere ? "sphere" : "mnist"; }

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw std::invalid_argument("bad number for " + key + ": " + text);
  return out;
}

long long parse_int(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  char* end = nullptr;
  const long long out = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) throw std::invalid_argument("bad integer for " + key + ": " + text);
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  char* end = nullptr;
  if (v.empty() || v[0] == '-') throw std::invalid_argument("bad unsigned integer for " + key + ": " + text);
  const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) throw std::invalid_argument("bad unsigned integer for " + key + ": " + text);
  return out;
}

int parse_positive(const std::string& key, const std::string& text) {
  const long long v = parse_int(key, text);
  if (v < 1 || v > 1'000'000'000) throw std::invalid_argument(key + " must be a positive integer");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bad boolean for " + key + ": " + text);
}

template <class F>
auto parse_list(const std::string& text, F parse) {
  std::vector<decltype(parse(std::string{}))> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(parse(item));
  }
  return out;
}

}  // namespace

int ExperimentConfig::resolved_m() const {
  switch (m_rule) {
    case MRule::Fixed: return m;
    case MRule::SqrtN: return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
    case MRule::NSquared: return n * n;
    case MRule::List:
      if (m_list.empty()) throw std::invalid_argument("m_rule = list needs a nonempty m_list");
      return m_list.front();
  }
  return m;
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(seed);
  kv["n"] = std::to_string(n);
  kv["m"] = std::to_string(m);
  kv["m_rule"] = to_string(m_rule);
  kv["m_list"] = join(m_list);
  kv["d"] = std::to_string(d);
  kv["feature"] = to_string(feature);
  kv["target"] = to_string(target);
  kv["target_order"] = std::to_string(target_order);
  kv["time_start"] = format_double(time_start);
  kv["time_stop"] = format_double(time_stop);
  kv["per_decade"] = std::to_string(per_decade);
  kv["include_infinity"] = include_infinity ? "true" : "false";
  kv["test_count"] = std::to_string(test_count);
  kv["mc_count"] = std::to_string(mc_count);
  kv["norm_samples"] = std::to_string(norm_samples);
  kv["delta"] = format_double(delta);
  kv["learning_rate"] = format_double(learning_rate);
  kv["convention"] = to_string(convention);
  kv["iterations"] = join(iterations);
  kv["source"] = to_string(source);
  kv["classes"] = join(classes);
  kv["data_dir"] = data_dir;
  kv["gammas"] = join(gammas);
  kv["seeds"] = std::to_string(seeds);
  kv["out_dir"] = out_dir;
  return kv;
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, value] : to_map()) {
    if (key == "out_dir" || key == "data_dir") continue;
    out += key + " = " + value + "\n";
  }
  return out;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "seed") seed = parse_uint(key, value);
  else if (key == "n") n = parse_positive(key, value);
  else if (key == "m") m = parse_positive(key, value);
  else if (key == "m_rule") {
    if (value == "fixed") m_rule = MRule::Fixed;
    else if (value == "sqrt-n") m_rule = MRule::SqrtN;
    else if (value == "n2") m_rule = MRule::NSquared;
    else if (value == "list") m_rule = MRule::List;
    else throw std::invalid_argument("unknown m_rule: " + value);
  } else if (key == "m_list") m_list = parse_list(value, [&](const std::string& s) { return parse_positive(key, s); });
  else if (key == "d") d = parse_positive(key, value);
  else if (key == "feature") feature = parse_feature_kind(value);
  else if (key == "target") target = parse_target_kind(value);
  else if (key == "target_order") {
    const long long v = parse_int(key, value);
    if (v < 0) throw std::invalid_argument("target_order must be >= 0");
    target_order = static_cast<int>(v);
  } else if (key == "time_start") time_start = parse_double(key, value);
  else if (key == "time_stop") time_stop = parse_double(key, value);
  else if (key == "per_decade") per_decade = parse_positive(key, value);
  else if (key == "include_infinity") include_infinity = parse_bool(key, value);
  else if (key == "test_count") test_count = parse_positive(key, value);
  else if (key == "mc_count") mc_count = parse_positive(key, value);
  else if (key == "norm_samples") norm_samples = parse_positive(key, value);
  else if (key == "delta") {
    delta = parse_double(key, value);
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  } else if (key == "convention") {
    if (value == "flow") convention = TimeConvention::Flow;
    else if (value == "objective") convention = TimeConvention::Objective;
    else throw std::invalid_argument("unknown convention: " + value);
  } else if (key == "iterations") iterations = parse_list(value, [&](const std::string& s) { return parse_double(key, s); });
  else if (key == "source") {
    if (value == "sphere") source = DataSource::Sphere;
    else if (value == "mnist") source = DataSource::Mnist;
    else throw std::invalid_argument("unknown source: " + value);
  } else if (key == "classes") {
    classes = parse_list(value, [&](const std::string& s) { return static_cast<int>(parse_int(key, s)); });
  } else if (key == "data_dir") data_dir = value;
  else if (key == "gammas") gammas = parse_list(value, [&](const std::string& s) { return parse_double(key, s); });
  else if (key == "seeds") seeds = parse_positive(key, value);
  else if (key == "out_dir") out_dir = value;
  else throw std::invalid_argument("unknown config key: " + key);
}

void ExperimentConfig::apply(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got: " + assignment);
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      base.apply(line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

}  // namespace rfdyn

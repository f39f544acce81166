#pragma once

// Flat key = value experiment configuration with canonical serialization.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rfdyn/features.hpp"

namespace rfdyn {

enum class MRule { Fixed, SqrtN, NSquared, List };
enum class TimeConvention { Flow, Objective };
enum class DataSource { Sphere, Mnist };

std::string to_string(MRule rule);
std::string to_string(TimeConvention convention);
std::string to_string(DataSource source);

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int n = 500;
  int m = 500;
  MRule m_rule = MRule::Fixed;
  std::vector<int> m_list;  // MRule::List and sweeps over m
  int d = 10;
  FeatureKind feature = FeatureKind::Relu;
  TargetKind target = TargetKind::ConstantHarmonic;
  int target_order = 0;

  double time_start = -1.0;  // log10 of first grid time
  double time_stop = 10.0;   // log10 of last finite grid time
  int per_decade = 20;
  bool include_infinity = true;

  int test_count = 2000;
  int mc_count = 2000;         // points used for the assumption inner products
  int norm_samples = 100000;   // samples behind ||f*|| and E||phi||^2
  double delta = 0.1;

  double learning_rate = 0.0;  // 0 selects 1 / lambda_max of the convention's Hessian
  TimeConvention convention = TimeConvention::Flow;
  std::vector<double> iterations{1e4, 1e5, 1e6, 1e8};

  DataSource source = DataSource::Sphere;
  std::vector<int> classes{0, 1};
  std::string data_dir;  // empty: taken from the environment

  std::vector<double> gammas;  // sweeps over m / n
  int seeds = 1;               // sweep seeds seed .. seed + seeds - 1
  std::string out_dir = "out";

  /// m after applying the m-rule (List uses the first entry).
  int resolved_m() const;

  /// All options as strings, keyed by name.
  std::map<std::string, std::string> to_map() const;
  /// Canonical text: one "key = value" line per option, sorted by key.
  /// out_dir is excluded so relocating the output does not change the hash.
  std::string canonical() const;
  /// FNV-1a 64-bit hash of canonical(), as 16 hex digits.
  std::string hash() const;

  /// Applies one "key=value" assignment. Throws std::invalid_argument on an
  /// unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  void apply(const std::string& assignment);
};

/// Parses a config file body: blank lines and '#' comments are ignored.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

std::uint64_t fnv1a64(const std::string& bytes);

/// Shortest round-trip decimal form ("%.17g"), with "inf" / "-inf" / "nan".
std::string format_double(double value);

}  // namespace rfdyn

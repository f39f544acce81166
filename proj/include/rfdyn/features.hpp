#pragma once

// Data and feature sampling for the random feature model
// f(x) = sum_k a_k phi(x; b_k), plus target-function construction.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rfdyn {

using Rng = std::mt19937_64;

/// Independent, reproducible stream derived from a master seed and a tag.
/// Streams with different tags never share state, so e.g. the feature draw
/// does not shift when the number of data points changes.
Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

enum class Distribution { UniformSphere, External };

struct Dataset {
  Eigen::MatrixXd points;   // n x d, one sample per row
  Eigen::VectorXd targets;  // length n
  int dim = 0;
  Distribution distribution = Distribution::UniformSphere;

  Eigen::Index size() const { return points.rows(); }
};

enum class FeatureKind { Relu, Indicator, AffineRelu };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

struct FeatureSet {
  // m x d, or m x (d+1) for AffineRelu where the last column is the offset c.
  Eigen::MatrixXd directions;
  FeatureKind kind = FeatureKind::Relu;

  Eigen::Index count() const { return directions.rows(); }
  /// Dimension of the input points the features accept.
  int input_dim() const;
};

/// n x m matrix with entry (i, j) = phi(x_i; b_j).
using FeatureMatrix = Eigen::MatrixXd;

enum class TargetKind { ConstantHarmonic, Legendre, ExternalLabels };

std::string to_string(TargetKind kind);
TargetKind parse_target_kind(const std::string& name);

/// Exact-match lookup from a point to its label.
class LabelTable {
 public:
  void insert(const Eigen::Ref<const Eigen::VectorXd>& x, double label);
  double at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::size_t size() const { return labels_.size(); }
  double max_abs() const;

 private:
  std::map<std::vector<double>, double> labels_;
};

struct TargetSpec {
  TargetKind kind = TargetKind::ConstantHarmonic;
  int order = 0;              // Legendre only
  Eigen::VectorXd axis;       // Legendre only, unit vector e
  double normalization = 1.0;
  std::shared_ptr<const LabelTable> labels;  // ExternalLabels only

  static TargetSpec constant(double normalization = 1.0);
  /// Zonal harmonic sqrt(N(d,n)) * P_n(e^T x), unit l2 norm on the sphere.
  static TargetSpec legendre(int order, const Eigen::VectorXd& axis);
  static TargetSpec external(std::shared_ptr<const LabelTable> labels);
};

/// Rows are i.i.d. uniform on S^{dim-1} (normalized Gaussians).
Eigen::MatrixXd sample_sphere(std::uint64_t seed, int dim, int count);
Eigen::MatrixXd sample_sphere(Rng& rng, int dim, int count);

double eval_feature(FeatureKind kind, const Eigen::Ref<const Eigen::VectorXd>& b,
                    const Eigen::Ref<const Eigen::VectorXd>& x);

/// phi(x; B) for every feature, length m.
Eigen::VectorXd eval_features(const FeatureSet& feats,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

FeatureMatrix build_feature_matrix(const Eigen::MatrixXd& points, const FeatureSet& feats);
inline FeatureMatrix build_feature_matrix(const Dataset& data, const FeatureSet& feats) {
  return build_feature_matrix(data.points, feats);
}

double eval_target(const TargetSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd eval_targets(const TargetSpec& spec, const Eigen::MatrixXd& points);

/// Features with directions uniform on S^{dim-1} (S^dim for AffineRelu).
FeatureSet sample_features(Rng& rng, FeatureKind kind, int dim, int count);
FeatureSet sample_features(std::uint64_t seed, FeatureKind kind, int dim, int count);

/// Uniform-sphere dataset with targets from `target`.
Dataset sample_dataset(Rng& rng, int dim, int count, const TargetSpec& target);

/// Sup-norm bound on |phi(x; b)| over the given points (1 on the unit sphere
/// for relu/indicator).
double feature_sup_bound(FeatureKind kind, const Eigen::MatrixXd& points);
/// Sup-norm bound on |f*|.
double target_sup_bound(const TargetSpec& spec);

}  // namespace rfdyn

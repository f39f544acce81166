#include "rfdyn/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rfdyn/kernel_analytic.hpp"

namespace rfdyn {

Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Relu: return "relu";
    case FeatureKind::Indicator: return "indicator";
    case FeatureKind::AffineRelu: return "affine-relu";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "relu") return FeatureKind::Relu;
  if (name == "indicator") return FeatureKind::Indicator;
  if (name == "affine-relu") return FeatureKind::AffineRelu;
  throw std::invalid_argument("unknown feature kind: " + name);
}

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::ConstantHarmonic: return "constant-harmonic";
    case TargetKind::Legendre: return "legendre";
    case TargetKind::ExternalLabels: return "external-labels";
  }
  return "unknown";
}

TargetKind parse_target_kind(const std::string& name) {
  if (name == "constant-harmonic") return TargetKind::ConstantHarmonic;
  if (name == "legendre") return TargetKind::Legendre;
  if (name == "external-labels") return TargetKind::ExternalLabels;
  throw std::invalid_argument("unknown target kind: " + name);
}

int FeatureSet::input_dim() const {
  const auto cols = static_cast<int>(directions.cols());
  return kind == FeatureKind::AffineRelu ? cols - 1 : cols;
}

void LabelTable::insert(const Eigen::Ref<const Eigen::VectorXd>& x, double label) {
  labels_[std::vector<double>(x.data(), x.data() + x.size())] = label;
}

double LabelTable::max_abs() const {
  double out = 0.0;
  for (const auto& [key, label] : labels_) out = std::max(out, std::abs(label));
  return out;
}

double LabelTable::at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd copy = x;
  auto it = labels_.find(std::vector<double>(copy.data(), copy.data() + copy.size()));
  if (it == labels_.end()) throw std::out_of_range("point not present in label table");
  return it->second;
}

TargetSpec TargetSpec::constant(double normalization) {
  if (!(normalization > 0.0)) throw std::invalid_argument("normalization must be positive");
  TargetSpec spec;
  spec.kind = TargetKind::ConstantHarmonic;
  spec.normalization = normalization;
  return spec;
}

TargetSpec TargetSpec::legendre(int order, const Eigen::VectorXd& axis) {
  if (order < 0) throw std::invalid_argument("legendre order must be >= 0");
  const double norm = axis.norm();
  if (std::abs(norm - 1.0) > 1e-12) throw std::invalid_argument("legendre axis must be a unit vector");
  const int d = static_cast<int>(axis.size());
  if (d < 3) throw std::invalid_argument("legendre targets need dimension >= 3");
  TargetSpec spec;
  spec.kind = TargetKind::Legendre;
  spec.order = order;
  spec.axis = axis;
  spec.normalization = std::sqrt(static_cast<double>(harmonic_multiplicity(d, order)));
  return spec;
}

TargetSpec TargetSpec::external(std::shared_ptr<const LabelTable> labels) {
  if (!labels) throw std::invalid_argument("external target needs a label table");
  TargetSpec spec;
  spec.kind = TargetKind::ExternalLabels;
  spec.labels = std::move(labels);
  return spec;
}

Eigen::MatrixXd sample_sphere(Rng& rng, int dim, int count) {
  if (dim < 1) throw std::invalid_argument("sample_sphere: dimension must be >= 1");
  if (count < 1) throw std::invalid_argument("sample_sphere: count must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(count, dim);
  for (int i = 0; i < count; ++i) {
    double norm_sq = 0.0;
    do {
      for (int j = 0; j < dim; ++j) out(i, j) = normal(rng);
      norm_sq = out.row(i).squaredNorm();
    } while (norm_sq == 0.0);
    out.row(i) /= std::sqrt(norm_sq);
  }
  return out;
}

Eigen::MatrixXd sample_sphere(std::uint64_t seed, int dim, int count) {
  Rng rng = make_stream(seed, 0);
  return sample_sphere(rng, dim, count);
}

namespace {

double activate(FeatureKind kind, double pre) {
  switch (kind) {
    case FeatureKind::Indicator: return pre > 0.0 ? 1.0 : 0.0;
    case FeatureKind::Relu:
    case FeatureKind::AffineRelu: return pre > 0.0 ? pre : 0.0;
  }
  return 0.0;
}

}  // namespace

double eval_feature(FeatureKind kind, const Eigen::Ref<const Eigen::VectorXd>& b,
                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (kind == FeatureKind::AffineRelu) {
    if (b.size() != x.size() + 1) throw std::invalid_argument("eval_feature: dimension mismatch");
    return activate(kind, b.head(x.size()).dot(x) + b(x.size()));
  }
  if (b.size() != x.size()) throw std::invalid_argument("eval_feature: dimension mismatch");
  return activate(kind, b.dot(x));
}

Eigen::VectorXd eval_features(const FeatureSet& feats, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != feats.input_dim()) throw std::invalid_argument("eval_features: dimension mismatch");
  Eigen::VectorXd pre;
  if (feats.kind == FeatureKind::AffineRelu) {
    const auto d = x.size();
    pre = feats.directions.leftCols(d) * x + feats.directions.col(d);
  } else {
    pre = feats.directions * x;
  }
  return pre.unaryExpr([&](double v) { return activate(feats.kind, v); });
}

FeatureMatrix build_feature_matrix(const Eigen::MatrixXd& points, const FeatureSet& feats) {
  if (points.cols() != feats.input_dim())
    throw std::invalid_argument("build_feature_matrix: dimension mismatch");
  Eigen::MatrixXd pre;
  if (feats.kind == FeatureKind::AffineRelu) {
    const auto d = points.cols();
    pre = points * feats.directions.leftCols(d).transpose();
    pre.rowwise() += feats.directions.col(d).transpose();
  } else {
    pre = points * feats.directions.transpose();
  }
  return pre.unaryExpr([&](double v) { return activate(feats.kind, v); });
}

double eval_target(const TargetSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  switch (spec.kind) {
    case TargetKind::ConstantHarmonic: return spec.normalization;
    case TargetKind::Legendre: {
      if (x.size() != spec.axis.size()) throw std::invalid_argument("eval_target: dimension mismatch");
      const double t = std::clamp(spec.axis.dot(x), -1.0, 1.0);
      return spec.normalization * legendre(static_cast<int>(x.size()), spec.order, t);
    }
    case TargetKind::ExternalLabels:
      if (!spec.labels) throw std::invalid_argument("eval_target: missing label table");
      return spec.labels->at(x);
  }
  return 0.0;
}

Eigen::VectorXd eval_targets(const TargetSpec& spec, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = eval_target(spec, points.row(i).transpose());
  return out;
}

FeatureSet sample_features(Rng& rng, FeatureKind kind, int dim, int count) {
  FeatureSet feats;
  feats.kind = kind;
  feats.directions = sample_sphere(rng, kind == FeatureKind::AffineRelu ? dim + 1 : dim, count);
  return feats;
}

FeatureSet sample_features(std::uint64_t seed, FeatureKind kind, int dim, int count) {
  Rng rng = make_stream(seed, 1);
  return sample_features(rng, kind, dim, count);
}

Dataset sample_dataset(Rng& rng, int dim, int count, const TargetSpec& target) {
  Dataset data;
  data.points = sample_sphere(rng, dim, count);
  data.targets = eval_targets(target, data.points);
  data.dim = dim;
  data.distribution = Distribution::UniformSphere;
  return data;
}

double feature_sup_bound(FeatureKind kind, const Eigen::MatrixXd& points) {
  if (kind == FeatureKind::Indicator) return 1.0;
  const double max_norm = points.rows() > 0 ? points.rowwise().norm().maxCoeff() : 1.0;
  if (kind == FeatureKind::Relu) return max_norm;
  // |b.x + c| <= |(b, c)| |(x, 1)|
  return std::sqrt(max_norm * max_norm + 1.0);
}

double target_sup_bound(const TargetSpec& spec) {
  switch (spec.kind) {
    case TargetKind::ConstantHarmonic: return std::abs(spec.normalization);
    case TargetKind::Legendre: return std::abs(spec.normalization);  // |P_n| <= P_n(1) = 1
    case TargetKind::ExternalLabels:
      if (!spec.labels) throw std::invalid_argument("target_sup_bound: missing label table");
      return spec.labels->max_abs();
  }
  return 0.0;
}

}  // namespace rfdyn

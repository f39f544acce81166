#include "rfdyn/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace rfdyn {

GaussLegendreRule gauss_legendre_rule(int node_count) {
  if (node_count < 1) throw std::invalid_argument("gauss_legendre_rule: node_count must be >= 1");
  const int n = node_count;
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess; nodes are
  // symmetric so only half are computed.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

namespace {

const GaussLegendreRule& cached_rule(int node_count) {
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(node_count);
  if (it == cache.end()) it = cache.emplace(node_count, gauss_legendre_rule(node_count)).first;
  return it->second;
}

double panel(const std::function<double(double)>& f, double a, double b, const GaussLegendreRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

double refine(const std::function<double(double)>& f, double a, double b, double whole,
              const GaussLegendreRule& rule, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = panel(f, a, mid, rule);
  const double right = panel(f, mid, b, rule);
  if (std::abs(left + right - whole) <= tol) return left + right;
  if (depth <= 0) throw std::runtime_error("integrate: interval-halving budget exhausted");
  return refine(f, a, mid, left, rule, 0.5 * tol, depth - 1) +
         refine(f, mid, b, right, rule, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& opts) {
  if (opts.node_count < 1) throw std::invalid_argument("integrate: node_count must be >= 1");
  if (a == b) return 0.0;
  const auto& rule = cached_rule(opts.node_count);
  return refine(f, a, b, panel(f, a, b, rule), rule, opts.abs_tol, opts.max_depth);
}

double integrate_sphere_weight(const std::function<double(double)>& f, double power,
                               const QuadratureOptions& opts) {
  const double exponent = 2.0 * power + 1.0;
  return integrate(
      [&](double theta) {
        const double s = std::sin(theta);
        return std::pow(s, exponent) * f(std::cos(theta));
      },
      0.0, std::numbers::pi, opts);
}

}  // namespace rfdyn

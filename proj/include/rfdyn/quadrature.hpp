#pragma once

#include <functional>
#include <vector>

namespace rfdyn {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendreRule gauss_legendre_rule(int node_count);

struct QuadratureOptions {
  int node_count = 64;
  double abs_tol = 1e-12;
  int max_depth = 30;
};

/// Adaptive Gauss-Legendre with interval halving. A panel is accepted when the
/// single-panel estimate and the sum over its two halves agree to abs_tol.
/// Throws std::runtime_error if max_depth is exhausted.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

/// int_{-1}^{1} (1-t^2)^{power} f(t) dt through t = cos(theta), which turns the
/// endpoint weight into sin^{2 power + 1}(theta) and keeps the integrand smooth.
double integrate_sphere_weight(const std::function<double(double)>& f, double power,
                               const QuadratureOptions& opts = {});

}  // namespace rfdyn

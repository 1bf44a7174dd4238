#pragma once

#include <Eigen/Dense>

namespace beamsplit {

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Gauss-Hermite rule for the standard normal density: weights sum to one.
QuadratureRule gauss_hermite_normal(int order);

/// Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int order);

/// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <typename F>
double integrate_gauss_legendre(F&& f, double a, double b, const QuadratureRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * sum;
}

}  // namespace beamsplit

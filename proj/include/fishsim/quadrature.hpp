#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fishsim {

/// Nodes and weights of a quadrature rule on an interval.
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) sum += weights[k] * f(nodes[k]);
    return sum;
  }
};

namespace detail {

// P_K(x) and P_K'(x) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int K, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int n = 2; n <= K; ++n) {
    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
    p0 = p1;
    p1 = p2;
  }
  const double dp = K * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace detail

/// K-point Gauss-Legendre rule mapped to [a, b]; exact for polynomials of
/// degree 2K-1. Roots are polished by Newton iteration on P_K.
inline QuadratureGrid gauss_legendre(int K, double a, double b) {
  if (K < 1) throw std::invalid_argument("gauss_legendre: K must be >= 1, got " + std::to_string(K));
  if (!(a < b)) throw std::invalid_argument("gauss_legendre: need a < b");

  QuadratureGrid g;
  g.nodes.resize(K);
  g.weights.resize(K);
  if (K == 1) {
    g.nodes[0] = 0.5 * (a + b);
    g.weights[0] = b - a;
    return g;
  }

  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const int m = (K + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess for the i-th largest root.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (K + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      auto [p, d] = detail::legendre_with_derivative(K, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) <= 1e-16) break;
    }
    dp = detail::legendre_with_derivative(K, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // i counts down from the right end; store ascending.
    g.nodes[K - 1 - i] = mid + half * x;
    g.nodes[i] = mid - half * x;
    g.weights[K - 1 - i] = half * w;
    g.weights[i] = half * w;
  }
  if (K % 2 == 1) g.nodes[K / 2] = mid;
  return g;
}

/// sqrt(sum_k w_k rho(s_k) psi(s_k)^2), the density-weighted norm.
template <class Psi, class Rho>
double rho_norm(Psi&& psi_hat, Rho&& rho, const QuadratureGrid& grid) {
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double p = psi_hat(grid.nodes[k]);
    sum += grid.weights[k] * rho(grid.nodes[k]) * p * p;
  }
  if (sum < 0.0) throw std::logic_error("rho_norm: negative weighted inner product");
  return std::sqrt(sum);
}

}  // namespace fishsim

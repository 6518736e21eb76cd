#pragma once

// Derived model: quadrature grid, density-normalized Ritz basis, tabulated
// profile values and per-node cumulative sub-grids. Everything here is
// computed once from a ModelConfig and never mutated afterwards.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fishsim/added_mass.hpp"
#include "fishsim/config.hpp"
#include "fishsim/quadrature.hpp"

namespace fishsim {

/// psi_1 = 1 (rigid rotation about the joint); psi_n = s^(n-1) / ||s^(n-1)||_rho
/// for n >= 2, so every deformation mode vanishes at the joint.
struct RitzBasis {
  int count = 0;
  double length = 0.0;
  std::vector<double> norms;  // norms[0] = 1, norms[n-1] = ||s^(n-1)||_rho

  /// (psi_n(s), psi_n'(s)) for 1-based n.
  std::pair<double, double> eval(int n, double s) const {
    if (n < 1 || n > count) throw std::out_of_range("basis index " + std::to_string(n) + " outside [1, " + std::to_string(count) + "]");
    if (!(s >= 0.0 && s <= length)) throw std::out_of_range("basis evaluated outside [0, L2]");
    return eval_unchecked(n, s);
  }

  std::pair<double, double> eval_unchecked(int n, double s) const {
    if (n == 1) return {1.0, 0.0};
    const double inv = 1.0 / norms[n - 1];
    const double p = std::pow(s, n - 2);
    return {p * s * inv, (n - 1) * p * inv};
  }
};

inline RitzBasis make_basis(int count, const PolyProfile& rho, const QuadratureGrid& grid) {
  RitzBasis b;
  b.count = count;
  b.length = rho.length;
  b.norms.assign(count, 1.0);
  for (int n = 2; n <= count; ++n)
    b.norms[n - 1] = rho_norm([n](double s) { return std::pow(s, n - 1); }, rho, grid);
  return b;
}

inline std::pair<double, double> basis_eval(const RitzBasis& basis, int n, double s) { return basis.eval(n, s); }

/// Tabulated basis and profile data at a set of arc-length points. Each
/// point carries its own Gauss-Legendre sub-grid over [0, s] for the
/// cumulative position integrals.
struct SampleSet {
  int modes = 0;
  int inner = 0;
  std::vector<double> s;
  std::vector<double> weight;   // outer quadrature weight (zero for ad-hoc samples)
  std::vector<double> psi;      // [k * modes + n]
  std::vector<double> dpsi;     // [k * modes + n]
  std::vector<double> sub_w;    // [k * inner + j]
  std::vector<double> sub_psi;  // [(k * inner + j) * modes + n]
  std::vector<double> rho;      // linear density
  std::vector<double> bending;  // E(s) I(s)
  std::vector<double> rho_a;    // added mass per unit length
  std::vector<double> drho_a;   // d rho_a / ds

  std::size_t size() const { return s.size(); }
};

struct DerivedModel {
  ModelConfig config;
  QuadratureGrid grid;
  RitzBasis basis;
  SampleSet nodes;
  PolyProfile density;
  Eigen::Matrix3d head_added_mass = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d head_drag = Eigen::Matrix3d::Zero();
  double body_mass = 0.0;
  double m_total = 0.0;
  QuadratureGrid inner_reference;  // order-`inner` rule on [0, 1]

  int modes() const { return basis.count; }
  int dim() const { return basis.count + 3; }
  double length() const { return config.body.length; }

  /// Second moment of area of the elliptical section about the bending axis.
  double second_moment(double s) const {
    const double w = config.body.width.eval(s);
    return M_PI * config.body.height.eval(s) * w * w * w / 64.0;
  }
  double added_mass_per_length(double s) const {
    const double h = config.body.height.eval(s);
    return 0.25 * M_PI * config.fluid.rho_water * h * h;
  }
  double added_mass_per_length_derivative(double s) const {
    return 0.5 * M_PI * config.fluid.rho_water * config.body.height.eval(s) * config.body.height.derivative(s);
  }

  /// Tabulates an arbitrary list of points (used for dense sampling and for
  /// the end points s = 0, L2). Outer weights are zero.
  SampleSet samples_at(const std::vector<double>& points) const {
    return tabulate(points, std::vector<double>(points.size(), 0.0));
  }

  SampleSet tabulate(const std::vector<double>& points, const std::vector<double>& weights) const {
    SampleSet out;
    const int N = modes();
    const int M = static_cast<int>(inner_reference.size());
    out.modes = N;
    out.inner = M;
    out.s = points;
    out.weight = weights;
    const std::size_t K = points.size();
    out.psi.resize(K * N);
    out.dpsi.resize(K * N);
    out.sub_w.resize(K * M);
    out.sub_psi.resize(K * M * N);
    out.rho.resize(K);
    out.bending.resize(K);
    out.rho_a.resize(K);
    out.drho_a.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      const double s = points[k];
      for (int n = 0; n < N; ++n) {
        auto [p, dp] = basis.eval(n + 1, s);
        out.psi[k * N + n] = p;
        out.dpsi[k * N + n] = dp;
      }
      for (int j = 0; j < M; ++j) {
        const double sigma = s * inner_reference.nodes[j];
        out.sub_w[k * M + j] = s * inner_reference.weights[j];
        for (int n = 0; n < N; ++n) out.sub_psi[(k * M + j) * N + n] = basis.eval_unchecked(n + 1, sigma).first;
      }
      out.rho[k] = density.eval(s);
      out.bending[k] = config.body.youngs_modulus.eval(s) * second_moment(s);
      out.rho_a[k] = added_mass_per_length(s);
      out.drho_a[k] = added_mass_per_length_derivative(s);
    }
    return out;
  }
};

inline DerivedModel derive_model(const ModelConfig& config) {
  validate(config);
  DerivedModel m;
  m.config = config;
  m.density = config.density_profile();
  m.grid = gauss_legendre(config.numerics.node_count(), 0.0, config.body.length);
  m.inner_reference = gauss_legendre(config.numerics.inner_order, 0.0, 1.0);
  m.basis = make_basis(config.numerics.modes, m.density, m.grid);
  m.nodes = m.tabulate(m.grid.nodes, m.grid.weights);
  m.head_added_mass = config.head.added_mass ? *config.head.added_mass
                                             : ellipsoid_added_mass(config.head.semi_axes, config.fluid.rho_water);
  m.head_drag = config.head.drag;
  m.body_mass = m.grid.integrate([&](double s) { return m.density.eval(s); });
  m.m_total = config.head.mass + m.body_mass;
  return m;
}

using ModelPtr = std::shared_ptr<const DerivedModel>;

inline ModelPtr make_model(const ModelConfig& config) { return std::make_shared<const DerivedModel>(derive_model(config)); }

}  // namespace fishsim

#pragma once

// Fluid loads: reactive (added-mass) force along the slender body, the
// added-mass reaction and linear drag on the head, and resistive drag on
// the body.

#include <Eigen/Dense>

#include <cmath>

#include "fishsim/kinematics.hpp"
#include "fishsim/model.hpp"

namespace fishsim {

/// Reactive force per unit length at one interior node, from the normal
/// momentum balance of a thin slice of added mass:
///   f_r = d/ds(rho_a v_n v_t) e_n - d/ds(1/2 rho_a v_n^2) e_t - d/dt(rho_a v_n e_n)
/// The s-derivatives act on the scalar fluxes only; the slice's own frame is
/// held fixed across ds. Requires Acceleration-level kinematics.
inline Vec2<double> reactive_body_force(const NodeKinematics<double>& nk, double rho_a, double drho_a, double omega) {
  const double vn = nk.v_n;
  const double vt = nk.v_t;
  const double spin = omega + nk.phi_dot;
  const double convective = drho_a * vn * vt + rho_a * (nk.dv_n_ds * vt + vn * nk.dv_t_ds);
  const double pressure = 0.5 * drho_a * vn * vn + rho_a * vn * nk.dv_n_ds;
  // d/dt(rho_a v_n e_n) = rho_a v_n_dot e_n - rho_a v_n spin e_t
  return (convective - rho_a * nk.v_n_dot) * nk.e_n + (rho_a * vn * spin - pressure) * nk.e_t;
}

/// Head rotation B = blockdiag(R(theta), 1) mapping body-frame load
/// components to (X, Y, theta).
inline Eigen::Matrix3d head_frame(double theta) {
  Eigen::Matrix3d B = Eigen::Matrix3d::Identity();
  const double c = std::cos(theta), s = std::sin(theta);
  B(0, 0) = c;
  B(0, 1) = -s;
  B(1, 0) = s;
  B(1, 1) = c;
  return B;
}

/// Added-mass matrix of the head in (X, Y, theta) coordinates.
inline Eigen::Matrix3d head_added_mass_inertial(const DerivedModel& model, double theta) {
  const Eigen::Matrix3d B = head_frame(theta);
  return B * model.head_added_mass * B.transpose();
}

/// [F_x, F_y, tau] on the head from its added mass: -B M_a [R^T a_G; alpha].
inline Eigen::Vector3d head_reactive(const DerivedModel& model, double theta, const Eigen::Vector3d& head_accel) {
  return -head_added_mass_inertial(model, theta) * head_accel;
}

/// Linear head drag with a body-frame damping matrix, in (X, Y, theta).
inline Eigen::Vector3d head_drag_load(const DerivedModel& model, double theta, const Eigen::Vector3d& head_velocity) {
  const Eigen::Matrix3d B = head_frame(theta);
  return -(B * model.head_drag * B.transpose()) * head_velocity;
}

/// Resistive drag per unit length, -c_d v_s.
inline Vec2<double> body_drag_force(const DerivedModel& model, const NodeKinematics<double>& nk) {
  return (-model.config.fluid.body_drag) * nk.v;
}

/// Generalized drag loads (head + body) for a state whose body kinematics
/// and node Jacobians are already known. `jac` is (2K x N_q).
inline Eigen::VectorXd drag_loads(const DerivedModel& model, const GeneralizedState& state, const BodyState& body,
                                  const Eigen::MatrixXd& jac) {
  Eigen::VectorXd Q = Eigen::VectorXd::Zero(state.dim());
  Q.head<3>() = head_drag_load(model, state.q[2], state.qd.head<3>());
  if (model.config.fluid.body_drag == 0.0) return Q;
  for (std::size_t k = 0; k < body.nodes.size(); ++k) {
    const Vec2<double> f = body_drag_force(model, body.nodes[k]);
    const auto r = static_cast<Eigen::Index>(2 * k);
    Q += model.nodes.weight[k] * (jac.row(r).transpose() * f.x + jac.row(r + 1).transpose() * f.y);
  }
  return Q;
}

}  // namespace fishsim

#pragma once

// Projected weak form M qdd = F.
//
// Two interchangeable routes build the structural part from the kinetic
// energy T(q, qd):
//   Jacobian: M_T = diag(m1, m1, I1) + sum_k w_k rho_k J_k^T J_k and
//             F_T = -sum_k w_k rho_k J_k^T a_k(qdd = 0), with J_k = dr_k/dq
//             from forward-mode duals;
//   Hessian:  M_T = d2T/dqd2 and F_T = dT/dq - (d2T/dqd dq) qd from nested
//             duals over (q, qd).
// Both are exact for the discretized T and agree to round-off. The reactive
// body loads are affine in qdd; their linear part is moved into M.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fishsim/ad/derivatives.hpp"
#include "fishsim/hydrodynamics.hpp"
#include "fishsim/kinematics.hpp"
#include "fishsim/model.hpp"

namespace fishsim {

struct SingularSystemError : std::runtime_error {
  double time;
  SingularSystemError(double t, const std::string& msg) : std::runtime_error(msg), time(t) {}
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxCondition = 1e14;

/// dr_k/dq for every quadrature node stacked as (2K x N_q), with the
/// gradient of the elastic energy from the same dual pass.
struct NodeJacobians {
  Eigen::MatrixXd J;
  Eigen::VectorXd grad_V;
};

inline NodeJacobians node_jacobians(const DerivedModel& model, const Eigen::VectorXd& q) {
  const int nq = model.dim();
  return ad::with_width<4, 3 + kMaxModes>(nq, [&]<int W>() {
    using D = ad::Dual1<W>;
    const std::vector<D> x = ad::seed<W>(q);
    const std::span<const D> sq(x);
    std::vector<NodeKinematics<D>> nodes;
    field_nodes<D>(model.nodes, sq, {}, {}, Level::Position, nodes);
    const auto head = head_kinematics<D>(sq, {}, {}, model.config.head.com_to_joint);
    body_kinematics<D>(head, Level::Position, nodes);
    NodeJacobians out;
    out.J.resize(2 * static_cast<Eigen::Index>(nodes.size()), nq);
    for (std::size_t k = 0; k < nodes.size(); ++k)
      for (int c = 0; c < W; ++c) {
        out.J(2 * k, c) = nodes[k].r.x.partials[c];
        out.J(2 * k + 1, c) = nodes[k].r.y.partials[c];
      }
    const D v = potential_energy<D>(model, sq);
    out.grad_V = Eigen::Map<const Eigen::VectorXd>(v.partials.data(), W);
    return out;
  });
}

/// Structural mass matrix and velocity-dependent force from T.
struct KineticTerms {
  Eigen::MatrixXd M;
  Eigen::VectorXd F;
};

inline KineticTerms kinetic_terms_jacobian(const DerivedModel& model, const BodyState& body0,
                                           const Eigen::MatrixXd& J) {
  const int nq = model.dim();
  KineticTerms out{Eigen::MatrixXd::Zero(nq, nq), Eigen::VectorXd::Zero(nq)};
  out.M(0, 0) = model.config.head.mass;
  out.M(1, 1) = model.config.head.mass;
  out.M(2, 2) = model.config.head.inertia;
  for (std::size_t k = 0; k < body0.nodes.size(); ++k) {
    const double m = model.nodes.weight[k] * model.nodes.rho[k];
    const auto Jk = J.middleRows(2 * static_cast<Eigen::Index>(k), 2);
    out.M.noalias() += m * Jk.transpose() * Jk;
    const Eigen::Vector2d a0(body0.nodes[k].a.x, body0.nodes[k].a.y);
    out.F.noalias() -= m * Jk.transpose() * a0;
  }
  return out;
}

inline KineticTerms kinetic_terms_hessian(const DerivedModel& model, const GeneralizedState& state) {
  const int nq = model.dim();
  Eigen::VectorXd z(2 * nq);
  z << state.q, state.qd;
  const auto vgh = ad::with_width<8, 2 * (3 + kMaxModes)>(2 * nq, [&]<int W>() {
    return ad::hessian_full<W>(
        [&](const auto& x) {
          using S = typename std::decay_t<decltype(x)>::value_type;
          return kinetic_energy<S>(model, std::span<const S>(x.data(), nq), std::span<const S>(x.data() + nq, nq));
        },
        z);
  });
  KineticTerms out;
  out.M = vgh.hessian.bottomRightCorner(nq, nq);
  out.F = vgh.gradient.head(nq) - vgh.hessian.bottomLeftCorner(nq, nq) * state.qd;
  return out;
}

struct EquationsOfMotion {
  Eigen::MatrixXd M;
  Eigen::VectorXd F;
  double condition = 1.0;

  // breakdown, kept for diagnostics and the power balance
  Eigen::MatrixXd M_kinetic;
  Eigen::VectorXd F_kinetic;
  Eigen::Matrix3d head_added_mass;  // in (X, Y, theta)
  Eigen::MatrixXd reactive_A;       // d(sum w J^T f_r)/dqdd
  Eigen::VectorXd reactive_b;       // sum w J^T f_r at qdd = 0
  Eigen::VectorXd drag;
  Eigen::VectorXd elastic;          // -grad V
  Eigen::VectorXd motor;

  /// Generalized fluid load at a given qdd (reactive body + head added mass + drag).
  Eigen::VectorXd fluid_load(const Eigen::VectorXd& qdd) const {
    Eigen::VectorXd Q = reactive_A * qdd + reactive_b + drag;
    Q.head<3>() -= head_added_mass * qdd.head<3>();
    return Q;
  }
};

namespace detail {

// Reactive generalized load u -> sum_k w_k J_k^T f_r,k(u) with a_k = a0_k + J_k u.
struct ReactiveLoad {
  const DerivedModel& model;
  const BodyState& body0;
  const Eigen::MatrixXd& J;

  Eigen::VectorXd operator()(const Eigen::VectorXd& u) const {
    Eigen::VectorXd Q = Eigen::VectorXd::Zero(J.cols());
    const Eigen::VectorXd Ju = J * u;
    const auto& smp = model.nodes;
    for (std::size_t k = 0; k < body0.nodes.size(); ++k) {
      NodeKinematics<double> nk = body0.nodes[k];
      nk.a += Vec2<double>{Ju[2 * k], Ju[2 * k + 1]};
      nk.v_n_dot = dot(nk.a, nk.e_n) - (body0.head.omega + nk.phi_dot) * nk.v_t;
      const Vec2<double> f = reactive_body_force(nk, smp.rho_a[k], smp.drho_a[k], body0.head.omega);
      const auto r = static_cast<Eigen::Index>(2 * k);
      Q.noalias() += smp.weight[k] * (J.row(r).transpose() * f.x + J.row(r + 1).transpose() * f.y);
    }
    return Q;
  }
};

inline void require_finite(const Eigen::MatrixXd& M, const Eigen::VectorXd& F, double t) {
  if (!M.allFinite() || !F.allFinite())
    throw NonFiniteError("non-finite entries in the equations of motion at t = " + std::to_string(t));
}

}  // namespace detail

inline EquationsOfMotion assemble(const DerivedModel& model, const GeneralizedState& state, double tau_m) {
  const int nq = model.dim();
  if (state.q.size() != nq || state.qd.size() != nq)
    throw std::invalid_argument("assemble: state dimension " + std::to_string(state.q.size()) + " != " +
                                std::to_string(nq));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nq);
  const BodyState body0 = evaluate_body(model, state, zero);
  const NodeJacobians jac = node_jacobians(model, state.q);

  EquationsOfMotion eom;
  KineticTerms kt = model.config.numerics.assembly == AssemblyRoute::Hessian ? kinetic_terms_hessian(model, state)
                                                                             : kinetic_terms_jacobian(model, body0, jac.J);
  eom.M_kinetic = std::move(kt.M);
  eom.F_kinetic = std::move(kt.F);
  eom.elastic = -jac.grad_V;
  eom.motor = zero;
  eom.motor[3] = tau_m;
  eom.head_added_mass = head_added_mass_inertial(model, state.q[2]);
  eom.drag = drag_loads(model, state, body0, jac.J);

  if (model.config.fluid.rho_water > 0.0) {
    const ad::AffineMap map = ad::affine_extract(detail::ReactiveLoad{model, body0, jac.J}, nq);
    eom.reactive_A = map.A;
    eom.reactive_b = map.b;
  } else {
    eom.reactive_A = Eigen::MatrixXd::Zero(nq, nq);
    eom.reactive_b = zero;
  }

  eom.M = eom.M_kinetic - eom.reactive_A;
  eom.M.topLeftCorner<3, 3>() += eom.head_added_mass;
  eom.F = eom.F_kinetic + eom.elastic + eom.motor + eom.drag + eom.reactive_b;
  detail::require_finite(eom.M, eom.F, state.t);
  return eom;
}

/// Solution of M qdd = F with the reciprocal condition estimate of M.
struct AccelerationResult {
  Eigen::VectorXd qdd;
  double condition = 1.0;
};

inline AccelerationResult solve_accelerations(const EquationsOfMotion& eom, double t) {
  detail::require_finite(eom.M, eom.F, t);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(eom.M);
  // rcond() is an estimate; an exactly zero pivot is caught separately
  const double pivot_ratio = lu.matrixLU().diagonal().cwiseAbs().minCoeff() /
                             std::max(lu.matrixLU().diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const double rcond = std::min(lu.rcond(), pivot_ratio);
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition))
    throw SingularSystemError(t, "mass matrix is numerically singular at t = " + std::to_string(t) +
                                     " (condition estimate " + std::to_string(cond) + ")");
  AccelerationResult out{lu.solve(eom.F), cond};
  if (!out.qdd.allFinite()) throw NonFiniteError("non-finite accelerations at t = " + std::to_string(t));
  return out;
}

inline Eigen::VectorXd accelerations(const DerivedModel& model, const GeneralizedState& state, double tau_m) {
  return solve_accelerations(assemble(model, state, tau_m), state.t).qdd;
}

/// d/dt(T + V) minus the power delivered by the motor and the fluid. The
/// energy rate is the directional derivative along (qd, qdd) taken with a
/// one-direction dual, independently of the assembled matrices.
inline double power_balance(const DerivedModel& model, const GeneralizedState& state, const Eigen::VectorXd& qdd,
                            double tau_m) {
  const int nq = model.dim();
  using D = ad::Dual1<1>;
  std::vector<D> q(nq), qd(nq);
  for (int i = 0; i < nq; ++i) {
    q[i] = D(state.q[i], {state.qd[i]});
    qd[i] = D(state.qd[i], {qdd[i]});
  }
  const D T = kinetic_energy<D>(model, q, qd);
  const D V = potential_energy<D>(model, std::span<const D>(q));
  const double energy_rate = T.partials[0] + V.partials[0];

  const EquationsOfMotion eom = assemble(model, state, tau_m);
  const double input = tau_m * state.qd[3] + state.qd.dot(eom.fluid_load(qdd));
  return energy_rate - input;
}

}  // namespace fishsim

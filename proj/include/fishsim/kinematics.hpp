#pragma once

// Kinematics of the rigid head and the inextensible body.
//
// Generalized coordinates q = [X_G1, Y_G1, theta_G1, q_1 .. q_N]. The joint
// frame rotates with the head; the body's tangent angle relative to it is
// phi(s) = sum_n q_n psi_n(s) and its joint-frame position is
//   x2(s) = int_0^s cos(phi),  y2(s) = int_0^s sin(phi)
// evaluated per node with its own Gauss-Legendre sub-grid. Every routine is
// templated on the scalar so that the same code is differentiated by the
// dual-number types in fishsim/ad.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "fishsim/ad/dual.hpp"
#include "fishsim/model.hpp"

namespace fishsim {

template <class S>
struct Vec2 {
  S x{};
  S y{};

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend Vec2 operator*(const S& k, const Vec2& v) { return {k * v.x, k * v.y}; }
  friend Vec2 operator*(double k, const Vec2& v)
    requires(!std::is_same_v<S, double>)
  {
    return {k * v.x, k * v.y};
  }
};

template <class S>
S dot(const Vec2<S>& a, const Vec2<S>& b) {
  return a.x * b.x + a.y * b.y;
}

/// K x v for a planar vector v.
template <class S>
Vec2<S> perp(const Vec2<S>& v) {
  return {-v.y, v.x};
}

template <class S>
Vec2<S> rotate(const S& c, const S& s, const Vec2<S>& v) {
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct GeneralizedState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  double t = 0.0;

  static GeneralizedState zero(int dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim), 0.0};
  }
  int dim() const { return static_cast<int>(q.size()); }
};

enum class Level { Position, Velocity, Acceleration };

template <class S>
struct HeadKinematics {
  S cos_theta{}, sin_theta{};
  S omega{}, alpha{};
  Vec2<S> r_G, v_G, a_G;
  Vec2<S> r_J, v_J, a_J;
};

/// Head COM and joint motion. `qdd` may be empty, in which case the
/// accelerations are left at zero.
template <class S>
HeadKinematics<S> head_kinematics(std::span<const S> q, std::span<const S> qd, std::span<const S> qdd,
                                  double com_to_joint) {
  using std::cos;
  using std::sin;
  HeadKinematics<S> h;
  const double L = com_to_joint;
  h.cos_theta = cos(q[2]);
  h.sin_theta = sin(q[2]);
  h.r_G = {q[0], q[1]};
  const Vec2<S> i1{h.cos_theta, h.sin_theta};
  const Vec2<S> lever = -L * i1;  // G1 -> J
  h.r_J = h.r_G + lever;
  if (qd.empty()) return h;
  h.v_G = {qd[0], qd[1]};
  h.omega = qd[2];
  h.v_J = h.v_G + h.omega * perp(lever);
  if (qdd.empty()) return h;
  h.a_G = {qdd[0], qdd[1]};
  h.alpha = qdd[2];
  h.a_J = h.a_G + h.alpha * perp(lever) - (h.omega * h.omega) * lever;
  return h;
}

template <class S>
struct NodeKinematics {
  // joint-frame field
  S phi{}, dphi_ds{}, phi_dot{}, phi_ddot{};
  S x2{}, y2{}, x2_dot{}, y2_dot{}, x2_ddot{}, y2_ddot{};
  S dx2_ds{}, dy2_ds{};
  // inertial frame
  Vec2<S> r, v, a, e_t, e_n;
  S v_n{}, v_t{}, dv_n_ds{}, dv_t_ds{}, v_n_dot{};
};

/// Angle field, joint-frame positions and their s- and t-derivatives at
/// every sample point. The cumulative integrals use each point's sub-grid;
/// d(x2)/ds = cos(phi) and d(y2)/ds = sin(phi) follow from differentiating
/// the integral's upper limit.
template <class S>
void field_nodes(const SampleSet& samples, std::span<const S> q, std::span<const S> qd, std::span<const S> qdd,
                 Level level, std::vector<NodeKinematics<S>>& out) {
  using std::cos;
  using std::sin;
  const int N = samples.modes;
  const int M = samples.inner;
  const std::size_t K = samples.size();
  out.resize(K);
  const bool vel = level != Level::Position;
  const bool acc = level == Level::Acceleration;
  std::span<const S> qc = q.subspan(3, N);
  std::span<const S> qdc = vel ? qd.subspan(3, N) : std::span<const S>{};
  std::span<const S> qddc = acc ? qdd.subspan(3, N) : std::span<const S>{};

  for (std::size_t k = 0; k < K; ++k) {
    NodeKinematics<S>& nk = out[k];
    nk = NodeKinematics<S>{};
    const double* psi = &samples.psi[k * N];
    const double* dpsi = &samples.dpsi[k * N];
    S phi{}, dphi{}, phid{}, phidd{};
    for (int n = 0; n < N; ++n) {
      phi += psi[n] * qc[n];
      dphi += dpsi[n] * qc[n];
      if (vel) phid += psi[n] * qdc[n];
      if (acc) phidd += psi[n] * qddc[n];
    }
    nk.phi = phi;
    nk.dphi_ds = dphi;
    nk.phi_dot = phid;
    nk.phi_ddot = phidd;
    nk.dx2_ds = cos(phi);
    nk.dy2_ds = sin(phi);

    S x{}, y{}, xd{}, yd{}, xdd{}, ydd{};
    for (int j = 0; j < M; ++j) {
      const double w = samples.sub_w[k * M + j];
      const double* sp = &samples.sub_psi[(k * M + j) * N];
      S a{}, ad{}, add{};
      for (int n = 0; n < N; ++n) {
        a += sp[n] * qc[n];
        if (vel) ad += sp[n] * qdc[n];
        if (acc) add += sp[n] * qddc[n];
      }
      const S ca = cos(a);
      const S sa = sin(a);
      x += w * ca;
      y += w * sa;
      if (vel) {
        xd += w * (-(ad * sa));
        yd += w * (ad * ca);
      }
      if (acc) {
        const S ad2 = ad * ad;
        xdd += w * (-(add * sa) - ad2 * ca);
        ydd += w * (add * ca - ad2 * sa);
      }
    }
    nk.x2 = x;
    nk.y2 = y;
    nk.x2_dot = xd;
    nk.y2_dot = yd;
    nk.x2_ddot = xdd;
    nk.y2_ddot = ydd;
  }
}

/// Inertial positions, velocities and accelerations of the body points,
/// composed from the joint motion and the relative field:
///   v_s = v_J + R(x2', y2')_t + omega K x r_s/J
///   a_s = a_J + R(x2, y2)_tt + alpha K x r + omega K x (omega K x r) + 2 omega K x v_rel
/// together with the tangent/normal frame and the normal/tangential
/// velocity components with their s-derivatives.
template <class S>
void body_kinematics(const HeadKinematics<S>& head, Level level, std::vector<NodeKinematics<S>>& nodes) {
  using std::cos;
  using std::sin;
  const bool vel = level != Level::Position;
  const bool acc = level == Level::Acceleration;
  const S& c = head.cos_theta;
  const S& s = head.sin_theta;
  for (auto& nk : nodes) {
    const Vec2<S> rel = rotate(c, s, Vec2<S>{nk.x2, nk.y2});
    nk.r = head.r_J + rel;
    nk.e_t = rotate(c, s, Vec2<S>{nk.dx2_ds, nk.dy2_ds});
    nk.e_n = perp(nk.e_t);
    if (!vel) continue;
    const Vec2<S> vrel = rotate(c, s, Vec2<S>{nk.x2_dot, nk.y2_dot});
    nk.v = head.v_J + vrel + head.omega * perp(rel);
    nk.v_n = dot(nk.v, nk.e_n);
    nk.v_t = dot(nk.v, nk.e_t);
    // dv_s/ds = (omega + phi_dot) e_n, de_t/ds = phi' e_n, de_n/ds = -phi' e_t
    const S spin = head.omega + nk.phi_dot;
    nk.dv_n_ds = spin - nk.dphi_ds * nk.v_t;
    nk.dv_t_ds = nk.dphi_ds * nk.v_n;
    if (!acc) continue;
    const Vec2<S> arel = rotate(c, s, Vec2<S>{nk.x2_ddot, nk.y2_ddot});
    nk.a = head.a_J + arel + head.alpha * perp(rel) - (head.omega * head.omega) * rel +
           (2.0 * head.omega) * perp(vrel);
    // d/dt (v . e_n) with de_n/dt = -(omega + phi_dot) e_t
    nk.v_n_dot = dot(nk.a, nk.e_n) - spin * nk.v_t;
  }
}

/// Double-precision snapshot of head and body kinematics.
struct BodyState {
  HeadKinematics<double> head;
  std::vector<NodeKinematics<double>> nodes;
};

inline BodyState evaluate_body(const DerivedModel& model, const SampleSet& samples, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd) {
  BodyState b;
  const std::span<const double> sq(q.data(), q.size()), sqd(qd.data(), qd.size()), sqdd(qdd.data(), qdd.size());
  b.head = head_kinematics<double>(sq, sqd, sqdd, model.config.head.com_to_joint);
  field_nodes<double>(samples, sq, sqd, sqdd, Level::Acceleration, b.nodes);
  body_kinematics<double>(b.head, Level::Acceleration, b.nodes);
  return b;
}

inline BodyState evaluate_body(const DerivedModel& model, const GeneralizedState& state, const Eigen::VectorXd& qdd) {
  return evaluate_body(model, model.nodes, state.q, state.qd, qdd);
}

// ---------------------------------------------------------------------------
// energies

template <class S>
S kinetic_energy(const DerivedModel& model, std::span<const S> q, std::span<const S> qd) {
  const auto& head = model.config.head;
  auto h = head_kinematics<S>(q, qd, {}, head.com_to_joint);
  std::vector<NodeKinematics<S>> nodes;
  field_nodes<S>(model.nodes, q, qd, {}, Level::Velocity, nodes);
  body_kinematics<S>(h, Level::Velocity, nodes);
  S t = (0.5 * head.mass) * dot(h.v_G, h.v_G) + (0.5 * head.inertia) * (h.omega * h.omega);
  for (std::size_t k = 0; k < nodes.size(); ++k)
    t += (0.5 * model.nodes.weight[k] * model.nodes.rho[k]) * dot(nodes[k].v, nodes[k].v);
  return t;
}

template <class S>
S potential_energy(const DerivedModel& model, std::span<const S> q) {
  const int N = model.modes();
  const auto& smp = model.nodes;
  S v{};
  for (std::size_t k = 0; k < smp.size(); ++k) {
    S dphi{};
    for (int n = 0; n < N; ++n) dphi += smp.dpsi[k * N + n] * q[3 + n];
    v += (0.5 * smp.weight[k] * smp.bending[k]) * (dphi * dphi);
  }
  return v;
}

inline std::pair<double, double> energies(const DerivedModel& model, const GeneralizedState& state) {
  const std::span<const double> q(state.q.data(), state.q.size()), qd(state.qd.data(), state.qd.size());
  return {kinetic_energy<double>(model, q, qd), potential_energy<double>(model, q)};
}

/// Total linear momentum m1 v_G + int rho v_s ds.
inline Eigen::Vector2d linear_momentum(const DerivedModel& model, const GeneralizedState& state) {
  const auto b = evaluate_body(model, state, Eigen::VectorXd::Zero(state.dim()));
  Eigen::Vector2d p = model.config.head.mass * Eigen::Vector2d(b.head.v_G.x, b.head.v_G.y);
  for (std::size_t k = 0; k < b.nodes.size(); ++k)
    p += model.nodes.weight[k] * model.nodes.rho[k] * Eigen::Vector2d(b.nodes[k].v.x, b.nodes[k].v.y);
  return p;
}

}  // namespace fishsim

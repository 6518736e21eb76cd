#pragma once

// Single simulation runs: the fish right-hand side, open- and closed-loop
// drivers, the sampled trajectory and its steady-state metrics.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fishsim/config.hpp"
#include "fishsim/control.hpp"
#include "fishsim/eom.hpp"
#include "fishsim/integrators.hpp"
#include "fishsim/kinematics.hpp"
#include "fishsim/model.hpp"

namespace fishsim {

enum class Scenario { OpenLoop, ClosedLoop };

/// Prescribed motor torque, replacing the PD servo in open-loop runs.
using TorqueLaw = std::function<double(double t, const GeneralizedState& state)>;

struct RunOptions {
  Scenario scenario = Scenario::OpenLoop;
  double duration = 5.0;  // [s]
  double v_ref = 0.1;     // closed loop only [m/s]
  std::optional<TorqueLaw> torque;
  std::optional<GeneralizedState> initial;  // overrides config.initial_state
};

struct Trajectory {
  int dim = 0;
  double sample_dt = 0.0;
  std::vector<double> t, tau, f_cmd;
  std::vector<Eigen::VectorXd> q, qd;
  std::vector<double> v_i, v_f, phase, kinetic, potential;

  // metadata
  std::string config_hash;
  Eigen::Vector2d forward{-1.0, 0.0};  // unit swimming direction (head heading at t = 0)
  IntegrationStats stats;
  double max_condition = 0.0;
  double wall_time = 0.0;  // [s]

  std::size_t size() const { return t.size(); }
};

struct SimulationError : std::runtime_error {
  double time;
  Eigen::VectorXd last_state;  // [q; qd] at the last recorded sample
  SimulationError(double t, Eigen::VectorXd last, const std::string& msg)
      : std::runtime_error(msg), time(t), last_state(std::move(last)) {}
};

/// FNV-1a of the serialized configuration; identifies the inputs of a run.
inline std::string config_hash(const ModelConfig& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize(config)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// First-order form y = [q; qd], y' = [qd; qdd(q, qd, tau(t, q, qd))].
inline Rhs fish_rhs(const DerivedModel& model, std::function<double(double, const GeneralizedState&)> torque) {
  const int nq = model.dim();
  return [&model, nq, torque = std::move(torque)](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    const GeneralizedState s{y.head(nq), y.tail(nq), t};
    Eigen::VectorXd d(2 * nq);
    d << s.qd, accelerations(model, s, torque(t, s));
    return d;
  };
}

inline GeneralizedState initial_state(const ModelConfig& config) {
  const int nq = config.numerics.modes + 3;
  GeneralizedState s = GeneralizedState::zero(nq);
  if (config.initial_state) {
    const auto& init = *config.initial_state;
    if (!init.q.empty()) s.q = Eigen::Map<const Eigen::VectorXd>(init.q.data(), static_cast<Eigen::Index>(init.q.size()));
    if (!init.qd.empty())
      s.qd = Eigen::Map<const Eigen::VectorXd>(init.qd.data(), static_cast<Eigen::Index>(init.qd.size()));
  }
  return s;
}

inline Trajectory run_trajectory(const DerivedModel& model, const RunOptions& options) {
  if (!(options.duration > 0.0)) throw std::invalid_argument("run_simulation: duration must be positive");
  if (options.scenario == Scenario::ClosedLoop && !(options.v_ref > 0.0))
    throw std::invalid_argument("run_simulation: v_ref must be positive");
  const auto started = std::chrono::steady_clock::now();
  const ModelConfig& cfg = model.config;
  const int nq = model.dim();
  const double dt = cfg.numerics.sample_dt;

  GeneralizedState s0 = options.initial ? *options.initial : initial_state(cfg);
  if (s0.dim() != nq || s0.qd.size() != nq)
    throw std::invalid_argument("run_simulation: initial state has dimension " + std::to_string(s0.dim()) +
                                ", model needs " + std::to_string(nq));
  const double t0 = s0.t;

  Trajectory traj;
  traj.dim = nq;
  traj.sample_dt = dt;
  traj.config_hash = config_hash(cfg);
  traj.forward = -Eigen::Vector2d(std::cos(s0.q[2]), std::sin(s0.q[2]));

  // controller state, held constant between samples
  GaitReference held{cfg.gait.amplitude, 0.0, cfg.gait.frequency};
  double held_since = t0;
  EmaFilter ema{cfg.control.ema_time_constant(), 0.0};
  PiState pi;
  const bool closed = options.scenario == Scenario::ClosedLoop;
  if (closed) held.frequency = cfg.control.pi.f_min;

  auto reference_at = [&](double t) {
    GaitReference r = held;
    r.phase = closed ? held.phase + 2.0 * M_PI * held.frequency * (t - held_since) : 2.0 * M_PI * held.frequency * (t - t0);
    return r;
  };
  auto torque = [&](double t, const GeneralizedState& s) {
    if (options.torque) return (*options.torque)(t, s);
    return pd_joint_torque(s.q[3], s.qd[3], reference_at(t), cfg.control.pd);
  };

  auto on_sample = [&](double t, const Eigen::VectorXd& y) {
    const GeneralizedState s{y.head(nq), y.tail(nq), t};
    const double v_i = traj.forward.dot(s.qd.head<2>());
    if (!traj.t.empty()) ema_update(ema, v_i, dt);
    if (closed) {
      held.phase = reference_at(t).phase;
      held_since = t;
      GaitReference next = held;
      pi_speed_to_frequency(cfg.control.pi, pi, next, ema.value, options.v_ref, dt);
      held.frequency = next.frequency;  // phase advances continuously from here
    }
    const double tau = torque(t, s);
    const auto [T, V] = energies(model, s);
    const auto solved = solve_accelerations(assemble(model, s, tau), t);
    traj.max_condition = std::max(traj.max_condition, solved.condition);
    traj.t.push_back(t);
    traj.tau.push_back(tau);
    traj.f_cmd.push_back(held.frequency);
    traj.q.push_back(s.q);
    traj.qd.push_back(s.qd);
    traj.v_i.push_back(v_i);
    traj.v_f.push_back(ema.value);
    traj.phase.push_back(reference_at(t).phase);
    traj.kinetic.push_back(T);
    traj.potential.push_back(V);
  };

  IntegrationOptions opt;
  opt.controller = StepController::from(cfg.numerics);
  opt.sample_dt = dt;
  opt.kind = cfg.numerics.integrator;
  opt.land_on_samples = closed;

  Eigen::VectorXd y0(2 * nq);
  y0 << s0.q, s0.qd;
  try {
    const Solution sol = integrate(fish_rhs(model, torque), y0, t0, t0 + options.duration, opt, on_sample);
    traj.stats = sol.stats;
  } catch (const std::exception& e) {
    Eigen::VectorXd last = y0;
    double when = t0;
    if (!traj.t.empty()) {
      last << traj.q.back(), traj.qd.back();
      when = traj.t.back();
    }
    double fail_time = when;
    if (const auto* ie = dynamic_cast<const IntegrationError*>(&e)) fail_time = ie->time;
    if (const auto* se = dynamic_cast<const SingularSystemError*>(&e)) fail_time = se->time;
    throw SimulationError(fail_time, std::move(last),
                          std::string("simulation failed at t = ") + std::to_string(fail_time) + ": " + e.what());
  }
  traj.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return traj;
}

// ---------------------------------------------------------------------------
// metrics

struct Metrics {
  double steady_speed = 0.0;     // forward displacement / window [m/s]
  double motor_work = 0.0;       // W_m = int |tau q1'| dt over the window [J]
  double distance = 0.0;         // d = |X(t_end) - X(t_window)| [m]
  double cot = 0.0;              // W_m / (m_total g d)
  bool cot_defined = false;      // false when d = 0
  double cycle_variation = 0.0;  // |v_last - v_prev| / max(|v_last|, |v_prev|) over the two window cycles
  double frequency = 0.0;        // gait frequency used for the window [Hz]
  double window_start = 0.0;
  double window_end = 0.0;
};

namespace detail {

inline std::size_t sample_index_at(const Trajectory& traj, double t) {
  const double k = std::round((t - traj.t.front()) / traj.sample_dt);
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(traj.size() - 1)));
}

inline double forward_displacement(const Trajectory& traj, std::size_t a, std::size_t b) {
  return traj.forward.dot(traj.q[b].head<2>() - traj.q[a].head<2>());
}

}  // namespace detail

/// Rectified motor work int |tau q1'| dt over samples [a, b] by the trapezoidal rule.
inline double motor_work(const Trajectory& traj, std::size_t a, std::size_t b) {
  double w = 0.0;
  for (std::size_t k = a; k < b; ++k) {
    const double p0 = std::abs(traj.tau[k] * traj.qd[k][3]);
    const double p1 = std::abs(traj.tau[k + 1] * traj.qd[k + 1][3]);
    w += 0.5 * (traj.t[k + 1] - traj.t[k]) * (p0 + p1);
  }
  return w;
}

/// Steady-state metrics over the final two whole gait cycles.
inline Metrics compute_metrics(const Trajectory& traj, double m_total, double gravity) {
  if (traj.size() < 3) throw std::invalid_argument("metrics: trajectory has fewer than 3 samples");
  Metrics m;
  m.frequency = traj.f_cmd.back();
  if (!(m.frequency > 0.0)) throw std::invalid_argument("metrics: gait frequency must be positive");
  const double period = 1.0 / m.frequency;
  const double t_end = traj.t.back();
  if (t_end - traj.t.front() < 2.0 * period - 1e-9)
    throw std::invalid_argument("metrics: trajectory shorter than two gait cycles");
  const std::size_t end = traj.size() - 1;
  const std::size_t start = detail::sample_index_at(traj, t_end - 2.0 * period);
  const std::size_t mid = detail::sample_index_at(traj, t_end - period);
  m.window_start = traj.t[start];
  m.window_end = t_end;
  const double window = t_end - traj.t[start];

  m.distance = std::abs(traj.q[end][0] - traj.q[start][0]);
  m.steady_speed = detail::forward_displacement(traj, start, end) / window;
  m.motor_work = motor_work(traj, start, end);
  m.cot_defined = m.distance > 0.0;
  m.cot = m.cot_defined ? m.motor_work / (m_total * gravity * m.distance) : 0.0;

  const double v1 = detail::forward_displacement(traj, start, mid) / (traj.t[mid] - traj.t[start]);
  const double v2 = detail::forward_displacement(traj, mid, end) / (t_end - traj.t[mid]);
  const double scale = std::max(std::abs(v1), std::abs(v2));
  m.cycle_variation = scale > 0.0 ? std::abs(v2 - v1) / scale : 0.0;
  return m;
}

inline Metrics compute_metrics(const Trajectory& traj, const ModelConfig& config) {
  return compute_metrics(traj, derive_model(config).m_total, config.numerics.gravity);
}

struct RunResult {
  Trajectory trajectory;
  Metrics metrics;
};

inline RunResult run_simulation(const ModelConfig& config, const RunOptions& options) {
  const DerivedModel model = derive_model(config);
  RunResult r;
  r.trajectory = run_trajectory(model, options);
  r.metrics = compute_metrics(r.trajectory, model.m_total, config.numerics.gravity);
  return r;
}

// ---------------------------------------------------------------------------
// closed-loop tracking

struct TrackingReport {
  double v_ref = 0.0;
  double rise_time = 0.0;         // 10% -> 90% of v_ref by v_f [s]; NaN if never reached
  double overshoot = 0.0;         // (max v_f - v_ref) / v_ref, >= 0
  double steady_state_error = 0.0;  // v_ref - mean v_f over the settling window [m/s]
  double settling_band = 0.2;     // relative band used for `settled`
  bool settled = false;           // v_f inside the band over the whole settling window
  bool saturated = false;         // f_cmd at a limit anywhere in the settling window
  double mean_frequency = 0.0;    // over the settling window [Hz]
  double settling_window = 0.0;   // [s]
  Metrics metrics;
};

inline TrackingReport tracking_report(const Trajectory& traj, const Metrics& metrics, const PiGains& pi, double v_ref,
                                      double settling_window = 2.0) {
  TrackingReport r;
  r.v_ref = v_ref;
  r.metrics = metrics;
  r.settling_window = std::min(settling_window, traj.t.back() - traj.t.front());

  double t10 = NAN, t90 = NAN, peak = -INFINITY;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (std::isnan(t10) && traj.v_f[k] >= 0.1 * v_ref) t10 = traj.t[k];
    if (std::isnan(t90) && traj.v_f[k] >= 0.9 * v_ref) t90 = traj.t[k];
    peak = std::max(peak, traj.v_f[k]);
  }
  r.rise_time = t90 - t10;
  r.overshoot = std::max(0.0, (peak - v_ref) / v_ref);

  const std::size_t start = detail::sample_index_at(traj, traj.t.back() - r.settling_window);
  double sum_v = 0.0, sum_f = 0.0;
  r.settled = true;
  for (std::size_t k = start; k < traj.size(); ++k) {
    sum_v += traj.v_f[k];
    sum_f += traj.f_cmd[k];
    if (std::abs(traj.v_f[k] - v_ref) > r.settling_band * v_ref) r.settled = false;
    if (traj.f_cmd[k] <= pi.f_min || traj.f_cmd[k] >= pi.f_max) r.saturated = true;
  }
  const double n = static_cast<double>(traj.size() - start);
  r.steady_state_error = v_ref - sum_v / n;
  r.mean_frequency = sum_f / n;
  return r;
}

struct TrackResult {
  Trajectory trajectory;
  Metrics metrics;
  TrackingReport report;
};

inline TrackResult track(const ModelConfig& config, double v_ref, double duration) {
  RunOptions opt;
  opt.scenario = Scenario::ClosedLoop;
  opt.v_ref = v_ref;
  opt.duration = duration;
  auto run = run_simulation(config, opt);
  TrackResult out{std::move(run.trajectory), run.metrics, {}};
  out.report = tracking_report(out.trajectory, out.metrics, config.control.pi, v_ref);
  return out;
}

}  // namespace fishsim

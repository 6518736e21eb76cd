#pragma once

// Time integration of y' = f(t, y) for the first-order form y = [q; qd].
//
// TR-BDF2 (Bank et al.; error estimate and filtering after Hosea & Shampine):
//   z_g     = y_n + d h (f_n + f(z_g))                 trapezoidal stage to t_n + g h
//   y_{n+1} = y_n + w h (f_n + f_g) + d h f(y_{n+1})   BDF2 stage to t_n + h
// with g = 2 - sqrt(2), d = g/2, w = sqrt(2)/4. Both stages solve
// (I - d h J) dz = -r by Newton with a finite-difference Jacobian that is kept
// across steps and refreshed only when Newton struggles. An explicit
// Dormand-Prince 4(5) path (Boost.Odeint) is available as a cross-check.

#include <Eigen/Dense>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fishsim/config.hpp"

namespace fishsim {

using Rhs = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& y)>;

/// Called at every sample time with the sampled state.
using SampleCallback = std::function<void(double t, const Eigen::VectorXd& y)>;

struct StepController {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  double dt_min = 1e-10;
  double dt_max = 5e-3;
  double dt_initial = 1e-4;
  double safety = 0.9;
  /// Control the local error per unit step (err / dt <= 1) instead of per
  /// step. Bounds the global error by roughly tol * (t1 - t0) at the price
  /// of smaller steps.
  bool per_unit_step = false;

  static StepController from(const NumericsConfig& n) {
    return {n.abs_tol, n.rel_tol, n.dt_min, n.dt_max, n.dt_initial, n.safety};
  }
  void check() const {
    if (!(abs_tol > 0.0 && rel_tol > 0.0)) throw std::invalid_argument("step controller: tolerances must be positive");
    if (!(dt_min > 0.0 && dt_min <= dt_max)) throw std::invalid_argument("step controller: need 0 < dt_min <= dt_max");
    if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("step controller: safety must be in (0, 1]");
  }
};

struct IntegrationError : std::runtime_error {
  double time;
  IntegrationError(double t, const std::string& msg) : std::runtime_error(msg), time(t) {}
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
  long jacobian_evaluations = 0;
  long newton_failures = 0;
  double smallest_step = std::numeric_limits<double>::infinity();
  double largest_step = 0.0;
};

/// Weighted RMS norm with weights abs_tol + rel_tol * |y|.
inline double wrms_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& scale) {
  return std::sqrt((v.array() / scale.array()).square().mean());
}

class TrBdf2 {
 public:
  static constexpr double kGamma = 2.0 - 1.4142135623730951;  // 2 - sqrt(2)
  static constexpr double kD = kGamma / 2.0;
  static constexpr double kW = 1.4142135623730951 / 4.0;

  struct Step {
    Eigen::VectorXd y;
    double error = 0.0;  // WRMS of the filtered local error estimate; <= 1 passes
    bool converged = false;
  };

  TrBdf2(Rhs f, StepController controller) : f_(std::move(f)), c_(controller) { c_.check(); }

  /// One composite step from (t, y) with f0 = f(t, y). On Newton failure the
  /// returned step has converged = false.
  Step step(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step_trbdf2: dt must be positive");
    Step out;
    const Eigen::VectorXd scale = weights(y);
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (!J_ || (attempt == 1)) {
        if (attempt == 1 && jacobian_fresh_) break;  // already fresh, nothing more to try
        refresh_jacobian(t, y, f0);
      }
      prepare_matrix(h);

      // trapezoidal stage
      const Eigen::VectorXd c1 = y + kD * h * f0;
      std::optional<Eigen::VectorXd> zg = newton(t + kGamma * h, y + kGamma * h * f0, c1, scale);
      if (!zg) continue;
      const Eigen::VectorXd fg = (*zg - c1) / (kD * h);

      // BDF2 stage
      const Eigen::VectorXd c2 = y + kW * h * (f0 + fg);
      std::optional<Eigen::VectorXd> z1 = newton(t + h, y + (*zg - y) / kGamma, c2, scale);
      if (!z1) continue;
      const Eigen::VectorXd f1 = (*z1 - c2) / (kD * h);

      const Eigen::VectorXd raw =
          h * ((1.0 - kW) / 3.0 * f0 + (3.0 * kW + 1.0) / 3.0 * fg + kD / 3.0 * f1) - (*z1 - y);
      const Eigen::VectorXd filtered = lu_.solve(raw);
      const Eigen::VectorXd err_scale = weights(y).cwiseMax(weights(*z1));
      out.y = *z1;
      out.error = wrms_norm(filtered, err_scale);
      out.converged = true;
      jacobian_fresh_ = false;
      return out;
    }
    ++stats.newton_failures;
    return out;
  }

  const StepController& controller() const { return c_; }
  Eigen::VectorXd rhs(double t, const Eigen::VectorXd& y) {
    ++stats.rhs_evaluations;
    return f_(t, y);
  }
  /// Drops the cached Jacobian, e.g. after the right-hand side changed.
  void invalidate_jacobian() { J_.reset(); }

  IntegrationStats stats;

 private:
  Eigen::VectorXd weights(const Eigen::VectorXd& y) const {
    return (c_.abs_tol + c_.rel_tol * y.array().abs()).matrix();
  }

  // Central differences: the same column results for a state and its
  // sign-flipped image, so mirrored problems stay mirrored bit for bit.
  void refresh_jacobian(double t, const Eigen::VectorXd& y, const Eigen::VectorXd&) {
    const Eigen::Index n = y.size();
    Eigen::MatrixXd J(n, n);
    const double eps = std::cbrt(std::numeric_limits<double>::epsilon());
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = eps * std::max(1.0, std::abs(y[j]));
      Eigen::VectorXd yp = y, ym = y;
      yp[j] = y[j] + h;
      ym[j] = y[j] - h;
      const double span = yp[j] - ym[j];
      J.col(j) = (rhs(t, yp) - rhs(t, ym)) / span;
    }
    J_ = std::move(J);
    jacobian_fresh_ = true;
    matrix_h_ = -1.0;
    ++stats.jacobian_evaluations;
  }

  void prepare_matrix(double h) {
    if (h == matrix_h_) return;
    const Eigen::Index n = J_->rows();
    lu_.compute(Eigen::MatrixXd::Identity(n, n) - kD * h * *J_);
    matrix_h_ = h;
    h_ = h;
  }

  // Solves z - d h f(ts, z) = c.
  std::optional<Eigen::VectorXd> newton(double ts, Eigen::VectorXd z, const Eigen::VectorXd& c,
                                        const Eigen::VectorXd& scale) {
    constexpr int kMaxIterations = 8;
    constexpr double kTolerance = 0.01;
    double previous = 0.0;
    for (int it = 0; it < kMaxIterations; ++it) {
      Eigen::VectorXd fz;
      try {
        fz = rhs(ts, z);
      } catch (const std::runtime_error&) {
        return std::nullopt;  // e.g. a singular mass matrix at a wild iterate
      }
      const Eigen::VectorXd residual = z - kD * h_ * fz - c;
      const Eigen::VectorXd dz = lu_.solve(-residual);
      if (!dz.allFinite()) return std::nullopt;
      z += dz;
      const double norm = wrms_norm(dz, scale);
      if (norm <= 1e-3 * kTolerance) return z;
      if (it > 0) {
        const double rate = norm / previous;
        if (rate >= 0.9) return std::nullopt;
        if (rate / (1.0 - rate) * norm <= kTolerance) return z;
      }
      previous = norm;
    }
    return std::nullopt;
  }

  Rhs f_;
  StepController c_;
  std::optional<Eigen::MatrixXd> J_;
  bool jacobian_fresh_ = false;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double matrix_h_ = -1.0;
  double h_ = 0.0;
};

/// Single TR-BDF2 step with a fresh Jacobian.
inline TrBdf2::Step step_trbdf2(const Rhs& f, const Eigen::VectorXd& y, double t, double dt,
                                const StepController& controller = {}) {
  TrBdf2 stepper(f, controller);
  return stepper.step(t, y, stepper.rhs(t, y), dt);
}

/// Cubic Hermite interpolant on [t0, t1] from end values and slopes.
inline Eigen::VectorXd hermite(double t0, const Eigen::VectorXd& y0, const Eigen::VectorXd& f0, double t1,
                               const Eigen::VectorXd& y1, const Eigen::VectorXd& f1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1;
}

struct IntegrationOptions {
  StepController controller;
  double sample_dt = 1e-2;
  IntegratorKind kind = IntegratorKind::TrBdf2;
  /// Stop exactly at every sample time. Required when the callback changes
  /// inputs of the right-hand side (closed-loop control), since the solution
  /// is then only piecewise smooth across samples.
  bool land_on_samples = false;
};

struct Solution {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;
  IntegrationStats stats;
};

namespace detail {

inline std::size_t sample_count(double t0, double t1, double dt) {
  return static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
}

inline Solution integrate_rk45(const Rhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                               const IntegrationOptions& opt, const SampleCallback& callback) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  Solution sol;
  const auto n = y0.size();
  auto system = [&](const State& x, State& dxdt, double t) {
    ++sol.stats.rhs_evaluations;
    const Eigen::VectorXd d = f(t, Eigen::Map<const Eigen::VectorXd>(x.data(), n));
    dxdt.assign(d.data(), d.data() + n);
  };
  State x(y0.data(), y0.data() + n);
  const auto& c = opt.controller;
  const std::size_t count = sample_count(t0, t1, opt.sample_dt);
  for (std::size_t k = 0; k < count; ++k) {
    const double tk = t0 + k * opt.sample_dt;
    if (k > 0) {
      const double tprev = t0 + (k - 1) * opt.sample_dt;
      auto stepper = odeint::make_controlled(c.abs_tol, c.rel_tol, c.dt_max, odeint::runge_kutta_dopri5<State>());
      sol.stats.accepted += static_cast<long>(
          odeint::integrate_adaptive(stepper, system, x, tprev, tk, std::min(c.dt_initial, tk - tprev)));
    }
    const Eigen::VectorXd yk = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    if (!yk.allFinite()) throw IntegrationError(tk, "non-finite state at t = " + std::to_string(tk));
    sol.t.push_back(tk);
    sol.y.push_back(yk);
    if (callback) callback(tk, yk);
  }
  return sol;
}

}  // namespace detail

/// Adaptive integration over [t0, t1] with samples every opt.sample_dt
/// (starting at t0). Samples come only from accepted steps.
inline Solution integrate(const Rhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                          const IntegrationOptions& opt, const SampleCallback& callback = {}) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate: empty time span");
  if (!(opt.sample_dt > 0.0)) throw std::invalid_argument("integrate: sample_dt must be positive");
  if (opt.kind == IntegratorKind::Rk45) return detail::integrate_rk45(f, y0, t0, t1, opt, callback);

  TrBdf2 stepper(f, opt.controller);
  const StepController& c = opt.controller;
  Solution sol;
  const std::size_t count = detail::sample_count(t0, t1, opt.sample_dt);
  auto sample_time = [&](std::size_t k) { return t0 + static_cast<double>(k) * opt.sample_dt; };
  const double t_end = sample_time(count - 1);

  double t = t0;
  Eigen::VectorXd y = y0;
  sol.t.push_back(t0);
  sol.y.push_back(y0);
  if (callback) callback(t0, y0);
  std::size_t next = 1;
  Eigen::VectorXd fy = stepper.rhs(t, y);
  double h = std::clamp(c.dt_initial, c.dt_min, c.dt_max);

  while (next < count) {
    double target = t + h;
    bool clipped = false;
    const double stop = opt.land_on_samples ? sample_time(next) : t_end;
    if (target >= stop - 1e-12 * std::max(1.0, std::abs(stop))) {
      target = stop;
      clipped = true;
    }
    const double step = target - t;
    const TrBdf2::Step s = stepper.step(t, y, fy, step);
    const double err = c.per_unit_step ? s.error / step : s.error;
    const double exponent = c.per_unit_step ? -0.5 : -1.0 / 3.0;
    if (!s.converged || !(err <= 1.0)) {
      ++sol.stats.rejected;
      const double factor = s.converged ? std::max(0.2, c.safety * std::pow(err, exponent)) : 0.25;
      h = step * factor;
      if (h < c.dt_min)
        throw IntegrationError(t, "step size underflow at t = " + std::to_string(t) + " (dt = " + std::to_string(h) +
                                      (s.converged ? ", error test failing)" : ", Newton not converging)"));
      continue;
    }

    const Eigen::VectorXd f_new = stepper.rhs(target, s.y);
    ++sol.stats.accepted;
    sol.stats.smallest_step = std::min(sol.stats.smallest_step, step);
    sol.stats.largest_step = std::max(sol.stats.largest_step, step);
    if (!s.y.allFinite()) throw IntegrationError(target, "non-finite state at t = " + std::to_string(target));

    // samples inside (t, target]
    bool inputs_changed = false;
    while (next < count && sample_time(next) <= target + 1e-12 * std::max(1.0, std::abs(target))) {
      const double ts = sample_time(next);
      const bool at_end = std::abs(ts - target) <= 1e-12 * std::max(1.0, std::abs(target));
      const Eigen::VectorXd ys = at_end ? s.y : hermite(t, y, fy, target, s.y, f_new, ts);
      sol.t.push_back(ts);
      sol.y.push_back(ys);
      if (callback) {
        callback(ts, ys);
        inputs_changed = true;
      }
      ++next;
    }

    const double grow = err > 0.0 ? c.safety * std::pow(err, exponent) : 5.0;
    const double h_new = std::clamp(step * std::clamp(grow, 0.2, 5.0), c.dt_min, c.dt_max);
    // a clipped step says nothing about the natural step size
    h = clipped ? std::max(h_new, h) : h_new;
    h = std::min(h, c.dt_max);
    t = target;
    y = s.y;
    fy = (opt.land_on_samples && inputs_changed) ? stepper.rhs(t, y) : f_new;
  }
  sol.stats.rhs_evaluations = stepper.stats.rhs_evaluations;
  sol.stats.jacobian_evaluations = stepper.stats.jacobian_evaluations;
  sol.stats.newton_failures = stepper.stats.newton_failures;
  return sol;
}

/// Fixed-step TR-BDF2 (no error control), for order verification.
inline Eigen::VectorXd integrate_fixed(const Rhs& f, const Eigen::VectorXd& y0, double t0, double t1, double dt) {
  TrBdf2 stepper(f, StepController{1e-12, 1e-12, 1e-14, 1.0, dt, 0.9});
  const int n = static_cast<int>(std::llround((t1 - t0) / dt));
  Eigen::VectorXd y = y0;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + i * dt;
    const auto s = stepper.step(t, y, stepper.rhs(t, y), dt);
    if (!s.converged) throw IntegrationError(t, "Newton failed in fixed-step integration");
    y = s.y;
  }
  return y;
}

}  // namespace fishsim

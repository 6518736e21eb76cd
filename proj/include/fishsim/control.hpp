#pragma once

// Gait generation and speed control: a PD servo on the joint angle q_1, an
// exponential moving average of the swimming speed, and a PI loop that sets
// the tail-beat frequency through a phase accumulator.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fishsim/config.hpp"

namespace fishsim {

struct GaitReference {
  double amplitude = 0.4;  // A [rad]
  double phase = 0.0;      // Theta [rad]
  double frequency = 2.0;  // f [Hz]

  double angle() const { return amplitude * std::sin(phase); }
  double rate() const { return amplitude * 2.0 * M_PI * frequency * std::cos(phase); }
  /// Reference with the phase advanced by dt at the current frequency.
  GaitReference advanced(double dt) const { return {amplitude, phase + 2.0 * M_PI * frequency * dt, frequency}; }
};

/// tau_m = clamp(kp (theta_ref - q1) + kd (theta_ref' - q1'), +-tau_max).
inline double pd_joint_torque(double q1, double q1_dot, const GaitReference& ref, const PdGains& gains) {
  const double tau = gains.kp * (ref.angle() - q1) + gains.kd * (ref.rate() - q1_dot);
  return std::clamp(tau, -gains.tau_max, gains.tau_max);
}

struct EmaFilter {
  double time_constant = 1.0 / (2.0 * M_PI * 0.25);  // tau_f [s]
  double value = 0.0;                                 // v_f [m/s]
};

/// Exact discretization of v_f' = (v_i - v_f) / tau_f for v_i held over dt.
inline double ema_update(EmaFilter& filter, double v_i, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("ema_update: dt must be positive");
  if (!(filter.time_constant > 0.0)) throw std::invalid_argument("ema_update: time constant must be positive");
  filter.value = v_i + (filter.value - v_i) * std::exp(-dt / filter.time_constant);
  return filter.value;
}

struct PiState {
  double integral = 0.0;  // integral of the speed error [m]
  bool saturated = false;
};

/// One PI update: integrates e = v_ref - v_f unless that would push a clamped
/// output further into its limit, sets ref.frequency and advances ref.phase
/// by 2 pi f dt.
inline double pi_speed_to_frequency(const PiGains& gains, PiState& state, GaitReference& ref, double v_f, double v_ref,
                                    double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pi_speed_to_frequency: dt must be positive");
  const double e = v_ref - v_f;
  const double trial = gains.kp * e + gains.ki * (state.integral + e * dt);
  const bool winding = (trial > gains.f_max && e > 0.0) || (trial < gains.f_min && e < 0.0);
  if (!winding) state.integral += e * dt;
  const double raw = gains.kp * e + gains.ki * state.integral;
  const double f = std::clamp(raw, gains.f_min, gains.f_max);
  state.saturated = raw > gains.f_max || raw < gains.f_min;
  ref.frequency = f;
  ref.phase += 2.0 * M_PI * f * dt;
  return f;
}

}  // namespace fishsim

#pragma once

// Multi-run studies: parameter sweeps (run concurrently, one task per value)
// and the Ritz-mode convergence study.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fishsim/simulation.hpp"

namespace fishsim {

enum class SweepParameter { Frequency, BaselineModulus };

inline SweepParameter parse_sweep_parameter(const std::string& name) {
  if (name == "frequency") return SweepParameter::Frequency;
  if (name == "baseline-e" || name == "baseline_e") return SweepParameter::BaselineModulus;
  throw std::invalid_argument("unknown sweep parameter '" + name + "' (expected frequency or baseline-e)");
}

inline std::string to_string(SweepParameter p) { return p == SweepParameter::Frequency ? "frequency" : "baseline-e"; }

/// Inclusive range a:b:step, robust to round-off in the last point.
inline std::vector<double> range_values(double a, double b, double step) {
  if (!(step > 0.0) || !(b >= a)) throw std::invalid_argument("range: need a <= b and step > 0");
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
  std::vector<double> out;
  for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

/// Configuration with one swept parameter replaced. The baseline modulus
/// keeps the cubic stiffening term of the default profile: E(s) = E_b - 0.7e6 s^3.
inline ModelConfig with_parameter(ModelConfig config, SweepParameter p, double value) {
  if (p == SweepParameter::Frequency) {
    config.gait.frequency = value;
  } else {
    auto& coeffs = config.body.youngs_modulus.coefficients;
    if (coeffs.empty()) coeffs.push_back(0.0);
    coeffs[0] = value;
  }
  return config;
}

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  Metrics metrics;
  std::optional<Trajectory> trajectory;
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::Frequency;
  std::vector<SweepRow> rows;

  /// Row with the largest steady speed among successful runs.
  std::optional<std::size_t> fastest() const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].ok && (!best || rows[i].metrics.steady_speed > rows[*best].metrics.steady_speed)) best = i;
    return best;
  }
};

inline SweepRow sweep_point(const ModelConfig& base, SweepParameter p, double value, const RunOptions& options,
                            bool keep_trajectory) {
  SweepRow row;
  row.value = value;
  try {
    auto run = run_simulation(with_parameter(base, p, value), options);
    row.metrics = run.metrics;
    if (keep_trajectory) row.trajectory = std::move(run.trajectory);
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// One independent run per value; failures are recorded per row.
inline SweepResult sweep(const ModelConfig& base, SweepParameter p, const std::vector<double>& values,
                         const RunOptions& options, bool concurrent = true, bool keep_trajectories = true) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  validate(base);
  SweepResult out;
  out.parameter = p;
  if (concurrent) {
    std::vector<std::future<SweepRow>> tasks;
    for (double v : values)
      tasks.push_back(std::async(std::launch::async, sweep_point, std::cref(base), p, v, std::cref(options),
                                 keep_trajectories));
    for (auto& t : tasks) out.rows.push_back(t.get());
  } else {
    for (double v : values) out.rows.push_back(sweep_point(base, p, v, options, keep_trajectories));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ritz convergence

struct ConvergenceRow {
  int modes = 0;
  bool ok = false;
  std::string error;
  std::vector<double> t;
  std::vector<Eigen::Vector2d> head;  // head COM path
  double wall_time = 0.0;             // [s]
  double deviation = 0.0;             // max_k |r_G(N) - r_G(N_max)| [m]
};

struct ConvergenceScenario {
  double baseline_modulus = 0.35e6;  // [Pa]
  double frequency = 2.0;            // [Hz]
  double amplitude = 0.4;            // [rad]
  double duration = 1.5;             // [s]
};

/// Runs the same open-loop scenario for every N. The quadrature node count
/// is held at the value required by the largest N so only the basis changes.
inline std::vector<ConvergenceRow> convergence_study(const ModelConfig& base, const std::vector<int>& modes,
                                                     const ConvergenceScenario& scenario = {}) {
  if (modes.empty()) throw std::invalid_argument("convergence_study: empty mode range");
  if (!std::is_sorted(modes.begin(), modes.end()) ||
      std::adjacent_find(modes.begin(), modes.end()) != modes.end())
    throw std::invalid_argument("convergence_study: mode range must be strictly ascending");
  const int n_max = modes.back();
  ModelConfig cfg = with_parameter(base, SweepParameter::BaselineModulus, scenario.baseline_modulus);
  cfg.gait.frequency = scenario.frequency;
  cfg.gait.amplitude = scenario.amplitude;
  cfg.initial_state.reset();
  if (!cfg.numerics.nodes) {
    ModelConfig widest = cfg;
    widest.numerics.modes = n_max;
    cfg.numerics.nodes = widest.numerics.node_count();
  }

  RunOptions opt;
  opt.duration = scenario.duration;
  std::vector<ConvergenceRow> rows;
  for (int n : modes) {
    ConvergenceRow row;
    row.modes = n;
    try {
      ModelConfig c = cfg;
      c.numerics.modes = n;
      const auto started = std::chrono::steady_clock::now();
      const Trajectory traj = run_trajectory(derive_model(c), opt);
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      row.t = traj.t;
      for (const auto& q : traj.q) row.head.emplace_back(q[0], q[1]);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  const ConvergenceRow& ref = rows.back();
  for (auto& row : rows) {
    if (!row.ok || !ref.ok) continue;
    const std::size_t n = std::min(row.head.size(), ref.head.size());
    for (std::size_t k = 0; k < n; ++k) row.deviation = std::max(row.deviation, (row.head[k] - ref.head[k]).norm());
  }
  return rows;
}

}  // namespace fishsim

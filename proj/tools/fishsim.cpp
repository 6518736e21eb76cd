// fishsim: batch experiments on the robotic-fish model.
//
//   fishsim simulate    --config c.json --out dir [--duration 5] [--plot]
//   fishsim sweep       --param frequency --values 0.5:3.5:0.5 ...
//   fishsim convergence --modes 1:6 ...
//   fishsim track       --target 0.1 ...
//
// Failures exit nonzero with a JSON object on stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fishsim/fishsim.hpp"

namespace fs = std::filesystem;
using namespace fishsim;

namespace {

struct CommonOptions {
  std::string config;
  std::string out = "out";
  bool plot = false;
  std::optional<double> duration;
  bool seedless = false;  // accepted for compatibility; every run is deterministic
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "model configuration (JSON); built-in defaults if omitted")
      ->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "output directory")->capture_default_str();
  app->add_flag("--plot", o.plot, "also write SVG figures");
  app->add_option("--duration", o.duration, "simulated time [s]")->check(CLI::PositiveNumber);
  app->add_flag("--seedless", o.seedless, "runs are deterministic; accepted and ignored");
}

ModelConfig load(const CommonOptions& o) { return o.config.empty() ? default_config() : load_config(o.config); }

std::vector<double> parse_range(const std::string& text) {
  double a = 0, b = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (in >> a >> c1 >> b >> c2 >> step && c1 == ':' && c2 == ':' && in.peek() == EOF) return range_values(a, b, step);
  // a comma-separated list is accepted too
  std::vector<double> values;
  std::istringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) values.push_back(parse_double(item));
  if (values.empty()) throw std::invalid_argument("--values: expected a:b:step or a comma-separated list");
  return values;
}

std::vector<int> parse_modes(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {std::stoi(text)};
  const int a = std::stoi(text.substr(0, colon)), b = std::stoi(text.substr(colon + 1));
  if (a < 1 || b < a) throw std::invalid_argument("--modes: expected 1 <= a <= b");
  std::vector<int> out;
  for (int n = a; n <= b; ++n) out.push_back(n);
  return out;
}

void print_metrics(const Metrics& m) {
  std::printf("steady speed %.5g m/s over [%.3g, %.3g] s, distance %.4g m, motor work %.4g J, COT %s, cycle variation %.3g%%\n",
              m.steady_speed, m.window_start, m.window_end, m.distance, m.motor_work,
              m.cot_defined ? std::to_string(m.cot).c_str() : "undefined", 100 * m.cycle_variation);
}

std::string value_tag(double v) {
  std::string s = format_double(v);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

int simulate(const CommonOptions& o) {
  const ModelConfig cfg = load(o);
  RunOptions opt;
  opt.duration = o.duration.value_or(5.0);
  const DerivedModel model = derive_model(cfg);
  const Trajectory traj = run_trajectory(model, opt);
  const Metrics m = compute_metrics(traj, model.m_total, cfg.numerics.gravity);
  const fs::path out = o.out;
  write_trajectory_csv(traj, out / "trajectory.csv");
  write_json(run_json(traj, m), out / "metrics.json");
  if (o.plot) write_run_plots(model, traj, out, "run");
  print_metrics(m);
  return 0;
}

int run_sweep(const CommonOptions& o, const std::string& param, const std::string& values_text) {
  const ModelConfig cfg = load(o);
  const SweepParameter p = parse_sweep_parameter(param);
  const auto values = parse_range(values_text);
  RunOptions opt;
  opt.duration = o.duration.value_or(5.0);
  const SweepResult result = sweep(cfg, p, values, opt);
  const fs::path out = o.out;
  write_sweep_csv(result, out / "sweep.csv");
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    nlohmann::json row{{"value", r.value}, {"ok", r.ok}};
    if (r.ok) row["metrics"] = to_json(r.metrics);
    else row["error"] = r.error;
    rows.push_back(row);
    if (r.trajectory) write_trajectory_csv(*r.trajectory, out / "runs" / (to_string(p) + "_" + value_tag(r.value) + ".csv"));
  }
  const auto best = result.fastest();
  write_json({{"parameter", to_string(p)}, {"rows", rows}, {"fastest", best ? nlohmann::json(result.rows[*best].value) : nlohmann::json(nullptr)}},
             out / "sweep.json");
  if (o.plot) write_sweep_plots(result, out);
  for (const auto& r : result.rows) {
    if (r.ok)
      std::printf("%-10s %-10g speed %-10.5g COT %s\n", to_string(p).c_str(), r.value, r.metrics.steady_speed,
                  r.metrics.cot_defined ? std::to_string(r.metrics.cot).c_str() : "undefined");
    else
      std::printf("%-10s %-10g FAILED: %s\n", to_string(p).c_str(), r.value, r.error.c_str());
  }
  if (best) std::printf("fastest at %s = %g\n", to_string(p).c_str(), result.rows[*best].value);
  return 0;
}

int convergence(const CommonOptions& o, const std::string& modes_text) {
  const ModelConfig cfg = load(o);
  ConvergenceScenario sc;
  if (o.duration) sc.duration = *o.duration;
  const auto rows = convergence_study(cfg, parse_modes(modes_text), sc);
  const fs::path out = o.out;
  write_convergence_csv(rows, out / "convergence.csv");
  if (o.plot) write_convergence_plot(rows, out);
  for (const auto& r : rows) {
    if (r.ok) std::printf("N = %d  deviation %.4e m  wall %.2f s\n", r.modes, r.deviation, r.wall_time);
    else std::printf("N = %d  FAILED: %s\n", r.modes, r.error.c_str());
  }
  return 0;
}

int run_track(const CommonOptions& o, double target) {
  const ModelConfig cfg = load(o);
  const TrackResult r = track(cfg, target, o.duration.value_or(20.0));
  const fs::path out = o.out;
  write_trajectory_csv(r.trajectory, out / "trajectory.csv");
  nlohmann::json report = to_json(r.report);
  report["run"] = run_json(r.trajectory, r.metrics);
  write_json(report, out / "report.json");
  if (o.plot) write_run_plots(derive_model(cfg), r.trajectory, out, "track");
  const auto& p = r.report;
  std::printf("v_ref %.4g m/s: rise time %.3g s, overshoot %.3g%%, steady-state error %.4g m/s, %s, %s, mean f %.3g Hz\n",
              p.v_ref, p.rise_time, 100 * p.overshoot, p.steady_state_error, p.settled ? "settled" : "not settled",
              p.saturated ? "SATURATED" : "unsaturated", p.mean_frequency);
  print_metrics(r.metrics);
  return 0;
}

int fail(const std::string& type, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["type"] = type;
  extra["message"] = message;
  std::cerr << nlohmann::json{{"error", extra}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robotic fish simulator"};
  app.require_subcommand(1);
  CommonOptions common;

  auto* sim = app.add_subcommand("simulate", "single open-loop run");
  add_common(sim, common);

  std::string param = "frequency", values = "0.5:3.5:0.5";
  auto* sw = app.add_subcommand("sweep", "parameter sweep, one concurrent run per value");
  add_common(sw, common);
  sw->add_option("--param", param, "frequency | baseline-e")->check(CLI::IsMember({"frequency", "baseline-e"}))->capture_default_str();
  sw->add_option("--values", values, "a:b:step or comma-separated list")->capture_default_str();

  std::string modes = "1:6";
  auto* conv = app.add_subcommand("convergence", "Ritz mode-count study");
  add_common(conv, common);
  conv->add_option("--modes", modes, "mode range a:b")->capture_default_str();

  double target = 0.1;
  auto* tr = app.add_subcommand("track", "closed-loop speed tracking");
  add_common(tr, common);
  tr->add_option("--target", target, "reference speed [m/s]")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what()) + 1;
  }

  try {
    if (*sim) return simulate(common);
    if (*sw) return run_sweep(common, param, values);
    if (*conv) return convergence(common, modes);
    return run_track(common, target);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), {{"field", e.field()}});
  } catch (const SimulationError& e) {
    std::vector<double> last(e.last_state.data(), e.last_state.data() + e.last_state.size());
    return fail("simulation", e.what(), {{"time", e.time}, {"last_state", last}});
  } catch (const IoError& e) {
    return fail("io", e.what(), {{"path", e.path.string()}});
  } catch (const std::exception& e) {
    return fail("error", e.what());
  }
}

#pragma once

// Result files: CSV time series and tables (RFC 4180, shortest round-trip
// doubles), JSON metrics and reports, and small SVG line plots.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "fishsim/experiments.hpp"
#include "fishsim/kinematics.hpp"
#include "fishsim/simulation.hpp"

namespace fishsim {

struct IoError : std::runtime_error {
  std::filesystem::path path;
  IoError(const std::filesystem::path& p, const std::string& msg) : std::runtime_error(p.string() + ": " + msg), path(p) {}
};

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Splits one CSV record; quoted fields may contain commas, quotes and newlines.
inline std::vector<std::string> csv_split(std::istream& in, bool& ok) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  ok = any;
  if (any) fields.push_back(std::move(field));
  return fields;
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path(), "cannot create directory: " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

/// Column order: t, tau_m, f_cmd, q_0..q_{n-1}, qd_0..qd_{n-1}, v_i, v_f, phase, T, V.
inline std::vector<std::string> trajectory_header(int dim) {
  std::vector<std::string> h{"t", "tau_m", "f_cmd"};
  for (int i = 0; i < dim; ++i) h.push_back("q" + std::to_string(i));
  for (int i = 0; i < dim; ++i) h.push_back("qd" + std::to_string(i));
  for (const char* c : {"v_i", "v_f", "phase", "T", "V"}) h.emplace_back(c);
  return h;
}

inline void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  auto out = open_output(path);
  const auto header = trajectory_header(traj.dim);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\r\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.t[k]) << ',' << format_double(traj.tau[k]) << ',' << format_double(traj.f_cmd[k]);
    for (int i = 0; i < traj.dim; ++i) out << ',' << format_double(traj.q[k][i]);
    for (int i = 0; i < traj.dim; ++i) out << ',' << format_double(traj.qd[k][i]);
    for (double v : {traj.v_i[k], traj.v_f[k], traj.phase[k], traj.kinetic[k], traj.potential[k]})
      out << ',' << format_double(v);
    out << "\r\n";
  }
  finish(out, path);
}

/// Reads the sample columns back (metadata is not stored in the CSV).
inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  bool ok = false;
  const auto header = csv_split(in, ok);
  if (!ok || header.size() < 10 || (header.size() - 8) % 2 != 0) throw IoError(path, "not a trajectory CSV header");
  Trajectory traj;
  traj.dim = static_cast<int>((header.size() - 8) / 2);
  if (header != trajectory_header(traj.dim)) throw IoError(path, "unexpected trajectory columns");
  std::size_t line = 1;
  while (true) {
    auto fields = csv_split(in, ok);
    ++line;
    if (!ok || (fields.size() == 1 && fields[0].empty())) break;
    if (fields.size() != header.size())
      throw IoError(path, "line " + std::to_string(line) + ": expected " + std::to_string(header.size()) + " fields");
    std::vector<double> v(fields.size());
    try {
      std::transform(fields.begin(), fields.end(), v.begin(), parse_double);
    } catch (const std::invalid_argument& e) {
      throw IoError(path, "line " + std::to_string(line) + ": " + e.what());
    }
    const int n = traj.dim;
    traj.t.push_back(v[0]);
    traj.tau.push_back(v[1]);
    traj.f_cmd.push_back(v[2]);
    traj.q.push_back(Eigen::Map<const Eigen::VectorXd>(v.data() + 3, n));
    traj.qd.push_back(Eigen::Map<const Eigen::VectorXd>(v.data() + 3 + n, n));
    traj.v_i.push_back(v[3 + 2 * n]);
    traj.v_f.push_back(v[4 + 2 * n]);
    traj.phase.push_back(v[5 + 2 * n]);
    traj.kinetic.push_back(v[6 + 2 * n]);
    traj.potential.push_back(v[7 + 2 * n]);
  }
  if (traj.size() >= 2) traj.sample_dt = traj.t[1] - traj.t[0];
  return traj;
}

inline void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "value,steady_speed,COT,cot_defined,motor_work,distance,cycle_variation,ok,error\r\n";
  for (const auto& r : sweep.rows) {
    out << format_double(r.value) << ',' << format_double(r.metrics.steady_speed) << ','
        << (r.metrics.cot_defined ? format_double(r.metrics.cot) : "") << ',' << (r.metrics.cot_defined ? 1 : 0) << ','
        << format_double(r.metrics.motor_work) << ',' << format_double(r.metrics.distance) << ','
        << format_double(r.metrics.cycle_variation) << ',' << (r.ok ? 1 : 0) << ',' << csv_field(r.error) << "\r\n";
  }
  finish(out, path);
}

inline void write_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "N,deviation,wall_time,final_X,final_Y,ok,error\r\n";
  for (const auto& r : rows) {
    const Eigen::Vector2d last = r.head.empty() ? Eigen::Vector2d::Zero() : r.head.back();
    out << r.modes << ',' << format_double(r.deviation) << ',' << format_double(r.wall_time) << ','
        << format_double(last.x()) << ',' << format_double(last.y()) << ',' << (r.ok ? 1 : 0) << ','
        << csv_field(r.error) << "\r\n";
  }
  finish(out, path);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const Metrics& m) {
  return {{"steady_speed", m.steady_speed},
          {"motor_work", m.motor_work},
          {"distance", m.distance},
          {"cot", m.cot_defined ? nlohmann::json(m.cot) : nlohmann::json(nullptr)},
          {"cot_defined", m.cot_defined},
          {"cycle_variation", m.cycle_variation},
          {"frequency", m.frequency},
          {"window", {m.window_start, m.window_end}}};
}

inline nlohmann::json to_json(const IntegrationStats& s) {
  return {{"accepted_steps", s.accepted},
          {"rejected_steps", s.rejected},
          {"rhs_evaluations", s.rhs_evaluations},
          {"jacobian_evaluations", s.jacobian_evaluations},
          {"newton_failures", s.newton_failures},
          {"smallest_step", finite_or_null(s.smallest_step)},
          {"largest_step", s.largest_step}};
}

inline nlohmann::json run_json(const Trajectory& traj, const Metrics& m) {
  return {{"metrics", to_json(m)},
          {"config_hash", traj.config_hash},
          {"samples", traj.size()},
          {"max_condition", traj.max_condition},
          {"wall_time", traj.wall_time},
          {"solver", to_json(traj.stats)}};
}

inline nlohmann::json to_json(const TrackingReport& r) {
  return {{"v_ref", r.v_ref},
          {"rise_time", finite_or_null(r.rise_time)},
          {"overshoot", r.overshoot},
          {"steady_state_error", r.steady_state_error},
          {"settled", r.settled},
          {"settling_band", r.settling_band},
          {"settling_window", r.settling_window},
          {"saturated", r.saturated},
          {"mean_frequency", r.mean_frequency},
          {"cot", r.metrics.cot_defined ? nlohmann::json(r.metrics.cot) : nlohmann::json(nullptr)},
          {"metrics", to_json(r.metrics)}};
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool equal_axes = false;
  bool markers = false;
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec) {
  constexpr double W = 720, H = 440, left = 80, right = 150, top = 40, bottom = 60;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  if (spec.equal_axes) {
    const double scale = std::max((x1 - x0) / pw, (y1 - y0) / ph);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    x0 = cx - 0.5 * scale * pw, x1 = cx + 0.5 * scale * pw;
    y0 = cy - 0.5 * scale * ph, y1 = cy + 0.5 * scale * ph;
  }
  auto X = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto Y = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    o << "<text x=\"" << X(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">" << svg_escape(spec.xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << svg_escape(spec.ylabel) << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = colors[si % 8];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) o << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
    o << "\"/>\n";
    if (spec.markers)
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          o << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    if (!s.label.empty() && series.size() <= 12)
      o << "<text x=\"" << left + pw + 10 << "\" y=\"" << top + 16 + 16 * si << "\" fill=\"" << color << "\">"
        << svg_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_svg(const std::vector<Series>& series, const PlotSpec& spec, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << render_svg(series, spec);
  finish(out, path);
}

/// Head outline plus body centreline at one sample, in world coordinates.
inline Series body_outline(const DerivedModel& model, const Eigen::VectorXd& q, int points = 40) {
  std::vector<double> s(points);
  for (int i = 0; i < points; ++i) s[i] = model.length() * i / (points - 1);
  const SampleSet samples = model.samples_at(s);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(q.size());
  const BodyState body = evaluate_body(model, samples, q, zero, zero);
  Series out;
  const double c = std::cos(q[2]), sn = std::sin(q[2]);
  const double a = model.config.head.semi_axes[0];
  // head from its nose to the joint, then along the body
  out.x.push_back(q[0] - a * c);
  out.y.push_back(q[1] - a * sn);
  for (const auto& n : body.nodes) {
    out.x.push_back(n.r.x);
    out.y.push_back(n.r.y);
  }
  return out;
}

/// Speed-vs-time and body-shape time-lapse figures for one run.
inline void write_run_plots(const DerivedModel& model, const Trajectory& traj, const std::filesystem::path& dir,
                            const std::string& stem) {
  Series vi{"v_i", traj.t, traj.v_i}, vf{"v_f", traj.t, traj.v_f};
  write_svg({vi, vf}, {"forward speed", "t [s]", "speed [m/s]"}, dir / (stem + "_speed.svg"));

  // shapes over the final second, ten snapshots
  std::vector<Series> shapes;
  const double t_end = traj.t.back();
  for (int i = 0; i < 10; ++i) {
    const double t = t_end - 1.0 + 0.1 * (i + 1);
    if (t < traj.t.front()) continue;
    const std::size_t k = detail::sample_index_at(traj, t);
    Series s = body_outline(model, traj.q[k]);
    s.label = "t = " + format_double(std::round(traj.t[k] * 100) / 100);
    shapes.push_back(std::move(s));
  }
  PlotSpec spec{"body shape", "X [m]", "Y [m]"};
  spec.equal_axes = true;
  write_svg(shapes, spec, dir / (stem + "_shapes.svg"));
}

inline void write_sweep_plots(const SweepResult& sweep, const std::filesystem::path& dir) {
  Series speed{"steady speed"}, cot{"COT"};
  for (const auto& r : sweep.rows) {
    if (!r.ok) continue;
    speed.x.push_back(r.value);
    speed.y.push_back(r.metrics.steady_speed);
    cot.x.push_back(r.value);
    cot.y.push_back(r.metrics.cot_defined ? r.metrics.cot : NAN);
  }
  const std::string name = to_string(sweep.parameter);
  PlotSpec spec{"steady speed vs " + name, name, "speed [m/s]"};
  spec.markers = true;
  write_svg({speed}, spec, dir / "sweep_speed.svg");
  spec = {"cost of transport vs " + name, name, "COT [-]"};
  spec.markers = true;
  write_svg({cot}, spec, dir / "sweep_cot.svg");
}

inline void write_convergence_plot(const std::vector<ConvergenceRow>& rows, const std::filesystem::path& dir) {
  std::vector<Series> paths;
  for (const auto& r : rows) {
    Series s{"N = " + std::to_string(r.modes)};
    for (const auto& p : r.head) {
      s.x.push_back(p.x());
      s.y.push_back(p.y());
    }
    paths.push_back(std::move(s));
  }
  PlotSpec spec{"head COM path", "X [m]", "Y [m]"};
  spec.equal_axes = true;
  write_svg(paths, spec, dir / "convergence_paths.svg");
}

}  // namespace fishsim

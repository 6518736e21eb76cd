#pragma once

// Physical and numerical parameters of the fish model, with JSON loading,
// validation and serialization. Units are SI throughout; see
// docs/config_schema.md for the file format.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace fishsim {

using Json = nlohmann::json;

/// Raised for malformed or invalid configuration; `field()` names the
/// offending entry using dotted JSON paths (e.g. "body.length").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Polynomial in arc length s (coefficients in ascending powers), defined on
/// [0, length].
struct PolyProfile {
  std::vector<double> coefficients;
  double length = 0.0;

  double operator()(double s) const { return eval(s); }

  double eval(double s) const {
    check_domain(s);
    return horner(s);
  }

  double derivative(double s) const {
    check_domain(s);
    double acc = 0.0;
    for (std::size_t i = coefficients.size(); i-- > 1;) acc = acc * s + static_cast<double>(i) * coefficients[i];
    return acc;
  }

  bool operator==(const PolyProfile&) const = default;

 private:
  void check_domain(double s) const {
    if (!(s >= 0.0 && s <= length)) {
      throw std::out_of_range("profile evaluated at s = " + std::to_string(s) + " outside [0, " +
                              std::to_string(length) + "]");
    }
  }
  double horner(double s) const {
    double acc = 0.0;
    for (std::size_t i = coefficients.size(); i-- > 0;) acc = acc * s + coefficients[i];
    return acc;
  }
};

inline double eval_profile(const PolyProfile& p, double s) { return p.eval(s); }

/// Coefficients of the product of two polynomials.
inline std::vector<double> poly_multiply(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

struct BodyGeometry {
  double length = 0.3;                          // L2 [m]
  PolyProfile width{{0.03}, 0.3};               // in-plane axis length w(s) [m]
  PolyProfile height{{0.05}, 0.3};              // depth h(s) [m]
  std::optional<PolyProfile> density;           // rho(s) [kg/m]; neutrally buoyant if absent
  PolyProfile youngs_modulus{{0.35e6, 0.0, 0.0, -0.7e6}, 0.3};  // E(s) [Pa]

  bool operator==(const BodyGeometry&) const = default;
};

struct HeadProperties {
  double mass = 1.0;                                     // m1 [kg]
  double inertia = 2e-3;                                 // I_G1 [kg m^2]
  double com_to_joint = 0.08;                            // L_G1J [m]
  std::array<double, 3> semi_axes{0.09, 0.04, 0.03};     // ellipsoid a, b, c [m]
  std::optional<Eigen::Matrix3d> added_mass;             // body frame; from the ellipsoid if absent
  Eigen::Matrix3d drag = Eigen::Vector3d(0.3, 1.5, 0.02).asDiagonal();  // body frame

  bool operator==(const HeadProperties&) const = default;
};

struct FluidProperties {
  double rho_water = 1000.0;  // [kg/m^3]
  double body_drag = 5.0;     // c_d [N s/m^2]

  bool operator==(const FluidProperties&) const = default;
};

enum class IntegratorKind { TrBdf2, Rk45 };
enum class AssemblyRoute { Jacobian, Hessian };

struct NumericsConfig {
  int modes = 5;                  // N
  std::optional<int> nodes;       // K; max(24, 2N + 14) if absent
  int inner_order = 8;            // per-node cumulative quadrature order
  IntegratorKind integrator = IntegratorKind::TrBdf2;
  AssemblyRoute assembly = AssemblyRoute::Jacobian;
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  double dt_min = 1e-10;          // [s]
  double dt_max = 5e-3;           // [s]
  double dt_initial = 1e-4;       // [s]
  double safety = 0.9;
  double sample_dt = 1e-2;        // [s]
  double gravity = 9.81;          // [m/s^2], used for the cost of transport

  int node_count() const { return nodes ? *nodes : std::max(24, 2 * modes + 14); }
  int state_dim() const { return modes + 3; }

  bool operator==(const NumericsConfig&) const = default;
};

struct GaitConfig {
  double amplitude = 0.4;  // [rad]
  double frequency = 2.0;  // [Hz]

  bool operator==(const GaitConfig&) const = default;
};

struct PdGains {
  double kp = 3.0;       // [N m/rad]
  double kd = 0.05;      // [N m s/rad]
  double tau_max = 2.0;  // [N m]

  bool operator==(const PdGains&) const = default;
};

struct PiGains {
  double kp = 10.0;     // [Hz s/m]
  double ki = 4.0;      // [Hz/m]
  double f_min = 0.3;   // [Hz]
  double f_max = 4.0;   // [Hz]

  bool operator==(const PiGains&) const = default;
};

struct ControlConfig {
  PdGains pd;
  PiGains pi;
  double ema_cutoff_hz = 0.25;  // tau_f = 1 / (2 pi f_c)

  double ema_time_constant() const { return 1.0 / (2.0 * M_PI * ema_cutoff_hz); }

  bool operator==(const ControlConfig&) const = default;
};

struct InitialState {
  std::vector<double> q;
  std::vector<double> qd;

  bool operator==(const InitialState&) const = default;
};

struct ModelConfig {
  BodyGeometry body;
  HeadProperties head;
  FluidProperties fluid;
  NumericsConfig numerics;
  GaitConfig gait;
  ControlConfig control;
  std::optional<InitialState> initial_state;

  /// Same configuration with every fluid load removed (no added mass, no drag).
  ModelConfig without_fluid() const {
    ModelConfig c = *this;
    c.fluid.rho_water = 0.0;
    c.fluid.body_drag = 0.0;
    c.head.added_mass = Eigen::Matrix3d::Zero();
    c.head.drag = Eigen::Matrix3d::Zero();
    if (!c.body.density) c.body.density = neutral_density();
    return c;
  }

  /// rho(s) = rho_water * pi * w(s) h(s) / 4 (neutrally buoyant section).
  PolyProfile neutral_density() const {
    auto coeffs = poly_multiply(body.width.coefficients, body.height.coefficients);
    for (double& c : coeffs) c *= fluid.rho_water * M_PI / 4.0;
    return PolyProfile{coeffs, body.length};
  }

  PolyProfile density_profile() const { return body.density ? *body.density : neutral_density(); }

  bool operator==(const ModelConfig&) const = default;
};

// ---------------------------------------------------------------------------
// validation

namespace detail {

inline void require_positive_profile(const PolyProfile& p, const std::string& field) {
  if (p.coefficients.empty()) throw ConfigError(field, "profile needs at least one coefficient");
  for (double c : p.coefficients)
    if (!std::isfinite(c)) throw ConfigError(field, "non-finite coefficient");
  constexpr int kSamples = 2000;
  for (int i = 0; i <= kSamples; ++i) {
    const double s = p.length * i / kSamples;
    if (!(p.eval(s) > 0.0)) {
      throw ConfigError(field, "profile must be strictly positive on [0, L2]; value " + std::to_string(p.eval(s)) +
                                   " at s = " + std::to_string(s));
    }
  }
}

inline void require_psd(const Eigen::Matrix3d& m, const std::string& field) {
  if (!m.allFinite()) throw ConfigError(field, "non-finite entry");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw ConfigError(field, "matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw ConfigError(field, "matrix must be positive semidefinite");
}

inline void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace detail

constexpr int kMaxModes = 8;

inline void validate(const ModelConfig& c) {
  using detail::require;
  const auto& b = c.body;
  require(std::isfinite(b.length) && b.length > 0.0, "body.length", "must be positive");
  for (auto* p : {&b.width, &b.height, &b.youngs_modulus})
    require(p->length == b.length, "body", "profile domain must equal body.length");
  detail::require_positive_profile(b.width, "body.width");
  detail::require_positive_profile(b.height, "body.height");
  detail::require_positive_profile(b.youngs_modulus, "body.youngs_modulus");
  if (b.density) {
    require(b.density->length == b.length, "body.density", "profile domain must equal body.length");
    detail::require_positive_profile(*b.density, "body.density");
  } else {
    require(c.fluid.rho_water > 0.0, "body.density",
            "required when fluid.density is zero (cannot derive a neutrally buoyant density)");
  }

  const auto& h = c.head;
  require(std::isfinite(h.mass) && h.mass > 0.0, "head.mass", "must be positive");
  require(std::isfinite(h.inertia) && h.inertia > 0.0, "head.inertia", "must be positive");
  require(std::isfinite(h.com_to_joint) && h.com_to_joint >= 0.0, "head.com_to_joint", "must be non-negative");
  for (double a : h.semi_axes) require(std::isfinite(a) && a > 0.0, "head.semi_axes", "must be positive");
  if (h.added_mass) detail::require_psd(*h.added_mass, "head.added_mass");
  detail::require_psd(h.drag, "head.drag");

  require(std::isfinite(c.fluid.rho_water) && c.fluid.rho_water >= 0.0, "fluid.density", "must be non-negative");
  require(std::isfinite(c.fluid.body_drag) && c.fluid.body_drag >= 0.0, "fluid.body_drag", "must be non-negative");

  const auto& n = c.numerics;
  require(n.modes >= 1 && n.modes <= kMaxModes, "numerics.modes",
          "must be in [1, " + std::to_string(kMaxModes) + "]");
  require(n.node_count() >= 2 * n.modes, "numerics.nodes", "must be at least 2 * numerics.modes");
  require(n.inner_order >= 1, "numerics.inner_order", "must be >= 1");
  require(n.abs_tol > 0.0 && n.rel_tol > 0.0, "numerics.abs_tol", "tolerances must be positive");
  require(n.dt_min > 0.0 && n.dt_min <= n.dt_max, "numerics.dt_min", "need 0 < dt_min <= dt_max");
  require(n.dt_initial > 0.0, "numerics.dt_initial", "must be positive");
  require(n.safety > 0.0 && n.safety <= 1.0, "numerics.safety", "must be in (0, 1]");
  require(n.sample_dt > 0.0, "numerics.sample_dt", "must be positive");
  require(n.gravity > 0.0, "numerics.gravity", "must be positive");

  require(c.gait.amplitude >= 0.0, "gait.amplitude", "must be non-negative");
  require(c.gait.frequency > 0.0, "gait.frequency", "must be positive");
  const auto& ctl = c.control;
  require(ctl.pd.kp >= 0.0 && ctl.pd.kd >= 0.0, "control.pd", "gains must be non-negative");
  require(ctl.pd.tau_max > 0.0, "control.pd.tau_max", "must be positive");
  require(ctl.ema_cutoff_hz > 0.0, "control.ema_cutoff_hz", "must be positive");
  require(ctl.pi.f_min > 0.0 && ctl.pi.f_min < ctl.pi.f_max, "control.pi.f_min", "need 0 < f_min < f_max");

  if (c.initial_state) {
    const auto nq = static_cast<std::size_t>(n.state_dim());
    require(c.initial_state->q.size() == nq && c.initial_state->qd.size() == nq, "initial_state",
            "q and qd must each have modes + 3 entries");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  Reader section(const char* key) const {
    static const Json empty = Json::object();
    used_.insert(key);
    return has(key) ? Reader(j_.at(key), child(key)) : Reader(empty, child(key));
  }

  double number(const char* key, double fallback) const {
    used_.insert(key);
    if (!has(key)) return fallback;
    return as_number(j_.at(key), child(key));
  }

  double required_number(const char* key) const {
    used_.insert(key);
    if (!has(key)) throw ConfigError(child(key), "missing required field");
    return as_number(j_.at(key), child(key));
  }

  int integer(const char* key, int fallback) const {
    used_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
    return v.get<int>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    used_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) const {
    used_.insert(key);
    const auto& v = j_.at(key);
    const std::string f = child(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(f, "expected a number or an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(e, f));
    return out;
  }

  std::optional<Eigen::Matrix3d> matrix3(const char* key) const {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    const std::string f = child(key);
    Eigen::Matrix3d m;
    if (v.is_array() && v.size() == 3 && v[0].is_array()) {
      for (int r = 0; r < 3; ++r) {
        if (!v[r].is_array() || v[r].size() != 3) throw ConfigError(f, "expected a 3x3 matrix");
        for (int c = 0; c < 3; ++c) m(r, c) = as_number(v[r][c], f);
      }
      return m;
    }
    const auto vals = numbers(key);
    if (vals.size() == 3) return Eigen::Vector3d(vals[0], vals[1], vals[2]).asDiagonal();
    if (vals.size() != 9) throw ConfigError(f, "expected 3 diagonal entries or a 3x3 matrix");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = vals[3 * r + c];
    return m;
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(child(it.key().c_str()), "unknown field");
  }

 private:
  static double as_number(const Json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    return v.get<double>();
  }

  const Json& j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

}  // namespace detail

/// Builds a validated configuration from parsed JSON. Missing sections and
/// fields take the documented defaults; `body.length` is required.
inline ModelConfig config_from_json(const Json& root) {
  ModelConfig c;
  detail::Reader r(root, "");

  {
    auto b = r.section("body");
    c.body.length = b.required_number("length");
    auto profile = [&](const char* key, const PolyProfile& fallback) {
      PolyProfile p = fallback;
      if (b.has(key)) p.coefficients = b.numbers(key);
      else b.number(key, 0.0);  // mark as seen
      p.length = c.body.length;
      return p;
    };
    c.body.width = profile("width", c.body.width);
    c.body.height = profile("height", c.body.height);
    c.body.youngs_modulus = profile("youngs_modulus", c.body.youngs_modulus);
    if (b.has("density")) c.body.density = PolyProfile{b.numbers("density"), c.body.length};
    else b.number("density", 0.0);
    b.reject_unknown();
  }
  {
    auto h = r.section("head");
    c.head.mass = h.number("mass", c.head.mass);
    c.head.inertia = h.number("inertia", c.head.inertia);
    c.head.com_to_joint = h.number("com_to_joint", c.head.com_to_joint);
    if (h.has("semi_axes")) {
      auto v = h.numbers("semi_axes");
      if (v.size() != 3) throw ConfigError(h.child("semi_axes"), "expected three semi-axes");
      c.head.semi_axes = {v[0], v[1], v[2]};
    } else {
      h.number("semi_axes", 0.0);
    }
    c.head.added_mass = h.matrix3("added_mass");
    if (auto d = h.matrix3("drag")) c.head.drag = *d;
    h.reject_unknown();
  }
  {
    auto f = r.section("fluid");
    c.fluid.rho_water = f.number("density", c.fluid.rho_water);
    c.fluid.body_drag = f.number("body_drag", c.fluid.body_drag);
    f.reject_unknown();
  }
  {
    auto n = r.section("numerics");
    c.numerics.modes = n.integer("modes", c.numerics.modes);
    if (n.has("nodes")) c.numerics.nodes = n.integer("nodes", 0);
    else n.number("nodes", 0.0);
    c.numerics.inner_order = n.integer("inner_order", c.numerics.inner_order);
    const auto integrator = n.string("integrator", "trbdf2");
    if (integrator == "trbdf2") c.numerics.integrator = IntegratorKind::TrBdf2;
    else if (integrator == "rk45") c.numerics.integrator = IntegratorKind::Rk45;
    else throw ConfigError("numerics.integrator", "expected \"trbdf2\" or \"rk45\"");
    const auto assembly = n.string("assembly", "jacobian");
    if (assembly == "jacobian") c.numerics.assembly = AssemblyRoute::Jacobian;
    else if (assembly == "hessian") c.numerics.assembly = AssemblyRoute::Hessian;
    else throw ConfigError("numerics.assembly", "expected \"jacobian\" or \"hessian\"");
    c.numerics.abs_tol = n.number("abs_tol", c.numerics.abs_tol);
    c.numerics.rel_tol = n.number("rel_tol", c.numerics.rel_tol);
    c.numerics.dt_min = n.number("dt_min", c.numerics.dt_min);
    c.numerics.dt_max = n.number("dt_max", c.numerics.dt_max);
    c.numerics.dt_initial = n.number("dt_initial", c.numerics.dt_initial);
    c.numerics.safety = n.number("safety", c.numerics.safety);
    c.numerics.sample_dt = n.number("sample_dt", c.numerics.sample_dt);
    c.numerics.gravity = n.number("gravity", c.numerics.gravity);
    n.reject_unknown();
  }
  {
    auto g = r.section("gait");
    c.gait.amplitude = g.number("amplitude", c.gait.amplitude);
    c.gait.frequency = g.number("frequency", c.gait.frequency);
    g.reject_unknown();
  }
  {
    auto ctl = r.section("control");
    auto pd = ctl.section("pd");
    c.control.pd.kp = pd.number("kp", c.control.pd.kp);
    c.control.pd.kd = pd.number("kd", c.control.pd.kd);
    c.control.pd.tau_max = pd.number("tau_max", c.control.pd.tau_max);
    pd.reject_unknown();
    auto pi = ctl.section("pi");
    c.control.pi.kp = pi.number("kp", c.control.pi.kp);
    c.control.pi.ki = pi.number("ki", c.control.pi.ki);
    c.control.pi.f_min = pi.number("f_min", c.control.pi.f_min);
    c.control.pi.f_max = pi.number("f_max", c.control.pi.f_max);
    pi.reject_unknown();
    c.control.ema_cutoff_hz = ctl.number("ema_cutoff_hz", c.control.ema_cutoff_hz);
    ctl.reject_unknown();
  }
  if (r.has("initial_state")) {
    auto s = r.section("initial_state");
    InitialState init;
    init.q = s.numbers("q");
    init.qd = s.numbers("qd");
    s.reject_unknown();
    c.initial_state = init;
  } else {
    r.section("initial_state");
  }
  r.reject_unknown();

  validate(c);
  return c;
}

inline ModelConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file>", std::string("parse failure: ") + e.what());
  }
  return config_from_json(j);
}

inline ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace detail {
inline Json matrix_json(const Eigen::Matrix3d& m) {
  Json out = Json::array();
  for (int r = 0; r < 3; ++r) out.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return out;
}
}  // namespace detail

inline Json to_json(const ModelConfig& c) {
  Json j;
  j["body"]["length"] = c.body.length;
  j["body"]["width"] = c.body.width.coefficients;
  j["body"]["height"] = c.body.height.coefficients;
  j["body"]["youngs_modulus"] = c.body.youngs_modulus.coefficients;
  if (c.body.density) j["body"]["density"] = c.body.density->coefficients;

  j["head"]["mass"] = c.head.mass;
  j["head"]["inertia"] = c.head.inertia;
  j["head"]["com_to_joint"] = c.head.com_to_joint;
  j["head"]["semi_axes"] = c.head.semi_axes;
  if (c.head.added_mass) j["head"]["added_mass"] = detail::matrix_json(*c.head.added_mass);
  j["head"]["drag"] = detail::matrix_json(c.head.drag);

  j["fluid"]["density"] = c.fluid.rho_water;
  j["fluid"]["body_drag"] = c.fluid.body_drag;

  const auto& n = c.numerics;
  j["numerics"]["modes"] = n.modes;
  if (n.nodes) j["numerics"]["nodes"] = *n.nodes;
  j["numerics"]["inner_order"] = n.inner_order;
  j["numerics"]["integrator"] = n.integrator == IntegratorKind::TrBdf2 ? "trbdf2" : "rk45";
  j["numerics"]["assembly"] = n.assembly == AssemblyRoute::Jacobian ? "jacobian" : "hessian";
  j["numerics"]["abs_tol"] = n.abs_tol;
  j["numerics"]["rel_tol"] = n.rel_tol;
  j["numerics"]["dt_min"] = n.dt_min;
  j["numerics"]["dt_max"] = n.dt_max;
  j["numerics"]["dt_initial"] = n.dt_initial;
  j["numerics"]["safety"] = n.safety;
  j["numerics"]["sample_dt"] = n.sample_dt;
  j["numerics"]["gravity"] = n.gravity;

  j["gait"]["amplitude"] = c.gait.amplitude;
  j["gait"]["frequency"] = c.gait.frequency;

  j["control"]["pd"] = {{"kp", c.control.pd.kp}, {"kd", c.control.pd.kd}, {"tau_max", c.control.pd.tau_max}};
  j["control"]["pi"] = {{"kp", c.control.pi.kp},
                        {"ki", c.control.pi.ki},
                        {"f_min", c.control.pi.f_min},
                        {"f_max", c.control.pi.f_max}};
  j["control"]["ema_cutoff_hz"] = c.control.ema_cutoff_hz;

  if (c.initial_state) {
    j["initial_state"]["q"] = c.initial_state->q;
    j["initial_state"]["qd"] = c.initial_state->qd;
  }
  return j;
}

inline std::string serialize(const ModelConfig& c) { return to_json(c).dump(2); }

/// Documented default parameter set (see docs/config_schema.md).
inline ModelConfig default_config() {
  ModelConfig c;
  validate(c);
  return c;
}

}  // namespace fishsim

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fishsim/config.hpp"
#include "fishsim/model.hpp"

using namespace fishsim;

namespace {

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const auto c = default_config();
  EXPECT_DOUBLE_EQ(c.body.length, 0.3);
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.numerics.state_dim(), c.numerics.modes + 3);
}

TEST(Config, MinimalFileTakesDefaults) {
  const auto c = parse_config(R"({"body": {"length": 0.3}})");
  EXPECT_EQ(c, default_config());
}

TEST(Config, ShippedDefaultFileLoads) {
  const auto path = std::filesystem::path(FISHSIM_SOURCE_DIR) / "configs" / "default.json";
  const auto c = load_config(path.string());
  EXPECT_EQ(c, default_config());
}

TEST(Config, NegativeLengthNamesField) { EXPECT_EQ(field_of(R"({"body": {"length": -0.1}})"), "body.length"); }

TEST(Config, MissingLengthNamesField) { EXPECT_EQ(field_of(R"({"body": {}})"), "body.length"); }

TEST(Config, InvariantViolationsNameTheirFields) {
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3, "width": [0.03, -1.0]}})"), "body.width");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "head": {"mass": 0}})"), "head.mass");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "head": {"drag": [1, -1, 1]}})"), "head.drag");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "fluid": {"body_drag": -1}})"), "fluid.body_drag");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "numerics": {"modes": 0}})"), "numerics.modes");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "numerics": {"modes": 5, "nodes": 9}})"), "numerics.nodes");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "numerics": {"integrator": "euler"}})"), "numerics.integrator");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "gait": {"frequencyy": 2}})"), "gait.frequencyy");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "fluid": {"density": 0}})"), "body.density");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3}, "initial_state": {"q": [0], "qd": [0]}})"), "initial_state");
  EXPECT_EQ(field_of(R"({"body": {"length": 0.3)"), "<file>");
}

TEST(Config, CubicStiffnessProfileAccepted) {
  const auto c = parse_config(R"({"body": {"length": 0.3, "youngs_modulus": [0.35e6, 0, 0, -0.7e6]}})");
  for (int i = 0; i <= 30; ++i) EXPECT_GT(c.body.youngs_modulus.eval(0.01 * i), 0.0);
}

TEST(Config, AddedMassAndDragMatrixForms) {
  const auto diag = parse_config(R"({"body": {"length": 0.3}, "head": {"added_mass": [1, 2, 3]}})");
  EXPECT_EQ(*diag.head.added_mass, Eigen::Matrix3d(Eigen::Vector3d(1, 2, 3).asDiagonal()));
  const auto nested =
      parse_config(R"({"body": {"length": 0.3}, "head": {"drag": [[1, 0.1, 0], [0.1, 2, 0], [0, 0, 3]]}})");
  EXPECT_DOUBLE_EQ(nested.head.drag(0, 1), 0.1);
  const auto flat = parse_config(R"({"body": {"length": 0.3}, "head": {"drag": [1, 0.1, 0, 0.1, 2, 0, 0, 0, 3]}})");
  EXPECT_EQ(flat.head.drag, nested.head.drag);
}

TEST(Config, SerializeRoundTrip) {
  auto c = default_config();
  c.body.density = PolyProfile{{1.1, 0.2, -0.5}, 0.3};
  c.head.added_mass = Eigen::Vector3d(0.1, 0.3, 1e-4).asDiagonal();
  c.numerics.nodes = 30;
  c.numerics.assembly = AssemblyRoute::Hessian;
  c.numerics.integrator = IntegratorKind::Rk45;
  c.gait.frequency = 1.0 / 3.0;
  c.initial_state = InitialState{{0, 0, 0.1, 0.2, 0, 0, 0, 0}, {0.01, 0, 0, 0, 0, 0, 0, 1e-17}};
  const auto back = parse_config(serialize(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Config, LoadReportsMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/dir/config.json"), ConfigError);
}

TEST(Profile, EvaluationAndDomain) {
  const PolyProfile E{{0.35e6, 0.0, 0.0, -0.7e6}, 0.3};
  EXPECT_DOUBLE_EQ(eval_profile(E, 0.0), 0.35e6);
  EXPECT_NEAR(eval_profile(E, 0.3), 331100.0, 1e-8);
  EXPECT_EQ(eval_profile(PolyProfile{{0.0, 0.0, 0.0}, 0.3}, 0.17), 0.0);
  EXPECT_THROW(eval_profile(E, 0.3001), std::out_of_range);
  EXPECT_THROW(eval_profile(E, -1e-9), std::out_of_range);
  EXPECT_NEAR(E.derivative(0.2), -3 * 0.7e6 * 0.04, 1e-6);
}

TEST(DerivedModel, AddedMassPerLengthAndSectionInertia) {
  auto c = default_config();
  c.body.height = PolyProfile{{0.05}, 0.3};
  const auto m = derive_model(c);
  EXPECT_NEAR(m.added_mass_per_length(0.1), 1.9634954084936207, 1e-12);

  c.body.width = PolyProfile{{0.04}, 0.3};
  c.body.height = PolyProfile{{0.04}, 0.3};
  const auto circ = derive_model(c);
  EXPECT_NEAR(circ.second_moment(0.2), M_PI * std::pow(0.04, 4) / 64.0, 1e-20);
}

TEST(DerivedModel, TotalMassByQuadrature) {
  auto c = default_config();
  c.body.density = PolyProfile{{1.0}, 0.3};
  c.head.mass = 0.2;
  EXPECT_NEAR(derive_model(c).m_total, 0.5, 1e-14);
}

TEST(DerivedModel, TotalMassStableUnderGridRefinement) {
  auto c = default_config();
  c.body.density = PolyProfile{{1.0, -3.0, 8.0, 4.0, -2.0}, 0.3};
  c.numerics.nodes = 12;
  const double m12 = derive_model(c).m_total;
  c.numerics.nodes = 24;
  const double m24 = derive_model(c).m_total;
  EXPECT_NEAR(m12 / m24, 1.0, 1e-12);
}

TEST(DerivedModel, DeterministicTables) {
  const auto a = derive_model(default_config());
  const auto b = derive_model(default_config());
  EXPECT_EQ(a.nodes.psi, b.nodes.psi);
  EXPECT_EQ(a.nodes.sub_psi, b.nodes.sub_psi);
  EXPECT_EQ(a.nodes.bending, b.nodes.bending);
  EXPECT_EQ(a.nodes.rho_a, b.nodes.rho_a);
  for (double r : a.nodes.rho_a) EXPECT_GE(r, 0.0);
}

TEST(DerivedModel, NeutralDensityMatchesDisplacedWater) {
  const auto m = derive_model(default_config());
  // elliptical section pi w h / 4 with w = 0.03, h = 0.05
  EXPECT_NEAR(m.density.eval(0.1), 1000.0 * M_PI * 0.03 * 0.05 / 4.0, 1e-12);
}

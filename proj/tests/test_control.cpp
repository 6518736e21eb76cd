#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fishsim/control.hpp"

using namespace fishsim;

TEST(PdServo, ZeroErrorGivesZeroTorque) {
  const GaitReference ref{0.4, 0.7, 2.0};
  EXPECT_DOUBLE_EQ(pd_joint_torque(ref.angle(), ref.rate(), ref, PdGains{}), 0.0);
}

TEST(PdServo, ProportionalTerm) {
  const GaitReference ref{0.0, 0.0, 2.0};
  EXPECT_NEAR(pd_joint_torque(-0.1, 0.0, ref, PdGains{2.0, 0.0, 10.0}), 0.2, 1e-15);
}

TEST(PdServo, RateOnlyTerm) {
  const GaitReference ref{0.4, 0.0, 2.0};
  EXPECT_NEAR(pd_joint_torque(0.0, 0.0, ref, PdGains{0.0, 1.0, 10.0}), 0.4 * 4 * M_PI, 1e-14);
}

TEST(PdServo, SaturatesSymmetrically) {
  const GaitReference ref{0.0, 0.0, 1.0};
  const PdGains g{100.0, 0.0, 2.0};
  EXPECT_EQ(pd_joint_torque(-1.0, 0.0, ref, g), 2.0);
  EXPECT_EQ(pd_joint_torque(1.0, 0.0, ref, g), -2.0);
}

TEST(PdServo, OddUnderMirroring) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  const PdGains g{3.0, 0.05, 0.5};
  for (int i = 0; i < 100; ++i) {
    const GaitReference ref{0.4, 10 * u(rng), 2.0};
    const GaitReference mirrored{ref.amplitude, ref.phase + M_PI, ref.frequency};  // sin, cos flip sign
    const double q = u(rng), qd = 5 * u(rng);
    EXPECT_NEAR(pd_joint_torque(-q, -qd, mirrored, g), -pd_joint_torque(q, qd, ref, g), 1e-14);
  }
}

TEST(Ema, ValueAtOneTimeConstant) {
  EmaFilter f;
  f.time_constant = 1.0 / (2 * M_PI * 0.25);
  const int steps = 1000;
  for (int i = 0; i < steps; ++i) ema_update(f, 1.0, f.time_constant / steps);
  EXPECT_NEAR(f.value, 1.0 - std::exp(-1.0), 1e-12);
  EXPECT_NEAR(f.value, 0.6321, 1e-4);
}

TEST(Ema, FixedPoint) {
  EmaFilter f{0.5, 0.3};
  ema_update(f, 0.3, 0.01);
  EXPECT_EQ(f.value, 0.3);
}

TEST(Ema, ExactForPiecewiseConstantInputIndependentOfStep) {
  // analytic solution over segments of constant input
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  const double tau = 0.6;
  for (int trial = 0; trial < 20; ++trial) {
    const double v1 = u(rng), v2 = u(rng), t1 = 0.3 + 0.5 * std::abs(u(rng)), t2 = 0.2 + std::abs(u(rng));
    double exact = v1 * (1 - std::exp(-t1 / tau));
    exact = v2 + (exact - v2) * std::exp(-t2 / tau);
    for (int n : {1, 7, 100}) {
      EmaFilter f{tau, 0.0};
      for (int i = 0; i < n; ++i) ema_update(f, v1, t1 / n);
      for (int i = 0; i < n; ++i) ema_update(f, v2, t2 / n);
      EXPECT_NEAR(f.value, exact, 1e-12);
    }
  }
}

TEST(Ema, RejectsNonPositiveStep) {
  EmaFilter f;
  EXPECT_THROW(ema_update(f, 1.0, 0.0), std::invalid_argument);
}

TEST(PiLoop, ZeroErrorClampsToFloor) {
  PiState s;
  GaitReference ref;
  EXPECT_EQ(pi_speed_to_frequency(PiGains{}, s, ref, 0.1, 0.1, 0.01), PiGains{}.f_min);
}

TEST(PiLoop, LargeErrorSaturatesAndFreezesIntegrator) {
  PiState s;
  GaitReference ref;
  const PiGains g{100.0, 4.0, 0.3, 4.0};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(pi_speed_to_frequency(g, s, ref, 0.0, 1.0, 0.01), 4.0);
  EXPECT_TRUE(s.saturated);
  EXPECT_EQ(s.integral, 0.0);
}

TEST(PiLoop, IntegralOnlyRamp) {
  PiState s;
  GaitReference ref;
  const PiGains g{0.0, 5.0, 0.1, 5.0};
  double f = 0.0;
  for (int i = 0; i < 100; ++i) f = pi_speed_to_frequency(g, s, ref, 0.0, 0.1, 0.01);
  EXPECT_NEAR(f, 0.5, 1e-12);
}

TEST(PiLoop, PhaseIsContinuousAcrossFrequencyChanges) {
  PiState s;
  GaitReference ref;
  const PiGains g{10.0, 4.0, 0.3, 4.0};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double dt = 0.01;
  for (int i = 0; i < 500; ++i) {
    const double before = ref.phase;
    pi_speed_to_frequency(g, s, ref, u(rng), 0.1, dt);
    const double jump = ref.phase - before;
    EXPECT_GE(jump, 0.0);
    EXPECT_LE(jump, 2 * M_PI * g.f_max * dt + 1e-15);
  }
}

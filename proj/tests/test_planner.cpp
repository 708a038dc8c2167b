// Copyright 2026 The mftwbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "mftwbc/planner.hpp"
#include "test_util.hpp"

namespace mftwbc {
namespace {

using testing::uniform;

TEST(BaseReference, HeightAndZeroPitch) {
  for (double h : {0.40, 0.44}) {
    const BaseReference b = base_reference(Command{h, 0.3});
    EXPECT_EQ(b.height, h);
    EXPECT_EQ(b.pitch, 0.0);
  }
}

TEST(CommandProfile, PiecewiseConstant) {
  CommandProfile p;
  p.points = {{0.0, {0.40, 0.0}}, {2.0, {0.40, 0.3}}};
  EXPECT_EQ(p.at(1.99).speed, 0.0);
  EXPECT_EQ(p.at(2.0).speed, 0.3);
  EXPECT_EQ(p.at(5.0).speed, 0.3);
}

TEST(Pendulum, NoTimeLeftReturnsNow) {
  const ComState s = predict_preimpact_com({0.1, 0.3}, 0.0, 0.4, 0.0, 9.81);
  EXPECT_EQ(s.x, 0.1);
  EXPECT_EQ(s.xd, 0.3);
}

TEST(Pendulum, BallisticLimit) {
  const ComState s = predict_preimpact_com({0.1, 0.3}, 0.0, 0.4, 0.2, 1e-12);
  EXPECT_NEAR(s.x, 0.1 + 0.3 * 0.2, 1e-9);
  EXPECT_NEAR(s.xd, 0.3, 1e-9);
}

// Against a fine RK4 integration of xdd = g/z (x - p).
TEST(Pendulum, MatchesIntegration) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const double z = uniform(rng, 0.3, 0.5), p = uniform(rng, -0.1, 0.1), T = uniform(rng, 0.05, 0.4);
    ComState s{uniform(rng, -0.1, 0.1), uniform(rng, -0.5, 0.5)};
    const ComState pred = predict_preimpact_com(s, p, z, T, 9.81);
    const int n = 4000;
    const double h = T / n, w2 = 9.81 / z;
    auto f = [&](double x, double v) { return std::pair{v, w2 * (x - p)}; };
    for (int k = 0; k < n; ++k) {
      auto [a1, b1] = f(s.x, s.xd);
      auto [a2, b2] = f(s.x + 0.5 * h * a1, s.xd + 0.5 * h * b1);
      auto [a3, b3] = f(s.x + 0.5 * h * a2, s.xd + 0.5 * h * b2);
      auto [a4, b4] = f(s.x + h * a3, s.xd + h * b3);
      s.x += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
      s.xd += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
    }
    EXPECT_NEAR(pred.x, s.x, 1e-10);
    EXPECT_NEAR(pred.xd, s.xd, 1e-10);
  }
}

TEST(FootPlacement, Law) {
  EXPECT_NEAR(foot_placement(1.0, 1.0, 1.0, 0.16, 0.08), 1.16, 1e-15);
  EXPECT_NEAR(foot_placement(0.0, 0.5, 0.3, 0.16, 0.08), 0.16 * 0.5 + 0.08 * 0.2, 1e-15);
}

// The symmetric orbit: start at -a with speed v*, end at +a with speed v*,
// average speed over the step equals the command.
TEST(PreimpactSpeed, SymmetricOrbitAverage) {
  EXPECT_EQ(desired_preimpact_speed(0.0, 0.35, 0.4, 9.81), 0.0);
  double prev = -1.0;
  for (double v : {0.1, 0.2, 0.3, 0.5}) {
    const double star = desired_preimpact_speed(v, 0.35, 0.4, 9.81);
    EXPECT_GT(star, prev);
    EXPECT_GT(star, v);
    prev = star;
    // Orbit symmetric about the support point: x(0) = -a, xd(0) = v*.
    const double w = std::sqrt(9.81 / 0.4), T = 0.35;
    const double a = star * std::tanh(0.5 * w * T) / w;
    const ComState end = predict_preimpact_com({-a, star}, 0.0, 0.4, T, 9.81);
    EXPECT_NEAR(end.x, a, 1e-12);
    EXPECT_NEAR(end.xd, star, 1e-12);
    EXPECT_NEAR(2.0 * a / T, v, 1e-12);
  }
}

// Step-to-step rollout of the pendulum under the placement law: from rest the
// orbit settles at the commanded average speed.
TEST(PreimpactSpeed, PlacementLawSettlesOnCommand) {
  const double z = 0.33, T = 0.35, g = 9.81;
  for (double v : {0.0, 0.2, 0.4, -0.3}) {
    const double ref = placement_speed_reference(v, T, z, g, 0.16, 0.08);
    ComState s{0.0, 0.0};
    double foot = 0.0, start = 0.0;
    for (int k = 0; k < 400; ++k) {
      start = s.x;
      s = predict_preimpact_com(s, foot, z, T, g);
      foot = foot_placement(s.x, s.xd, ref, 0.16, 0.08);
    }
    EXPECT_NEAR((s.x - start) / T, v, 1e-9);
    EXPECT_NEAR(s.xd, desired_preimpact_speed(v, T, z, g), 1e-9);
  }
}

TEST(Swing, BoundaryConditions) {
  const SwingTrajectory s(Vec2(0.1, 0.0), 0.3, 0.06, 1.0, 0.35);
  const SwingSample a = s.at(1.0);
  EXPECT_NEAR((a.p - Vec2(0.1, 0.0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(a.v.norm(), 0.0, 1e-15);
  const SwingSample m = s.at(1.175);
  EXPECT_NEAR(m.p.y(), 0.06, 1e-15);
  EXPECT_NEAR(m.v.y(), 0.0, 1e-12);
  EXPECT_NEAR(m.p.x(), 0.2, 1e-12);
  const SwingSample e = s.at(1.35);
  EXPECT_NEAR((e.p - Vec2(0.3, 0.0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(e.v.x(), 0.0, 1e-12);
  // Late: keeps sinking.
  const SwingSample late = s.at(1.45);
  EXPECT_NEAR(late.p.y(), -0.1 * 0.1, 1e-12);
  EXPECT_NEAR(late.v.y(), -0.1, 1e-15);
}

TEST(Swing, DerivativesConsistent) {
  const SwingTrajectory s(Vec2(-0.05, 0.01), 0.2, 0.06, 0.0, 0.35);
  const double h = 1e-6;
  for (double t = 0.01; t < 0.34; t += 0.013) {
    const SwingSample a = s.at(t - h), b = s.at(t), c = s.at(t + h);
    EXPECT_NEAR(((c.p - a.p) / (2 * h) - b.v).norm(), 0.0, 1e-6);
    if (std::abs(t - 0.175) > 2e-6) EXPECT_NEAR(((c.v - a.v) / (2 * h) - b.a).norm(), 0.0, 1e-4);
  }
}

TEST(Swing, RetargetKeepsPositionAndVelocity) {
  SwingTrajectory s(Vec2(0.0, 0.0), 0.2, 0.06, 0.0, 0.35);
  const double t = 0.175;
  const SwingSample before = s.at(t);
  s.retarget(t, 0.35);
  const SwingSample after = s.at(t);
  EXPECT_NEAR((before.p - after.p).norm(), 0.0, 1e-12);
  EXPECT_NEAR((before.v - after.v).norm(), 0.0, 1e-12);
  EXPECT_NEAR(s.at(0.35).p.x(), 0.35, 1e-12);
  EXPECT_NEAR(s.at(0.35).v.x(), 0.0, 1e-12);
}

PlannerInput standing_input(double t, double x_rear, double x_fore, double com_x) {
  PlannerInput in;
  in.t = t;
  in.foot_p = {Vec2(x_rear, 0.0), Vec2(x_fore, 0.0)};
  in.normal_force = {110.0, 110.0};
  in.com = {com_x, 0.0};
  in.com_height = 0.4;
  return in;
}

TEST(Gait, TouchdownSwapsLegsAndResetsTimer) {
  Gait g(PlannerConfig{}, 9.81);
  PlannerInput in = standing_input(0.0, 0.0, 0.0, 0.0);
  g.stand(in.foot_p);
  EXPECT_FALSE(g.walking());
  g.start_walking(0, 0.0, in, Command{});
  EXPECT_EQ(g.swing_leg(), 0);
  EXPECT_EQ(g.phase()[0], ContactPhase::Swing);
  EXPECT_EQ(g.phase()[1], ContactPhase::Stance);

  // Early contact is ignored.
  in.t = 0.05;
  EXPECT_EQ(g.update(in, Command{}), GaitEvent::None);
  in.normal_force[0] = 0.0;
  for (int k = 60; k < 300; ++k) {
    in.t = 1e-3 * k;
    EXPECT_EQ(g.update(in, Command{}), GaitEvent::None);
  }
  // Foot comes down at x = 0.02 and stays loaded for the hold time.
  in.foot_p[0] = Vec2(0.02, 0.0);
  in.normal_force[0] = 50.0;
  GaitEvent ev = GaitEvent::None;
  for (int k = 301; ev == GaitEvent::None && k < 320; ++k) {
    in.t = 1e-3 * k;
    ev = g.update(in, Command{});
  }
  EXPECT_EQ(ev, GaitEvent::TouchDown);
  EXPECT_NEAR(g.last_touchdown_time(), 0.303, 1e-12);
  EXPECT_EQ(g.steps(), 1);
  EXPECT_EQ(g.swing_leg(), 1);
  EXPECT_EQ(g.phase()[0], ContactPhase::Stance);
  EXPECT_EQ(g.phase()[1], ContactPhase::Swing);
  EXPECT_EQ(g.anchors()[0], Vec2(0.02, 0.0));
  EXPECT_NEAR(g.step_timer(in.t), 0.0, 1e-12);
}

TEST(Gait, FillTasksUsesAnchorsAndSwing) {
  Gait g(PlannerConfig{}, 9.81);
  PlannerInput in = standing_input(0.0, -0.01, 0.01, 0.0);
  g.stand(in.foot_p);
  g.start_walking(1, 0.0, in, Command{0.42, 0.0});
  WbcConfig w;
  TaskSet ts;
  g.fill_tasks(0.1, Command{0.42, 0.0}, w, ts);
  EXPECT_EQ(ts.height.ref(0), 0.42);
  EXPECT_EQ(ts.pitch.ref(0), 0.0);
  EXPECT_EQ(ts.phase[0], ContactPhase::Stance);
  EXPECT_EQ(ts.phase[1], ContactPhase::Swing);
  EXPECT_EQ(ts.foot[0].ref, VecX(Vec2(-0.01, 0.0)));
  EXPECT_EQ(ts.foot[1].kp, w.swing.kp);
  EXPECT_GT(ts.foot[1].ref(1), 0.0);
}

// At rest over the stance foot with zero command the target stays near it.
TEST(Gait, PlacementAtRest) {
  Gait g(PlannerConfig{}, 9.81);
  PlannerInput in = standing_input(0.0, 0.0, 0.0, 0.0);
  g.stand(in.foot_p);
  g.start_walking(0, 0.0, in, Command{});
  EXPECT_NEAR(g.swing().target(), 0.0, 1e-12);
  in.com.xd = 0.2;
  EXPECT_GT(g.placement(in, Command{}, 0.1), 0.0);
}

TEST(PlannerConfig, JsonRoundTripAndValidation) {
  PlannerConfig c;
  c.step_duration = 0.3;
  c.k_p = 0.1;
  const PlannerConfig r = planner_config_from_json(planner_config_to_json(c));
  EXPECT_EQ(r.step_duration, 0.3);
  EXPECT_EQ(r.k_p, 0.1);
  try {
    planner_config_from_json({{"step_duration", -1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
  }
}

}  // namespace
}  // namespace mftwbc

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

#include "mftwbc/mft.hpp"
#include "test_util.hpp"

namespace mftwbc {
namespace {

using testing::random_reachable_foot;

const RobotModel kModel = RobotModel::reference();

LegConfig at(const Vec2& foot, int leg = 0, const RobotModel& m = kModel) {
  const auto r = try_leg_inverse_kinematics(m, leg, foot);
  EXPECT_TRUE(r.ok) << foot.transpose();
  return r.config;
}

TEST(PowerEfficiency, HandCases) {
  EXPECT_DOUBLE_EQ(power_efficiency(Vec2(1, 0), Vec2(2, 0)), 1.0);
  EXPECT_DOUBLE_EQ(power_efficiency(Vec2(1, 0), Vec2(0, 3)), 0.0);
  EXPECT_NEAR(power_efficiency(Vec2(1, 1), Vec2(1, 0)), std::sqrt(2.0) / 2.0, 1e-15);
  try {
    power_efficiency(Vec2::Zero(), Vec2(1, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
}

TEST(PlanarScrew, ReciprocalProductIsMomentAboutTheAxis) {
  const Vec2 axis(0.3, -0.2), point(-0.1, 0.4), f(0.6, -0.8);
  const double p = reciprocal_product(PlanarScrew::force_through(point, f), PlanarScrew::rotation_about(axis));
  EXPECT_NEAR(p, cross2(point - axis, f), 1e-15);
  EXPECT_THROW(reciprocal_product(PlanarScrew::rotation_about(axis), PlanarScrew::rotation_about(point)),
               std::invalid_argument);
}

TEST(LimbTransmission, RightAngleGivesFullInputTransmission) {
  const LimbParams& l = kModel.legs[0].rear;
  const double d = std::hypot(l.thigh_length, l.shank_length);
  const LegConfig c = at(Vec2(0.0, -d));
  for (Limb limb : {Limb::Rear, Limb::Fore}) {
    const LimbTransmission t = limb_transmission(kModel, 0, c, limb);
    EXPECT_NEAR(t.P_I, t.P_I_max, 1e-12);
  }
}

TEST(LimbTransmission, ShankThroughHipGivesZeroInput) {
  RobotModel m = kModel;
  for (auto& leg : m.legs) {
    leg.rear.hip_anchor = Vec2(-0.04, 0.0);
    leg.fore.hip_anchor = Vec2(0.04, 0.0);
  }
  const LimbParams& r = m.legs[0].rear;
  const Vec2 foot = r.hip_anchor + (r.thigh_length + r.shank_length) * link_dir(0.15);
  double fore = 0.0;
  ASSERT_TRUE(detail::limb_ik(m.legs[0].fore, foot, 1.0, fore));
  const LegConfig c = solve_passive_joints(m, 0, Vec2(0.15, fore));
  const LimbTransmission t = limb_transmission(m, 0, c, Limb::Rear);
  EXPECT_NEAR(t.P_I, 0.0, 1e-9);
  EXPECT_EQ(lti(m, 0, c).gamma_I, lti(m, 0, c).gamma_LTI);
  EXPECT_NEAR(lti(m, 0, c).gamma_LTI, 0.0, 1e-8);
}

TEST(LimbTransmission, MatchesVirtualWork) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const LegConfig c = at(random_reachable_foot(kModel, 0, rng));
    for (Limb limb : {Limb::Rear, Limb::Fore}) {
      const bool rear = limb == Limb::Rear;
      const LimbParams& l = kModel.legs[0].limb(limb);
      const Vec2 knee = rear ? c.rear_knee_point : c.fore_knee_point;
      const Vec2 other = rear ? c.fore_knee_point : c.rear_knee_point;
      const Vec2 u = (c.foot - knee).normalized();
      // Hip torque balancing a unit shank force: tau = dknee/dhip . u.
      const double hip_abs = rear ? c.hips(0) : c.hips(1);
      const double tau = (l.thigh_length * link_dir_deriv(hip_abs)).dot(u);
      // Foot velocity for a unit rotation about the locked limb's knee.
      const Vec2 r = c.foot - other;
      const Vec2 v(-r.y(), r.x());
      const LimbTransmission t = limb_transmission(kModel, 0, c, limb);
      EXPECT_LT(testing::rel_err(t.P_I, std::abs(tau)), 1e-8);
      EXPECT_LT(testing::rel_err(t.P_O, std::abs(u.dot(v))), 1e-8);
      EXPECT_LE(t.P_I, t.P_I_max);
      EXPECT_LE(t.P_O, t.P_O_max);
    }
  }
}

TEST(Lti, RangeIdentityAndMirrorSymmetry) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const LegConfig c = at(random_reachable_foot(kModel, 0, rng, 0.0));
    const LtiResult r = lti(kModel, 0, c);
    EXPECT_GE(r.gamma_LTI, 0.0);
    EXPECT_LE(r.gamma_LTI, 1.0);
    EXPECT_EQ(r.gamma_LTI, std::min(r.gamma_I, r.gamma_O));
    const LtiResult m = lti(kModel, 1, mirror(c));
    EXPECT_NEAR(m.gamma_LTI, r.gamma_LTI, 1e-12);
  }
}

TEST(Lti, VanishesTowardsTheStretchedSingularity) {
  const double reach = kModel.legs[0].rear.thigh_length + kModel.legs[0].rear.shank_length;
  std::vector<double> g;
  for (int i = 5; i >= 1; --i) g.push_back(lti(kModel, 0, at(Vec2(0.02, -(reach - 1e-3 * i)))).gamma_LTI);
  for (size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i], g[i - 1]);
  EXPECT_LT(g.back(), 0.1);
}

TEST(Lti, ReferenceModelBandCoversTheLowStandingHeights) {
  for (double h : {0.38, 0.40, 0.42}) EXPECT_GE(lti(kModel, 0, at(Vec2(0.0, -h))).gamma_LTI, 0.7) << h;
  for (double h : {0.44, 0.46}) EXPECT_LT(lti(kModel, 0, at(Vec2(0.0, -h))).gamma_LTI, 0.7) << h;
}

TEST(Indices, InvariantToBaseTranslation) {
  std::mt19937_64 rng(3);
  const auto s = testing::random_consistent_state(kModel, rng);
  VecQ q = s.q;
  q(0) += 1.3;
  q(1) -= 0.1;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const MftIndices a = mft_indices(kModel, leg, leg_config(kModel, s.q, leg));
    const MftIndices b = mft_indices(kModel, leg, leg_config(kModel, q, leg));
    EXPECT_EQ(a.gamma_LTI, b.gamma_LTI);
    EXPECT_EQ(a.gamma_RACI, b.gamma_RACI);
  }
}

// Hip torques for foot acceleration `a` from the leg's constrained equations
// of motion M qdd = S^T tau + Jh^T fh solved as one linear system.
Vec2 hip_torques_direct(const LegConfig& c, const Vec2& a) {
  const int leg = 0;
  const VecQ q = leg_coordinates(leg, c);
  const auto k = compute_kinematics(kModel, q, VecQ::Zero());
  const Mat4 M = mass_matrix(kModel, k).block<4, 4>(3, 3);
  const Eigen::Matrix<double, 2, 4> Jh = loop_constraints(k).J.block<2, 4>(0, 3);
  const Eigen::Matrix<double, 2, 4> Jf = k.limb_ends[0][0].J.block<2, 4>(0, 3);
  // Joint accelerations: closure Jh qdd = 0, foot Jf qdd = a.
  Mat4 K;
  K << Jh, Jf;
  Vec4 rhs;
  rhs << 0, 0, a;
  const Vec4 qdd = K.fullPivLu().solve(rhs);
  // Unknowns [tau_rear, tau_fore, fh]: M qdd = S^T tau + Jh^T fh.
  Mat4 B;
  B.setZero();
  B(0, 0) = 1.0;
  B(2, 1) = 1.0;
  B.rightCols<2>() = Jh.transpose();
  const Vec4 x = B.fullPivLu().solve(M * qdd);
  return x.head<2>();
}

TEST(Raci, MatchesDirectionBruteForce) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const LegConfig c = at(random_reachable_foot(kModel, 0, rng));
    double worst = 0.0;
    for (int k = 0; k < 3600; ++k) {
      const double th = 2.0 * kPi * k / 3600.0;
      const Vec2 tau = hip_torques_direct(c, 60.0 * Vec2(std::cos(th), std::sin(th)));
      worst = std::max(worst, tau.cwiseAbs().maxCoeff());
    }
    worst /= std::sqrt(kModel.leg_mass(0));
    EXPECT_LT(testing::rel_err(raci(kModel, 0, c, 60.0), worst) , 1e-3);
  }
}

TEST(Raci, ZeroDemandAndMonotone) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const LegConfig c = at(random_reachable_foot(kModel, 0, rng));
    EXPECT_EQ(raci(kModel, 0, c, 0.0), 0.0);
    EXPECT_GE(raci(kModel, 0, c, 120.0), raci(kModel, 0, c, 60.0));
    EXPECT_GT(raci(kModel, 0, c, 60.0), 0.0);
  }
}

TEST(Raci, SingularConfigurationIsUnbounded) {
  // Both limbs hanging straight: the knees coincide and the shanks overlap.
  LegConfig c;
  c.rear_knee_point = c.fore_knee_point = Vec2(0.0, -kModel.legs[0].rear.thigh_length);
  c.foot = Vec2(0.0, -(kModel.legs[0].rear.thigh_length + kModel.legs[0].rear.shank_length));
  EXPECT_TRUE(std::isinf(raci(kModel, 0, c, 60.0)));
  const MftIndices m = mft_indices(kModel, 0, c);
  EXPECT_EQ(m.gamma_LTI, 0.0);
  EXPECT_TRUE(m.singular);
}

}  // namespace
}  // namespace mftwbc

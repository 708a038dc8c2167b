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

#include <filesystem>

#include "mftwbc/model.hpp"
#include "test_util.hpp"

namespace mftwbc {
namespace {

using testing::random_consistent_state;
using testing::random_reachable_foot;
using testing::rel_err_vec;

const RobotModel kModel = RobotModel::reference();

// Endpoint of one limb chain evaluated directly from its joint angles.
Vec2 limb_end(const LimbParams& l, double hip, double knee) {
  return l.hip_anchor + l.thigh_length * link_dir(hip) + l.shank_length * link_dir(hip + knee);
}

double closure_residual(const RobotModel& m, int leg, const LegConfig& c) {
  const Vec2 r = limb_end(m.legs[leg].rear, c.hips(0), c.knees(0));
  const Vec2 f = limb_end(m.legs[leg].fore, c.hips(1), c.knees(1));
  return std::max((r - f).norm(), (r - c.foot).norm());
}

TEST(RobotModel, ReferenceMassBudget) {
  EXPECT_NEAR(kModel.total_mass(), 23.0, 1e-9);
  EXPECT_NEAR(kModel.leg_mass_ratio(), 0.4, 0.005);
  EXPECT_NO_THROW(kModel.validate());
}

TEST(RobotModel, RejectsNonPositiveLength) {
  RobotModel m = kModel;
  m.legs[1].fore.shank_length = 0.0;
  EXPECT_THROW(m.validate(), Error);
}

TEST(RobotModel, ConfigFileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "mftwbc_model_roundtrip.json";
  save_model(kModel, path.string());
  const RobotModel back = load_model(path.string());
  EXPECT_EQ(back.hash(), kModel.hash());
  auto j = model_to_json(kModel);
  j["schema_version"] = 99;
  try {
    model_from_json(j);
    FAIL() << "schema mismatch not detected";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
}

TEST(RobotModel, ShippedReferenceConfigMatchesBuiltIn) {
  const RobotModel m = load_model(std::string(MFTWBC_SOURCE_DIR) + "/config/reference_model.json");
  EXPECT_EQ(m.hash(), kModel.hash());
}

TEST(SolvePassiveJoints, SymmetricHipsGiveMirroredKnees) {
  const LegConfig c = solve_passive_joints(kModel, 0, Vec2(-1.1, 1.1));
  EXPECT_NEAR(c.knees(0), -c.knees(1), 1e-12);
  EXPECT_NEAR(c.foot.x(), 0.0, 1e-12);
  EXPECT_LT(closure_residual(kModel, 0, c), 1e-9);
}

TEST(SolvePassiveJoints, StretchedLimbIsCollinear) {
  // Separated hips so a single limb can be fully stretched.
  RobotModel m = kModel;
  for (auto& leg : m.legs) {
    leg.rear.hip_anchor = Vec2(-0.04, 0.0);
    leg.fore.hip_anchor = Vec2(0.04, 0.0);
  }
  const LimbParams& r = m.legs[0].rear;
  const double psi = 0.15;
  const Vec2 foot = r.hip_anchor + (r.thigh_length + r.shank_length) * link_dir(psi);
  double fore = 0.0;
  ASSERT_TRUE(detail::limb_ik(m.legs[0].fore, foot, 1.0, fore));
  const LegConfig c = solve_passive_joints(m, 0, Vec2(psi, fore));
  EXPECT_NEAR(c.knees(0), 0.0, 1e-9);
  EXPECT_LT(closure_residual(m, 0, c), 1e-9);
  EXPECT_LT((c.foot - foot).norm(), 1e-9);
}

TEST(SolvePassiveJoints, RandomHipsCloseTheLoop) {
  std::mt19937_64 rng(7);
  int checked = 0;
  while (checked < 100) {
    const Vec2 hips(testing::uniform(rng, -2.4, 0.3), testing::uniform(rng, -0.3, 2.4));
    LegConfig c;
    try {
      c = solve_passive_joints(kModel, 1, hips);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NoClosure);
      continue;
    }
    EXPECT_LT(closure_residual(kModel, 1, c), 1e-9);
    ++checked;
  }
}

TEST(SolvePassiveJoints, CoincidentKneesHaveNoClosure) {
  try {
    solve_passive_joints(kModel, 0, Vec2(0.2, 0.2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoClosure);
  }
}

TEST(LegInverseKinematics, FootBelowHipIsSymmetric) {
  const Vec2 hips = leg_inverse_kinematics(kModel, 0, Vec2(0.0, -0.42));
  EXPECT_NEAR(hips(0), -hips(1), 1e-12);
  EXPECT_LT(hips(0), 0.0);
}

TEST(LegInverseKinematics, RoundTripOnReachableSpace) {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = random_reachable_foot(kModel, 0, rng, 0.0);
    const Vec2 back = leg_forward_kinematics(kModel, 0, leg_inverse_kinematics(kModel, 0, p));
    worst = std::max(worst, (back - p).norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(LegInverseKinematics, JustOutsideReachIsRejected) {
  const double reach = kModel.legs[0].rear.thigh_length + kModel.legs[0].rear.shank_length;
  try {
    leg_inverse_kinematics(kModel, 0, Vec2(0.0, -(reach + 0.001)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfReach);
  }
  EXPECT_NO_THROW(leg_inverse_kinematics(kModel, 0, Vec2(0.0, -(reach - 0.001))));
}

TEST(LegInverseKinematics, MirrorSymmetry) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec2 p = random_reachable_foot(kModel, 0, rng);
    const LegConfig c = try_leg_inverse_kinematics(kModel, 0, p).config;
    const auto r = try_leg_inverse_kinematics(kModel, 0, Vec2(-p.x(), p.y()));
    ASSERT_TRUE(r.ok);
    const LegConfig m = mirror(c);
    EXPECT_LT((r.config.hips - m.hips).norm(), 1e-10);
    EXPECT_LT((r.config.knees - m.knees).norm(), 1e-10);
  }
}

TEST(ForwardKinematics, ZeroConfigurationHangsStraightDown) {
  const auto fk = forward_kinematics(kModel, VecQ::Zero());
  // Both limbs point straight down from the coaxial hip: depth L1 + L2 = 0.55 m.
  for (const Vec2& f : fk.feet) {
    EXPECT_NEAR(f.x(), 0.0, 1e-15);
    EXPECT_NEAR(f.y(), -0.55, 1e-15);
  }
}

TEST(ForwardKinematics, RigidTranslationAndRotation) {
  std::mt19937_64 rng(3);
  const GeneralizedState s = random_consistent_state(kModel, rng);
  const auto fk0 = forward_kinematics(kModel, s.q);
  VecQ q = s.q;
  q(0) += 0.1;
  const auto fk1 = forward_kinematics(kModel, q);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_NEAR(fk1.feet[leg].x() - fk0.feet[leg].x(), 0.1, 1e-14);
    EXPECT_NEAR(fk1.feet[leg].y(), fk0.feet[leg].y(), 1e-14);
  }
  q = s.q;
  q(2) += kPi;
  const auto fk2 = forward_kinematics(kModel, q);
  const Vec2 base(s.q(0), s.q(1));
  for (int leg = 0; leg < kNumLegs; ++leg) EXPECT_LT(((fk2.feet[leg] - base) + (fk0.feet[leg] - base)).norm(), 1e-12);
}

TEST(ForwardKinematics, MirroredStateMirrorsFeet) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    const GeneralizedState s = random_consistent_state(kModel, rng);
    const auto a = forward_kinematics(kModel, s.q);
    const auto b = forward_kinematics(kModel, mirror_coordinates(s.q));
    for (int leg = 0; leg < kNumLegs; ++leg) {
      EXPECT_NEAR(a.feet[leg].x(), -b.feet[leg].x(), 1e-12);
      EXPECT_NEAR(a.feet[leg].y(), b.feet[leg].y(), 1e-12);
    }
    EXPECT_LT(loop_constraints(kModel, mirror_coordinates(s.q), VecQ::Zero()).phi.norm(), 1e-9);
  }
}

TEST(TaskJacobians, BaseRowsSelectCoordinates) {
  std::mt19937_64 rng(1);
  const auto s = random_consistent_state(kModel, rng);
  const TaskJacobians t = task_jacobians(kModel, s.q, s.qd);
  EXPECT_EQ(t.base_height(1), 1.0);
  EXPECT_EQ(t.base_height.norm(), 1.0);
  EXPECT_EQ(t.base_pitch(2), 1.0);
  EXPECT_EQ(t.base_pitch.norm(), 1.0);
}

TEST(TaskJacobians, MatchFiniteDifferences) {
  std::mt19937_64 rng(17);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_consistent_state(kModel, rng);
    const TaskJacobians t = task_jacobians(kModel, s.q, s.qd);
    const TaskJacobians tp = task_jacobians(kModel, s.q + h * s.qd, s.qd);
    const TaskJacobians tm = task_jacobians(kModel, s.q - h * s.qd, s.qd);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vec2 rate = (tp.foot_position[leg] - tm.foot_position[leg]) / (2 * h);
      EXPECT_LT(rel_err_vec(Vec2(t.foot[leg] * s.qd), rate), 1e-6);
      // d/dt (J qd) at fixed qd
      const Vec2 jdot = (tp.foot[leg] * s.qd - tm.foot[leg] * s.qd) / (2 * h);
      EXPECT_LT(rel_err_vec(t.foot_drift[leg], jdot), 1e-4);
    }
    EXPECT_EQ((t.Jc.topRows<2>() - t.foot[0]).norm(), 0.0);
    EXPECT_EQ((t.Jc.bottomRows<2>() - t.foot[1]).norm(), 0.0);
  }
}

TEST(LoopConstraints, ConsistentStateClosesAndJacobianMatchesFd) {
  std::mt19937_64 rng(19);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_consistent_state(kModel, rng);
    const LoopConstraints lc = loop_constraints(kModel, s.q, s.qd);
    EXPECT_LT(lc.phi.norm(), 1e-6);
    Mat4Q fd;
    for (int j = 0; j < kNq; ++j) {
      VecQ dq = VecQ::Zero();
      dq(j) = h;
      fd.col(j) = (loop_constraints(kModel, s.q + dq, s.qd).phi - loop_constraints(kModel, s.q - dq, s.qd).phi) / (2 * h);
    }
    EXPECT_LT(rel_err_vec(lc.J, fd), 1e-6);
    // Legs are coupled only through the base.
    EXPECT_EQ((lc.J.block<2, 4>(0, 7).norm()), 0.0);
    EXPECT_EQ((lc.J.block<2, 4>(2, 3).norm()), 0.0);
    EXPECT_LT((lc.J.block<4, 2>(0, 0).norm()), 1e-15);
    // Consistent velocities stay on the constraint manifold.
    EXPECT_LT((lc.J * s.qd).norm(), 1e-9);
  }
}

TEST(LoopConstraints, NullSpaceVelocityDriftIsSecondOrder) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_consistent_state(kModel, rng);
    const VecQ q1 = s.q + 1e-5 * s.qd;
    EXPECT_LT(loop_constraints(kModel, q1, VecQ::Zero()).phi.norm(), 1e-8);
  }
}

}  // namespace
}  // namespace mftwbc

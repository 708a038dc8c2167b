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

#include "mftwbc/dynamics.hpp"
#include "test_util.hpp"

namespace mftwbc {
namespace {

using testing::random_consistent_state;
using testing::random_vector;
using testing::rel_err;
using testing::rel_err_vec;

const RobotModel kModel = RobotModel::reference();

// Kinetic energy from link frames walked outward from the base, with
// velocities propagated as v_child = v_parent + w x r.
double kinetic_energy_links(const VecQ& q, const VecQ& qd) {
  auto wx = [](double w, const Vec2& r) { return Vec2(-w * r.y(), w * r.x()); };
  const Vec2 base(q(0), q(1));
  const Vec2 vbase(qd(0), qd(1));
  double T = 0.5 * kModel.torso_mass * vbase.squaredNorm() + 0.5 * kModel.torso_inertia * qd(2) * qd(2);
  for (int leg = 0; leg < kNumLegs; ++leg)
    for (Limb limb : {Limb::Rear, Limb::Fore}) {
      const LimbParams& l = kModel.legs[leg].limb(limb);
      const Vec2 hip = base + rotation(q(2)) * l.hip_anchor;
      const Vec2 vhip = vbase + wx(qd(2), hip - base);
      const double a1 = q(2) + q(hip_index(leg, limb));
      const double w1 = qd(2) + qd(hip_index(leg, limb));
      const double a2 = a1 + q(knee_index(leg, limb));
      const double w2 = w1 + qd(knee_index(leg, limb));
      const Vec2 u1(std::sin(a1), -std::cos(a1));
      const Vec2 u2(std::sin(a2), -std::cos(a2));
      const Vec2 v1 = vhip + wx(w1, l.thigh_com * l.thigh_length * u1);
      const Vec2 vknee = vhip + wx(w1, l.thigh_length * u1);
      const Vec2 v2 = vknee + wx(w2, l.shank_com * l.shank_length * u2);
      T += 0.5 * l.thigh_mass * v1.squaredNorm() + 0.5 * l.thigh_inertia * w1 * w1;
      T += 0.5 * l.shank_mass * v2.squaredNorm() + 0.5 * l.shank_inertia * w2 * w2;
    }
  return T;
}

VecQ potential_gradient_fd(const VecQ& q) {
  const double h = 1e-6;
  VecQ g;
  for (int j = 0; j < kNq; ++j) {
    VecQ dq = VecQ::Zero();
    dq(j) = h;
    g(j) = (potential_energy(kModel, q + dq) - potential_energy(kModel, q - dq)) / (2 * h);
  }
  return g;
}

// Coriolis and centrifugal force from the Lagrangian: Mdot qd - 1/2 d(qd^T M qd)/dq.
VecQ velocity_force_fd(const VecQ& q, const VecQ& qd) {
  const double h = 1e-6;
  const MatQ Mdot = (mass_matrix(kModel, q + h * qd) - mass_matrix(kModel, q - h * qd)) / (2 * h);
  VecQ grad;
  for (int j = 0; j < kNq; ++j) {
    VecQ dq = VecQ::Zero();
    dq(j) = h;
    grad(j) = (qd.dot(mass_matrix(kModel, q + dq) * qd) - qd.dot(mass_matrix(kModel, q - dq) * qd)) / (2 * h);
  }
  return Mdot * qd - 0.5 * grad;
}

TEST(MassMatrix, SymmetricPositiveDefinite) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const MatQ M = mass_matrix(kModel, s.q);
    EXPECT_LT((M - M.transpose()).norm(), 1e-14);
    Eigen::SelfAdjointEigenSolver<MatQ> eig(M);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(MassMatrix, MatchesLinkKineticEnergy) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const VecQ qd = random_vector(rng, 2.0);  // any velocity, not only consistent ones
    EXPECT_LT(rel_err(kinetic_energy(kModel, s.q, qd), kinetic_energy_links(s.q, qd)), 1e-10);
  }
}

TEST(MassMatrix, InvariantToBaseTranslation) {
  std::mt19937_64 rng(3);
  const auto s = random_consistent_state(kModel, rng);
  VecQ q = s.q;
  q(0) += 0.7;
  q(1) -= 0.2;
  EXPECT_LT((mass_matrix(kModel, q) - mass_matrix(kModel, s.q)).norm(), 1e-13);
  EXPECT_NEAR(mass_matrix(kModel, s.q)(0, 0), kModel.total_mass(), 1e-12);
  EXPECT_NEAR(mass_matrix(kModel, s.q)(1, 1), kModel.total_mass(), 1e-12);
}

TEST(BiasForces, GravityIsPotentialGradient) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const VecQ H0 = bias_forces(kModel, s.q, VecQ::Zero());
    EXPECT_LT(rel_err_vec(H0, potential_gradient_fd(s.q)), 1e-7);
    EXPECT_NEAR(H0(1), kModel.total_mass() * kModel.gravity, 1e-9);
    EXPECT_NEAR(H0(0), 0.0, 1e-12);
  }
}

TEST(BiasForces, VelocityTermsMatchLagrangian) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const VecQ qd = random_vector(rng, 3.0);
    const VecQ c = bias_forces(kModel, s.q, qd) - bias_forces(kModel, s.q, VecQ::Zero());
    EXPECT_LT(rel_err_vec(c, velocity_force_fd(s.q, qd)), 1e-6);
    // quadratic in qd
    const VecQ c2 = bias_forces(kModel, s.q, 2.0 * qd) - bias_forces(kModel, s.q, VecQ::Zero());
    EXPECT_LT(rel_err_vec(c2, Eigen::Matrix<double, kNq, 1>(4.0 * c)), 1e-12);
  }
}

TEST(ConstraintProjection, ProjectorProperties) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const DynamicsTerms t = compute_terms(kModel, s.q, s.qd);
    EXPECT_LT((t.N * t.N - t.N).norm(), 1e-10);
    EXPECT_LT((t.Jh * t.N).norm(), 1e-10);
    EXPECT_LT((t.Lambda - t.Lambda.transpose()).norm(), 1e-8 * t.Lambda.norm());
    Eigen::SelfAdjointEigenSolver<Mat4> eig(t.Lambda);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    // M^-1 N^T is symmetric for the dynamically consistent inverse.
    const MatQ MinvNt = t.Mllt.solve(t.N.transpose());
    EXPECT_LT((MinvNt - MinvNt.transpose()).norm(), 1e-9);
    // Internal forces do not reach the floating base.
    EXPECT_LT((t.Sf * t.N.transpose() - t.Sf).norm(), 1e-10);
  }
}

TEST(ConstraintProjection, RankLossIsReported) {
  // Both limbs stretched along the same line: the two shanks are collinear.
  const VecQ q = VecQ::Zero();
  const auto k = compute_kinematics(kModel, q, VecQ::Zero());
  try {
    constraint_projection(mass_matrix(kModel, k).llt(), loop_constraints(k).J);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
}

TEST(InverseDynamics, RoundTripWithForwardDynamics) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const DynamicsTerms t = compute_terms(kModel, s.q, s.qd);
    Vec4 tau, fc;
    for (int j = 0; j < 4; ++j) tau(j) = testing::uniform(rng, -30, 30);
    for (int j = 0; j < 4; ++j) fc(j) = testing::uniform(rng, -100, 100);
    const auto fd = forward_dynamics_constrained(t, tau, fc);
    EXPECT_LT(rel_err_vec(inverse_dynamics_actuated(t, fd.qdd, fc), tau), 1e-8);
    EXPECT_LT(floating_base_residual(t, fd.qdd, fc).norm(), 1e-8 * (1.0 + fc.norm()));
    EXPECT_LT((t.Jh * fd.qdd + t.Jh_drift).norm(), 1e-8);
  }
}

TEST(ForwardDynamics, MatchesDenseKktSolve) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const DynamicsTerms t = compute_tree_terms(kModel, s.q, s.qd);
    Vec4 tau, fc;
    for (int j = 0; j < 4; ++j) tau(j) = testing::uniform(rng, -30, 30);
    for (int j = 0; j < 4; ++j) fc(j) = testing::uniform(rng, -100, 100);
    Eigen::Matrix<double, 15, 15> K = Eigen::Matrix<double, 15, 15>::Zero();
    K.topLeftCorner<11, 11>() = t.M;
    K.topRightCorner<11, 4>() = -t.Jh.transpose();
    K.bottomLeftCorner<4, 11>() = t.Jh;
    Eigen::Matrix<double, 15, 1> rhs;
    rhs.head<11>() = t.Sa.transpose() * tau + t.Jc.transpose() * fc - t.H;
    rhs.tail<4>() = -t.Jh_drift;
    const Eigen::Matrix<double, 15, 1> x = K.fullPivLu().solve(rhs);
    const auto fd = forward_dynamics_constrained(t, tau, fc);
    EXPECT_LT(rel_err_vec(fd.qdd, x.head<11>()), 1e-8);
    EXPECT_LT(rel_err_vec(fd.fh, x.tail<4>()), 1e-8);
  }
}

TEST(ForwardDynamics, PowerBalance) {
  // dE/dt = tau . qa_dot + fc . (Jc qd) on a consistent state; constraint forces do no work.
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const DynamicsTerms t = compute_terms(kModel, s.q, s.qd);
    Vec4 tau, fc;
    for (int j = 0; j < 4; ++j) tau(j) = testing::uniform(rng, -30, 30);
    for (int j = 0; j < 4; ++j) fc(j) = testing::uniform(rng, -100, 100);
    const VecQ qdd = forward_dynamics_constrained(t, tau, fc).qdd;
    const double h = 1e-6;
    auto energy = [&](double dt) {
      const VecQ q = s.q + dt * s.qd + 0.5 * dt * dt * qdd;
      const VecQ qd = s.qd + dt * qdd;
      return kinetic_energy(kModel, q, qd) + potential_energy(kModel, q);
    };
    const double rate = (energy(h) - energy(-h)) / (2 * h);
    const double power = tau.dot(t.Sa * s.qd) + fc.dot(t.Jc * s.qd);
    EXPECT_LT(rel_err(rate, power), 1e-6);
  }
}

TEST(ActuationMap, SplitMatchesDirectFormula) {
  std::mt19937_64 rng(10);
  const auto s = random_consistent_state(kModel, rng);
  const DynamicsTerms t = compute_terms(kModel, s.q, s.qd);
  const VecQ qdd = random_vector(rng, 5.0);
  Vec4 fc(3, 100, -2, 90);
  const Mat4 G = (t.Sa * t.N.transpose() * t.Sa.transpose()).inverse();
  const Vec4 direct = G * t.Sa *
                      (t.M * qdd + t.N.transpose() * t.H + t.Jh.transpose() * t.Lambda * t.Jh_drift -
                       t.N.transpose() * t.Jc.transpose() * fc);
  EXPECT_LT(rel_err_vec(inverse_dynamics_actuated(t, qdd, fc), direct), 1e-10);
}

TEST(FloatingBaseResidual, StaticDoubleStance) {
  const VecQ q = configuration_from_feet(kModel, Vec3(0.0, 0.40, 0.0), {Vec2(-0.05, -0.40), Vec2(0.05, -0.40)});
  const DynamicsTerms t = compute_terms(kModel, q, VecQ::Zero());
  // Contact forces holding the robot still: base rows of the projected dynamics.
  const Eigen::Matrix<double, 3, 4> A = t.Sf * t.N.transpose() * t.Jc.transpose();
  const Vec3 b = t.Sf * t.N.transpose() * t.H;
  const Vec4 fc = A.completeOrthogonalDecomposition().solve(b);
  EXPECT_LT(floating_base_residual(t, VecQ::Zero(), fc).norm(), 1e-8);
  EXPECT_NEAR(fc(1) + fc(3), 23.0 * kModel.gravity, 1e-6);
  const Vec4 tau = inverse_dynamics_actuated(t, VecQ::Zero(), fc);
  EXPECT_LT(tau.cwiseAbs().maxCoeff(), kModel.actuator.torque_max);
}

TEST(FloatingBaseResidual, FreeFallAndInternalForces) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const DynamicsTerms t = compute_terms(kModel, s.q, s.qd);
    const VecQ qdd = forward_dynamics_constrained(t, Vec4::Zero(), Vec4::Zero()).qdd;
    EXPECT_LT(floating_base_residual(t, qdd, Vec4::Zero()).norm(), 1e-8);
    Vec4 fh;
    for (int j = 0; j < 4; ++j) fh(j) = testing::uniform(rng, -50, 50);
    const VecQ shifted = qdd + t.Mllt.solve(t.Jh.transpose() * fh);
    EXPECT_LT((floating_base_residual(t, shifted, Vec4::Zero()) - floating_base_residual(t, qdd, Vec4::Zero())).norm(), 1e-8);
  }
}

TEST(InverseDynamics, NullCaseWithoutGravity) {
  RobotModel m = kModel;
  m.gravity = 1e-300;  // validate() requires a positive value
  std::mt19937_64 rng(12);
  const auto s = random_consistent_state(m, rng);
  const DynamicsTerms t = compute_terms(m, s.q, VecQ::Zero());
  EXPECT_LT(inverse_dynamics_actuated(t, VecQ::Zero(), Vec4::Zero()).norm(), 1e-12);
}

TEST(ProjectedDynamics, IdentityHoldsAtForwardSolution) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_consistent_state(kModel, rng);
    const DynamicsTerms t = compute_terms(kModel, s.q, s.qd);
    Vec4 tau, fc;
    for (int j = 0; j < 4; ++j) tau(j) = testing::uniform(rng, -30, 30);
    for (int j = 0; j < 4; ++j) fc(j) = testing::uniform(rng, -100, 100);
    const VecQ qdd = forward_dynamics_constrained(t, tau, fc).qdd;
    const VecQ lhs = t.M * qdd + t.N.transpose() * t.H + t.Jh.transpose() * (t.Lambda * t.Jh_drift) -
                     t.N.transpose() * t.Sa.transpose() * tau;
    const VecQ rhs = t.N.transpose() * t.Jc.transpose() * fc;
    EXPECT_LT((lhs - rhs).norm(), 1e-8 * (1.0 + rhs.norm()));
  }
}

}  // namespace
}  // namespace mftwbc

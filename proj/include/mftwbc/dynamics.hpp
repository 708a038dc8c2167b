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

// Constrained rigid-body dynamics on the cut tree:
//
//   [ M   -Jh^T ] [ qdd ]   [ Sa^T tau + Jc^T fc - H ]
//   [ Jh    0   ] [ fh  ] = [ -Jhdot qd              ]
//
// plus the projected form obtained by eliminating fh with
//   Lambda_h = (Jh M^-1 Jh^T)^-1,  Jh# = M^-1 Jh^T Lambda_h,  N_h = I - Jh# Jh.

#pragma once

#include "mftwbc/model.hpp"

namespace mftwbc {

// Composite inertia of the tree, accumulated link by link from the link
// Jacobians (the planar equivalent of the composite-rigid-body sum).
inline MatQ mass_matrix(const RobotModel& model, const RobotKinematics& k) {
  MatQ M = MatQ::Zero();
  M(0, 0) = model.torso_mass;
  M(1, 1) = model.torso_mass;
  M(2, 2) = model.torso_inertia;
  for (const auto& leg : k.links)
    for (const auto& limb : leg)
      for (const auto& link : limb) {
        M.noalias() += link.mass * link.com.J.transpose() * link.com.J;
        M.noalias() += link.inertia * link.Jw.transpose() * link.Jw;
      }
  return M;
}

inline MatQ mass_matrix(const RobotModel& model, const VecQ& q) {
  return mass_matrix(model, compute_kinematics(model, q, VecQ::Zero()));
}

// Coriolis, centrifugal and gravity terms: sum over links of J^T m (a_bias - g).
// Planar angular Jacobians are constant, so only linear terms carry drift.
inline VecQ bias_forces(const RobotModel& model, const RobotKinematics& k) {
  VecQ H = VecQ::Zero();
  H(1) = model.torso_mass * model.gravity;
  const Vec2 g(0.0, -model.gravity);
  for (const auto& leg : k.links)
    for (const auto& limb : leg)
      for (const auto& link : limb) H.noalias() += link.mass * link.com.J.transpose() * (link.com.drift - g);
  return H;
}

inline VecQ bias_forces(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  return bias_forces(model, compute_kinematics(model, q, qd));
}

inline double potential_energy(const RobotModel& model, const RobotKinematics& k, const VecQ& q) {
  double v = model.torso_mass * model.gravity * q(1);
  for (const auto& leg : k.links)
    for (const auto& limb : leg)
      for (const auto& link : limb) v += link.mass * model.gravity * link.com.p.y();
  return v;
}

inline double potential_energy(const RobotModel& model, const VecQ& q) {
  return potential_energy(model, compute_kinematics(model, q, VecQ::Zero()), q);
}

inline double kinetic_energy(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  return 0.5 * qd.dot(mass_matrix(model, q) * qd);
}

inline Eigen::Matrix<double, kNumActuated, kNq> actuated_selection() {
  Eigen::Matrix<double, kNumActuated, kNq> S = Eigen::Matrix<double, kNumActuated, kNq>::Zero();
  for (int i = 0; i < kNumActuated; ++i) S(i, kActuatedIndex[i]) = 1.0;
  return S;
}

inline Eigen::Matrix<double, kNumActuated, kNq> passive_selection() {
  Eigen::Matrix<double, kNumActuated, kNq> S = Eigen::Matrix<double, kNumActuated, kNq>::Zero();
  for (int i = 0; i < kNumActuated; ++i) S(i, kPassiveIndex[i]) = 1.0;
  return S;
}

inline Mat3Q floating_base_selection() {
  Mat3Q S = Mat3Q::Zero();
  S(0, 0) = S(1, 1) = S(2, 2) = 1.0;
  return S;
}

struct ConstraintProjection {
  Mat4 Lambda = Mat4::Zero();
  MatQ4 Jsharp = MatQ4::Zero();
  MatQ N = MatQ::Identity();
};

// Rejects states where the closure Jacobian has lost rank.
inline ConstraintProjection constraint_projection(const Eigen::LLT<MatQ>& Mllt, const Mat4Q& Jh) {
  ConstraintProjection p;
  const MatQ4 MinvJt = Mllt.solve(Jh.transpose());
  const Mat4 inv_lambda = Jh * MinvJt;
  Eigen::SelfAdjointEigenSolver<Mat4> eig(inv_lambda, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(hi, 1e-300))) throw Error(ErrorCode::RankDeficient, "closure Jacobian lost rank");
  p.Lambda = inv_lambda.ldlt().solve(Mat4::Identity());
  p.Lambda = 0.5 * (p.Lambda + p.Lambda.transpose()).eval();
  p.Jsharp = MinvJt * p.Lambda;
  p.N = MatQ::Identity() - p.Jsharp * Jh;
  return p;
}

inline ConstraintProjection constraint_projection(const RobotModel& model, const VecQ& q) {
  const auto k = compute_kinematics(model, q, VecQ::Zero());
  const MatQ M = mass_matrix(model, k);
  return constraint_projection(M.llt(), loop_constraints(k).J);
}

// Everything the controller and simulator need at one state.
struct DynamicsTerms {
  VecQ q = VecQ::Zero();
  VecQ qd = VecQ::Zero();
  MatQ M = MatQ::Zero();
  Eigen::LLT<MatQ> Mllt;
  VecQ H = VecQ::Zero();
  Vec4 phi = Vec4::Zero();
  Mat4Q Jh = Mat4Q::Zero();
  Vec4 Jh_drift = Vec4::Zero();
  Mat4Q Jc = Mat4Q::Zero();
  Vec4 Jc_drift = Vec4::Zero();
  Mat4 Lambda = Mat4::Zero();
  MatQ4 Jsharp = MatQ4::Zero();
  MatQ N = MatQ::Identity();
  Eigen::Matrix<double, kNumActuated, kNq> Sa = actuated_selection();
  Mat3Q Sf = floating_base_selection();
  RobotKinematics kin;
};

// Unprojected terms only (M, H, Jh, Jc); what the simulator needs.
inline DynamicsTerms compute_tree_terms(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  DynamicsTerms t;
  t.q = q;
  t.qd = qd;
  t.kin = compute_kinematics(model, q, qd);
  t.M = mass_matrix(model, t.kin);
  t.Mllt.compute(t.M);
  t.H = bias_forces(model, t.kin);
  const LoopConstraints lc = loop_constraints(t.kin);
  t.phi = lc.phi;
  t.Jh = lc.J;
  t.Jh_drift = lc.drift;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    t.Jc.middleRows<2>(2 * leg) = t.kin.feet[leg].J;
    t.Jc_drift.segment<2>(2 * leg) = t.kin.feet[leg].drift;
  }
  return t;
}

inline DynamicsTerms compute_terms(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  DynamicsTerms t = compute_tree_terms(model, q, qd);
  const ConstraintProjection p = constraint_projection(t.Mllt, t.Jh);
  t.Lambda = p.Lambda;
  t.Jsharp = p.Jsharp;
  t.N = p.N;
  return t;
}

// S_f (M qdd + N^T H) - S_f N^T Jc^T fc; zero when the floating-base rows hold.
inline Vec3 floating_base_residual(const DynamicsTerms& t, const VecQ& qdd, const Vec4& fc) {
  const VecQ lhs = t.M * qdd + t.N.transpose() * t.H;
  const VecQ rhs = t.N.transpose() * (t.Jc.transpose() * fc);
  return t.Sf * (lhs - rhs);
}

// tau = G Sa (M qdd + N^T H + Jh^T Lambda Jhdot qd - N^T Jc^T fc), G = (Sa N^T Sa^T)^-1,
// split as tau = Tq qdd + Tf fc + tau0 so the controller can use it as a
// linear constraint.
struct ActuationMap {
  Eigen::Matrix<double, kNumActuated, kNq> Tq = Eigen::Matrix<double, kNumActuated, kNq>::Zero();
  Mat4 Tf = Mat4::Zero();
  Vec4 tau0 = Vec4::Zero();
};

inline ActuationMap actuation_map(const DynamicsTerms& t) {
  const Mat4 SNS = t.Sa * t.N.transpose() * t.Sa.transpose();
  Eigen::JacobiSVD<Mat4> svd(SNS);
  const auto& sv = svd.singularValues();
  if (!(sv(3) > 0.0) || sv(0) / sv(3) > 1e12) throw Error(ErrorCode::ActuationSingular, "Sa N^T Sa^T is singular");
  const Mat4 G = SNS.fullPivLu().inverse();
  ActuationMap a;
  const Eigen::Matrix<double, kNumActuated, kNq> GS = G * t.Sa;
  a.Tq = GS * t.M;
  a.Tf = -GS * t.N.transpose() * t.Jc.transpose();
  a.tau0 = GS * (t.N.transpose() * t.H + t.Jh.transpose() * (t.Lambda * t.Jh_drift));
  return a;
}

inline Vec4 inverse_dynamics_actuated(const DynamicsTerms& t, const VecQ& qdd, const Vec4& fc) {
  const ActuationMap a = actuation_map(t);
  return a.Tq * qdd + a.Tf * fc + a.tau0;
}

struct ForwardDynamicsResult {
  VecQ qdd = VecQ::Zero();
  Vec4 fh = Vec4::Zero();
};

// Solves the block system with an optional generalized external force and an
// optional closure acceleration target (defaults to -Jhdot qd).
inline ForwardDynamicsResult forward_dynamics_constrained(const DynamicsTerms& t, const Vec4& tau, const Vec4& fc,
                                                          const VecQ& external = VecQ::Zero(),
                                                          const Vec4* closure_accel = nullptr) {
  const VecQ Q = t.Sa.transpose() * tau + t.Jc.transpose() * fc + external - t.H;
  const MatQ4 MinvJt = t.Mllt.solve(t.Jh.transpose());
  const Mat4 inv_lambda = t.Jh * MinvJt;
  const VecQ a0 = t.Mllt.solve(Q);
  const Vec4 target = closure_accel ? *closure_accel : Vec4(-t.Jh_drift);
  // Jh (a0 + MinvJt fh) = target
  Eigen::LDLT<Mat4> ldlt(inv_lambda);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().cwiseAbs().minCoeff() > 1e-14 * ldlt.vectorD().cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::RankDeficient, "closure Jacobian lost rank");
  ForwardDynamicsResult r;
  r.fh = ldlt.solve(target - t.Jh * a0);
  r.qdd = a0 + MinvJt * r.fh;
  return r;
}

}  // namespace mftwbc

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

// Motion/force transmissibility of a planar five-bar leg.
//
// In each limb the shank is a two-force member, so the transmission wrench is
// a pure force along the shank. The input twist is a unit rotation about the
// limb's hip; the output twist is the foot motion with the other limb's hip
// locked, i.e. a unit rotation about the other limb's knee.

#pragma once

#include <algorithm>
#include <stdexcept>

#include "mftwbc/dynamics.hpp"

namespace mftwbc {

enum class ScrewKind { Twist, Wrench };

// Planar screw (w; v). Twist: w is the angular rate, v the velocity of the
// point at the origin. Wrench: w is the moment about the origin, v the force.
struct PlanarScrew {
  double w = 0.0;
  Vec2 v = Vec2::Zero();
  ScrewKind kind = ScrewKind::Twist;

  static PlanarScrew rotation_about(const Vec2& point, double rate = 1.0) {
    return {rate, Vec2(rate * point.y(), -rate * point.x()), ScrewKind::Twist};
  }
  static PlanarScrew force_through(const Vec2& point, const Vec2& force) {
    return {cross2(point, force), force, ScrewKind::Wrench};
  }
};

inline double reciprocal_product(const PlanarScrew& a, const PlanarScrew& b) {
  if (a.kind == b.kind) throw std::invalid_argument("reciprocal product needs one twist and one wrench");
  return a.w * b.w + a.v.dot(b.v);
}

inline double power_efficiency(const Vec2& f, const Vec2& v) {
  const double nf = f.norm(), nv = v.norm();
  if (!(nf > 0.0) || !(nv > 0.0)) throw Error(ErrorCode::ZeroVector, "power efficiency of a zero vector");
  return std::min(1.0, std::abs(f.dot(v)) / (nf * nv));
}

struct LimbTransmission {
  PlanarScrew transmission{0.0, Vec2::Zero(), ScrewKind::Wrench};
  PlanarScrew input;
  PlanarScrew output;
  double P_I = 0.0;
  double P_O = 0.0;
  double P_I_max = 0.0;
  double P_O_max = 0.0;
};

// Leg configuration in the base frame; `c` must be closed.
inline LimbTransmission limb_transmission(const RobotModel& model, int leg, const LegConfig& c, Limb limb) {
  const LegParams& p = model.legs[leg];
  const bool rear = limb == Limb::Rear;
  const Vec2 hip = p.limb(limb).hip_anchor;
  const Vec2 knee = rear ? c.rear_knee_point : c.fore_knee_point;
  const Vec2 other_knee = rear ? c.fore_knee_point : c.rear_knee_point;
  const Vec2 shank = c.foot - knee;
  const double len = shank.norm();
  if (!(len > 1e-12) || !((knee - hip).norm() > 1e-12)) throw Error(ErrorCode::SingularLimb, "coincident limb joints");
  LimbTransmission t;
  t.transmission = PlanarScrew::force_through(knee, shank / len);
  t.input = PlanarScrew::rotation_about(hip);
  t.output = PlanarScrew::rotation_about(other_knee);
  t.P_I = std::abs(reciprocal_product(t.transmission, t.input));
  t.P_O = std::abs(reciprocal_product(t.transmission, t.output));
  // A unit force through a fixed point does the most work on a rotation when
  // it is perpendicular to the radius, so the maxima are the radii.
  t.P_I_max = (knee - hip).norm();
  t.P_O_max = (c.foot - other_knee).norm();
  if (!(t.P_O_max > 1e-12)) throw Error(ErrorCode::SingularLimb, "foot on the other knee");
  t.P_I = std::min(t.P_I, t.P_I_max);
  t.P_O = std::min(t.P_O, t.P_O_max);
  return t;
}

struct LtiResult {
  double gamma_I = 0.0;
  double gamma_O = 0.0;
  double gamma_LTI = 0.0;
  bool singular = false;
};

inline LtiResult lti(const RobotModel& model, int leg, const LegConfig& c) {
  LtiResult r;
  try {
    r.gamma_I = r.gamma_O = 1.0;
    for (Limb limb : {Limb::Rear, Limb::Fore}) {
      const LimbTransmission t = limb_transmission(model, leg, c, limb);
      r.gamma_I = std::min(r.gamma_I, t.P_I / t.P_I_max);
      r.gamma_O = std::min(r.gamma_O, t.P_O / t.P_O_max);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularLimb) throw;
    return LtiResult{0.0, 0.0, 0.0, true};
  }
  r.gamma_LTI = std::min(r.gamma_I, r.gamma_O);
  // No transmission through one of the limbs: the loop is singular.
  if (r.gamma_LTI <= 1e-12) {
    if (r.gamma_I <= 1e-12) r.gamma_I = 0.0;
    if (r.gamma_O <= 1e-12) r.gamma_O = 0.0;
    r.gamma_LTI = 0.0;
    r.singular = true;
  }
  return r;
}

// Leg-only quantities at zero velocity with the base fixed: the inertia
// reduced onto the two hip angles and the hip-to-foot Jacobian.
struct LegReducedDynamics {
  Mat2 inertia = Mat2::Zero();
  Mat2 jacobian = Mat2::Zero();
  Eigen::Matrix<double, 4, 2> closure_map = Eigen::Matrix<double, 4, 2>::Zero();  // hip rates -> leg joint rates
  bool singular = false;
};

inline VecQ leg_coordinates(int leg, const LegConfig& c) {
  VecQ q = VecQ::Zero();
  q(hip_index(leg, Limb::Rear)) = c.hips(0);
  q(knee_index(leg, Limb::Rear)) = c.knees(0);
  q(hip_index(leg, Limb::Fore)) = c.hips(1);
  q(knee_index(leg, Limb::Fore)) = c.knees(1);
  return q;
}

inline LegReducedDynamics leg_reduced_dynamics(const RobotModel& model, int leg, const LegConfig& c) {
  LegReducedDynamics r;
  const VecQ q = leg_coordinates(leg, c);
  const auto k = compute_kinematics(model, q, VecQ::Zero());
  const int off = 3 + 4 * leg;
  const Mat4 M = mass_matrix(model, k).block<4, 4>(off, off);
  const Eigen::Matrix<double, 2, 4> Jh = loop_constraints(k).J.block<2, 4>(2 * leg, off);
  Mat2 A, P;
  A << Jh.col(0), Jh.col(2);
  P << Jh.col(1), Jh.col(3);
  const double scale = Jh.norm();
  if (!(std::abs(P.determinant()) > 1e-10 * scale * scale)) {
    r.singular = true;
    return r;
  }
  const Mat2 knee_rates = -P.partialPivLu().solve(A);
  r.closure_map.row(0) = Eigen::RowVector2d(1.0, 0.0);
  r.closure_map.row(1) = knee_rates.row(0);
  r.closure_map.row(2) = Eigen::RowVector2d(0.0, 1.0);
  r.closure_map.row(3) = knee_rates.row(1);
  r.inertia = r.closure_map.transpose() * M * r.closure_map;
  r.jacobian = k.limb_ends[leg][0].J.block<2, 4>(0, off) * r.closure_map;
  const double js = r.jacobian.norm();
  if (!(std::abs(r.jacobian.determinant()) > 1e-10 * js * js)) r.singular = true;
  return r;
}

// Worst-case hip torque over all foot-acceleration directions of magnitude
// a_max, normalized by sqrt(leg mass). tau = M_red J^-1 a, so the worst
// direction for hip j is along row j and the maximum is the row norm.
inline double raci(const RobotModel& model, int leg, const LegConfig& c, double a_max) {
  if (a_max == 0.0) return 0.0;
  const LegReducedDynamics r = leg_reduced_dynamics(model, leg, c);
  if (r.singular) return kInf;
  const Mat2 T = r.inertia * r.jacobian.inverse();
  return a_max * T.rowwise().norm().maxCoeff() / std::sqrt(model.leg_mass(leg));
}

// Largest index value for which the worst-case demand stays inside the
// actuator torque limit.
inline double raci_torque_bound(const RobotModel& model, int leg) {
  return model.actuator.torque_max / std::sqrt(model.leg_mass(leg));
}

inline constexpr double kDefaultFootAcceleration = 60.0;  // m/s^2

struct MftIndices {
  double gamma_I = 0.0;
  double gamma_O = 0.0;
  double gamma_LTI = 0.0;
  double gamma_RACI = kInf;
  bool singular = false;
};

inline MftIndices mft_indices(const RobotModel& model, int leg, const LegConfig& c,
                              double a_max = kDefaultFootAcceleration) {
  const LtiResult l = lti(model, leg, c);
  MftIndices m;
  m.gamma_I = l.gamma_I;
  m.gamma_O = l.gamma_O;
  m.gamma_LTI = l.gamma_LTI;
  m.singular = l.singular;
  m.gamma_RACI = l.singular ? kInf : raci(model, leg, c, a_max);
  return m;
}

}  // namespace mftwbc

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

// Planar floating-base biped with two five-bar legs.
//
// Each leg has a rear and a fore limb. A limb is a thigh driven by a hip
// actuator and a shank attached through a passive knee. The two shank
// endpoints meet at the foot; that meeting point is the loop closure.
// Dynamics are written on the tree obtained by cutting each loop at the foot.

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mftwbc/common.hpp"

namespace mftwbc {

struct LimbParams {
  double thigh_length = 0.165;
  double shank_length = 0.385;
  double thigh_mass = 0.6;
  double shank_mass = 1.0425;
  double thigh_inertia = 0.6 * 0.165 * 0.165 / 12.0;
  double shank_inertia = 1.0425 * 0.385 * 0.385 / 12.0;
  double thigh_com = 0.5;  // fraction of the link length from the proximal joint
  double shank_com = 0.5;
  Vec2 hip_anchor = Vec2::Zero();  // base frame
};

struct LegParams {
  LimbParams rear;
  LimbParams fore;
  const LimbParams& limb(Limb l) const { return l == Limb::Rear ? rear : fore; }
  double mass() const { return rear.thigh_mass + rear.shank_mass + fore.thigh_mass + fore.shank_mass; }
};

struct ActuatorSpec {
  double torque_max = 40.0;  // N m
  double rated_speed = 20.0;  // rad/s
};

struct JointLimits {
  Vec2 rear_hip{-2.4, 0.3};
  Vec2 rear_knee{0.02, 3.12};
  Vec2 fore_hip{-0.3, 2.4};
  Vec2 fore_knee{-3.12, -0.02};
  const Vec2& hip(Limb l) const { return l == Limb::Rear ? rear_hip : fore_hip; }
  const Vec2& knee(Limb l) const { return l == Limb::Rear ? rear_knee : fore_knee; }
};

// Assembly of a five-bar leg. KneesOutward puts the rear knee behind and the
// fore knee ahead of the hip-foot line, with the foot below the knee line.
enum class Branch { KneesOutward, KneesInward };

struct RobotModel {
  std::string name = "reference-biped";
  double gravity = 9.81;
  double torso_mass = 16.43;
  double torso_inertia = 0.2;
  bool boom_plane = true;
  std::array<LegParams, kNumLegs> legs{};
  ActuatorSpec actuator{};
  JointLimits limits{};
  Branch branch = Branch::KneesOutward;

  double leg_mass(int leg) const { return legs[leg].mass(); }
  double total_mass() const { return torso_mass + leg_mass(0) + leg_mass(1); }
  double leg_mass_ratio() const { return (leg_mass(0) + leg_mass(1)) / torso_mass; }

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::BadConfig, std::string(what) + " must be positive");
    };
    positive(gravity, "gravity");
    positive(torso_mass, "torso mass");
    positive(torso_inertia, "torso inertia");
    positive(actuator.torque_max, "torque_max");
    positive(actuator.rated_speed, "rated_speed");
    for (const auto& leg : legs) {
      for (const LimbParams* l : {&leg.rear, &leg.fore}) {
        positive(l->thigh_length, "thigh length");
        positive(l->shank_length, "shank length");
        positive(l->thigh_mass, "thigh mass");
        positive(l->shank_mass, "shank mass");
        positive(l->thigh_inertia, "thigh inertia");
        positive(l->shank_inertia, "shank inertia");
      }
    }
    for (const Vec2* r : {&limits.rear_hip, &limits.rear_knee, &limits.fore_hip, &limits.fore_knee}) {
      if (!((*r)(0) < (*r)(1))) throw Error(ErrorCode::BadConfig, "joint limit min must be below max");
    }
  }

  std::uint64_t hash() const;

  static RobotModel reference() { return RobotModel{}; }
};

// --- configuration file --------------------------------------------------

inline constexpr int kModelSchemaVersion = 1;

namespace detail {

inline nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json::array({v(0), v(1)}); }

inline Vec2 json_vec2(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::BadConfig, "expected a 2-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline nlohmann::json limb_json(const LimbParams& l) {
  return {{"thigh_length", l.thigh_length}, {"shank_length", l.shank_length},
          {"thigh_mass", l.thigh_mass},     {"shank_mass", l.shank_mass},
          {"thigh_inertia", l.thigh_inertia}, {"shank_inertia", l.shank_inertia},
          {"thigh_com", l.thigh_com},       {"shank_com", l.shank_com},
          {"hip_anchor", vec2_json(l.hip_anchor)}};
}

inline LimbParams json_limb(const nlohmann::json& j) {
  LimbParams l;
  l.thigh_length = j.at("thigh_length").get<double>();
  l.shank_length = j.at("shank_length").get<double>();
  l.thigh_mass = j.at("thigh_mass").get<double>();
  l.shank_mass = j.at("shank_mass").get<double>();
  l.thigh_inertia = j.at("thigh_inertia").get<double>();
  l.shank_inertia = j.at("shank_inertia").get<double>();
  l.thigh_com = j.value("thigh_com", 0.5);
  l.shank_com = j.value("shank_com", 0.5);
  l.hip_anchor = j.contains("hip_anchor") ? json_vec2(j.at("hip_anchor")) : Vec2::Zero();
  return l;
}

}  // namespace detail

inline nlohmann::json model_to_json(const RobotModel& m) {
  nlohmann::json legs = nlohmann::json::array();
  for (const auto& leg : m.legs) legs.push_back({{"rear", detail::limb_json(leg.rear)}, {"fore", detail::limb_json(leg.fore)}});
  return {{"schema_version", kModelSchemaVersion},
          {"name", m.name},
          {"gravity", m.gravity},
          {"torso", {{"mass", m.torso_mass}, {"inertia", m.torso_inertia}, {"boom_plane", m.boom_plane}}},
          {"legs", legs},
          {"actuator", {{"torque_max", m.actuator.torque_max}, {"rated_speed", m.actuator.rated_speed}}},
          {"joint_limits",
           {{"rear_hip", detail::vec2_json(m.limits.rear_hip)},
            {"rear_knee", detail::vec2_json(m.limits.rear_knee)},
            {"fore_hip", detail::vec2_json(m.limits.fore_hip)},
            {"fore_knee", detail::vec2_json(m.limits.fore_knee)}}},
          {"branch", m.branch == Branch::KneesOutward ? "knees_outward" : "knees_inward"}};
}

inline RobotModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion)
      throw Error(ErrorCode::SchemaMismatch, "unsupported model schema_version");
    RobotModel m;
    m.name = j.value("name", m.name);
    m.gravity = j.at("gravity").get<double>();
    const auto& torso = j.at("torso");
    m.torso_mass = torso.at("mass").get<double>();
    m.torso_inertia = torso.at("inertia").get<double>();
    m.boom_plane = torso.value("boom_plane", true);
    const auto& legs = j.at("legs");
    if (!legs.is_array() || legs.size() != kNumLegs) throw Error(ErrorCode::BadConfig, "model needs exactly two legs");
    for (int i = 0; i < kNumLegs; ++i) {
      m.legs[i].rear = detail::json_limb(legs.at(i).at("rear"));
      m.legs[i].fore = detail::json_limb(legs.at(i).at("fore"));
    }
    m.actuator.torque_max = j.at("actuator").at("torque_max").get<double>();
    m.actuator.rated_speed = j.at("actuator").at("rated_speed").get<double>();
    const auto& lim = j.at("joint_limits");
    m.limits.rear_hip = detail::json_vec2(lim.at("rear_hip"));
    m.limits.rear_knee = detail::json_vec2(lim.at("rear_knee"));
    m.limits.fore_hip = detail::json_vec2(lim.at("fore_hip"));
    m.limits.fore_knee = detail::json_vec2(lim.at("fore_knee"));
    const std::string branch = j.value("branch", "knees_outward");
    if (branch == "knees_outward") m.branch = Branch::KneesOutward;
    else if (branch == "knees_inward") m.branch = Branch::KneesInward;
    else throw Error(ErrorCode::BadConfig, "unknown branch '" + branch + "'");
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("model config: ") + e.what());
  }
}

inline std::uint64_t RobotModel::hash() const {
  // Canonical text with fixed precision so the fingerprint is stable.
  std::string canon;
  char buf[64];
  auto add = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    canon += buf;
  };
  add(gravity);
  add(torso_mass);
  add(torso_inertia);
  for (const auto& leg : legs) {
    for (const LimbParams* l : {&leg.rear, &leg.fore}) {
      add(l->thigh_length); add(l->shank_length); add(l->thigh_mass); add(l->shank_mass);
      add(l->thigh_inertia); add(l->shank_inertia); add(l->thigh_com); add(l->shank_com);
      add(l->hip_anchor(0)); add(l->hip_anchor(1));
    }
  }
  add(actuator.torque_max);
  add(actuator.rated_speed);
  for (const Vec2* r : {&limits.rear_hip, &limits.rear_knee, &limits.fore_hip, &limits.fore_knee}) {
    add((*r)(0));
    add((*r)(1));
  }
  canon += branch == Branch::KneesOutward ? "out" : "in";
  return fnv1a(canon);
}

inline RobotModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, "model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const RobotModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write model file " + path);
  out << model_to_json(m).dump(2) << "\n";
}

// --- state ------------------------------------------------------------------

enum class ContactPhase { Swing, Stance };

struct GeneralizedState {
  VecQ q = VecQ::Zero();
  VecQ qd = VecQ::Zero();
  std::array<ContactPhase, kNumLegs> contact{ContactPhase::Stance, ContactPhase::Stance};
  double t = 0.0;
};

inline constexpr double kClosureTolerance = 1e-6;

// --- single-leg kinematics (base frame) ---------------------------------------

struct LegConfig {
  Vec2 hips = Vec2::Zero();   // [rear, fore] hip angles relative to the base
  Vec2 knees = Vec2::Zero();  // [rear, fore] knee angles relative to the thigh
  Vec2 rear_knee_point = Vec2::Zero();
  Vec2 fore_knee_point = Vec2::Zero();
  Vec2 foot = Vec2::Zero();
};

inline Vec2 knee_point(const LimbParams& l, double hip) { return l.hip_anchor + l.thigh_length * link_dir(hip); }

inline double branch_sign(Branch b) { return b == Branch::KneesOutward ? -1.0 : 1.0; }

// Closes the leg loop for given hip angles. The foot is the intersection of the
// two shank circles on the side selected by `branch`.
inline LegConfig solve_passive_joints(const RobotModel& model, int leg, const Vec2& hips, Branch branch) {
  const LegParams& p = model.legs[leg];
  LegConfig c;
  c.hips = hips;
  c.rear_knee_point = knee_point(p.rear, hips(0));
  c.fore_knee_point = knee_point(p.fore, hips(1));
  const Vec2 base = c.fore_knee_point - c.rear_knee_point;
  const double d = base.norm();
  const double r0 = p.rear.shank_length;
  const double r1 = p.fore.shank_length;
  if (d > r0 + r1 || d < std::abs(r0 - r1) || d <= 0.0) throw Error(ErrorCode::NoClosure, "shank circles do not intersect");
  const double a = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
  const double h = std::sqrt(std::max(0.0, r0 * r0 - a * a));
  const Vec2 e = base / d;
  const Vec2 n(-e.y(), e.x());  // cross(e, n) = +1
  // cross(base, foot - rear_knee) = d * h * s, pick s to match the branch sign.
  const double s = branch_sign(branch);
  c.foot = c.rear_knee_point + a * e + s * h * n;
  const Vec2 rs = c.foot - c.rear_knee_point;
  const Vec2 fs = c.foot - c.fore_knee_point;
  const double rear_abs = std::atan2(rs.x(), -rs.y());
  const double fore_abs = std::atan2(fs.x(), -fs.y());
  c.knees = Vec2(wrap_angle(rear_abs - hips(0)), wrap_angle(fore_abs - hips(1)));
  return c;
}

inline LegConfig solve_passive_joints(const RobotModel& model, int leg, const Vec2& hips) {
  return solve_passive_joints(model, leg, hips, model.branch);
}

inline bool within(const Vec2& range, double v) { return v >= range(0) && v <= range(1); }

inline bool within_limits(const RobotModel& model, const LegConfig& c) {
  return within(model.limits.rear_hip, c.hips(0)) && within(model.limits.fore_hip, c.hips(1)) &&
         within(model.limits.rear_knee, c.knees(0)) && within(model.limits.fore_knee, c.knees(1));
}

namespace detail {

// Thigh angle placing the knee on the requested side of the hip-foot line.
// Returns false when the foot is out of the limb's annulus.
inline bool limb_ik(const LimbParams& l, const Vec2& foot, double side, double& hip) {
  const Vec2 r = foot - l.hip_anchor;
  const double dist = r.norm();
  const double l1 = l.thigh_length;
  const double l2 = l.shank_length;
  if (dist <= 0.0) return false;
  const double c = (l1 * l1 + dist * dist - l2 * l2) / (2.0 * l1 * dist);
  if (c > 1.0 || c < -1.0) return false;
  const double psi = std::atan2(r.x(), -r.y());
  hip = wrap_angle(psi + side * std::acos(c));
  return true;
}

}  // namespace detail

struct LegIkResult {
  bool ok = false;
  LegConfig config;
};

// Non-throwing IK on the working branch. A point counts as reachable when the
// limb triangles close, the joint limits hold, and forward kinematics on the
// same branch reproduces the point (which excludes the far assembly mode).
inline LegIkResult try_leg_inverse_kinematics(const RobotModel& model, int leg, const Vec2& foot) {
  LegIkResult res;
  const LegParams& p = model.legs[leg];
  const double out = model.branch == Branch::KneesOutward ? 1.0 : -1.0;
  double rear = 0.0, fore = 0.0;
  if (!detail::limb_ik(p.rear, foot, -out, rear) || !detail::limb_ik(p.fore, foot, out, fore)) return res;
  const Vec2 rk = knee_point(p.rear, rear);
  const Vec2 fk = knee_point(p.fore, fore);
  const Vec2 base = fk - rk;
  // Strictly on the working assembly side, away from the closure singularity.
  if (branch_sign(model.branch) * cross2(base, foot - rk) <= 1e-12) return res;
  LegConfig c;
  c.hips = Vec2(rear, fore);
  c.rear_knee_point = rk;
  c.fore_knee_point = fk;
  c.foot = foot;
  const Vec2 rs = foot - rk;
  const Vec2 fs = foot - fk;
  c.knees = Vec2(wrap_angle(std::atan2(rs.x(), -rs.y()) - rear), wrap_angle(std::atan2(fs.x(), -fs.y()) - fore));
  if (!within_limits(model, c)) return res;
  res.ok = true;
  res.config = c;
  return res;
}

inline Vec2 leg_inverse_kinematics(const RobotModel& model, int leg, const Vec2& foot) {
  const auto r = try_leg_inverse_kinematics(model, leg, foot);
  if (!r.ok) throw Error(ErrorCode::OutOfReach, "foot position outside the leg's reachable space");
  return r.config.hips;
}

inline Vec2 leg_forward_kinematics(const RobotModel& model, int leg, const Vec2& hips) {
  return solve_passive_joints(model, leg, hips).foot;
}

// Leg-plane mirror x -> -x: rear and fore limbs swap, angles change sign.
inline LegConfig mirror(const LegConfig& c) {
  LegConfig m;
  m.hips = Vec2(-c.hips(1), -c.hips(0));
  m.knees = Vec2(-c.knees(1), -c.knees(0));
  m.rear_knee_point = Vec2(-c.fore_knee_point.x(), c.fore_knee_point.y());
  m.fore_knee_point = Vec2(-c.rear_knee_point.x(), c.rear_knee_point.y());
  m.foot = Vec2(-c.foot.x(), c.foot.y());
  return m;
}

// --- whole-robot kinematics ------------------------------------------------

// Position, Jacobian and drift (Jdot*qdot) of a point on the cut tree.
struct PointKinematics {
  Vec2 p = Vec2::Zero();
  Mat2Q J = Mat2Q::Zero();
  Vec2 drift = Vec2::Zero();
};

struct LinkKinematics {
  PointKinematics com;
  double angle = 0.0;
  double omega = 0.0;
  Eigen::Matrix<double, 1, kNq> Jw = Eigen::Matrix<double, 1, kNq>::Zero();
  double mass = 0.0;
  double inertia = 0.0;
};

struct RobotKinematics {
  // links[leg][limb][0 thigh | 1 shank]
  std::array<std::array<std::array<LinkKinematics, 2>, 2>, kNumLegs> links{};
  std::array<std::array<PointKinematics, 2>, kNumLegs> limb_ends{};  // [leg][limb]
  std::array<PointKinematics, kNumLegs> feet{};
};

namespace detail {

inline void add_anchor(PointKinematics& pk, const VecQ& q, const VecQ& qd, const Vec2& offset) {
  const double th = q(2);
  const double c = std::cos(th), s = std::sin(th);
  pk.p += Vec2(q(0), q(1)) + Vec2(c * offset.x() - s * offset.y(), s * offset.x() + c * offset.y());
  pk.J(0, 0) += 1.0;
  pk.J(1, 1) += 1.0;
  const Vec2 dr(-s * offset.x() - c * offset.y(), c * offset.x() - s * offset.y());
  pk.J.col(2) += dr;
  pk.drift += -Vec2(c * offset.x() - s * offset.y(), s * offset.x() + c * offset.y()) * qd(2) * qd(2);
}

// Adds len * link_dir(alpha) where alpha = q2 + sum of q over `coords`.
inline void add_segment(PointKinematics& pk, double len, double alpha, double alpha_dot, std::initializer_list<int> coords) {
  const Vec2 d = link_dir(alpha);
  const Vec2 dd = link_dir_deriv(alpha);
  pk.p += len * d;
  pk.J.col(2) += len * dd;
  for (int k : coords) pk.J.col(k) += len * dd;
  pk.drift -= len * d * alpha_dot * alpha_dot;
}

}  // namespace detail

inline RobotKinematics compute_kinematics(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  RobotKinematics k;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (Limb limb : {Limb::Rear, Limb::Fore}) {
      const LimbParams& lp = model.legs[leg].limb(limb);
      const int ih = hip_index(leg, limb);
      const int ik = knee_index(leg, limb);
      const double a1 = q(2) + q(ih);
      const double a1d = qd(2) + qd(ih);
      const double a2 = a1 + q(ik);
      const double a2d = a1d + qd(ik);
      const int li = static_cast<int>(limb);

      LinkKinematics& thigh = k.links[leg][li][0];
      detail::add_anchor(thigh.com, q, qd, lp.hip_anchor);
      detail::add_segment(thigh.com, lp.thigh_com * lp.thigh_length, a1, a1d, {ih});
      thigh.angle = a1;
      thigh.omega = a1d;
      thigh.Jw(2) = 1.0;
      thigh.Jw(ih) = 1.0;
      thigh.mass = lp.thigh_mass;
      thigh.inertia = lp.thigh_inertia;

      LinkKinematics& shank = k.links[leg][li][1];
      detail::add_anchor(shank.com, q, qd, lp.hip_anchor);
      detail::add_segment(shank.com, lp.thigh_length, a1, a1d, {ih});
      detail::add_segment(shank.com, lp.shank_com * lp.shank_length, a2, a2d, {ih, ik});
      shank.angle = a2;
      shank.omega = a2d;
      shank.Jw(2) = 1.0;
      shank.Jw(ih) = 1.0;
      shank.Jw(ik) = 1.0;
      shank.mass = lp.shank_mass;
      shank.inertia = lp.shank_inertia;

      PointKinematics& end = k.limb_ends[leg][li];
      detail::add_anchor(end, q, qd, lp.hip_anchor);
      detail::add_segment(end, lp.thigh_length, a1, a1d, {ih});
      detail::add_segment(end, lp.shank_length, a2, a2d, {ih, ik});
    }
    // The contact point is the mean of the two limb endpoints; equal to either
    // endpoint on a closed loop.
    PointKinematics& foot = k.feet[leg];
    const auto& r = k.limb_ends[leg][0];
    const auto& f = k.limb_ends[leg][1];
    foot.p = 0.5 * (r.p + f.p);
    foot.J = 0.5 * (r.J + f.J);
    foot.drift = 0.5 * (r.drift + f.drift);
  }
  return k;
}

struct ForwardKinematicsResult {
  std::array<Vec2, kNumLegs> feet{};
  Vec3 base = Vec3::Zero();
};

inline ForwardKinematicsResult forward_kinematics(const RobotModel& model, const VecQ& q) {
  const auto k = compute_kinematics(model, q, VecQ::Zero());
  ForwardKinematicsResult r;
  for (int leg = 0; leg < kNumLegs; ++leg) r.feet[leg] = k.feet[leg].p;
  r.base = q.head<3>();
  return r;
}

struct TaskJacobians {
  Eigen::Matrix<double, 1, kNq> base_height = Eigen::Matrix<double, 1, kNq>::Zero();
  Eigen::Matrix<double, 1, kNq> base_pitch = Eigen::Matrix<double, 1, kNq>::Zero();
  std::array<Mat2Q, kNumLegs> foot{};
  std::array<Vec2, kNumLegs> foot_drift{};
  std::array<Vec2, kNumLegs> foot_position{};
  Mat4Q Jc = Mat4Q::Zero();  // rows [f1x, f1z, f2x, f2z]
  Vec4 Jc_drift = Vec4::Zero();
};

inline TaskJacobians task_jacobians(const RobotKinematics& k) {
  TaskJacobians t;
  t.base_height(1) = 1.0;
  t.base_pitch(2) = 1.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    t.foot[leg] = k.feet[leg].J;
    t.foot_drift[leg] = k.feet[leg].drift;
    t.foot_position[leg] = k.feet[leg].p;
    t.Jc.middleRows<2>(2 * leg) = k.feet[leg].J;
    t.Jc_drift.segment<2>(2 * leg) = k.feet[leg].drift;
  }
  return t;
}

inline TaskJacobians task_jacobians(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  return task_jacobians(compute_kinematics(model, q, qd));
}

struct LoopConstraints {
  Vec4 phi = Vec4::Zero();
  Mat4Q J = Mat4Q::Zero();
  Vec4 drift = Vec4::Zero();  // Jdot_h * qdot
};

// phi stacks (fore endpoint - rear endpoint) per leg.
inline LoopConstraints loop_constraints(const RobotKinematics& k) {
  LoopConstraints c;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& r = k.limb_ends[leg][0];
    const auto& f = k.limb_ends[leg][1];
    c.phi.segment<2>(2 * leg) = f.p - r.p;
    c.J.middleRows<2>(2 * leg) = f.J - r.J;
    c.drift.segment<2>(2 * leg) = f.drift - r.drift;
  }
  return c;
}

inline LoopConstraints loop_constraints(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  return loop_constraints(compute_kinematics(model, q, qd));
}

// Generalized coordinates for a base pose and hip angles, knees closed on the
// working branch.
inline VecQ make_configuration(const RobotModel& model, const Vec3& base, const std::array<Vec2, kNumLegs>& hips) {
  VecQ q = VecQ::Zero();
  q.head<3>() = base;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const LegConfig c = solve_passive_joints(model, leg, hips[leg]);
    q(hip_index(leg, Limb::Rear)) = c.hips(0);
    q(knee_index(leg, Limb::Rear)) = c.knees(0);
    q(hip_index(leg, Limb::Fore)) = c.hips(1);
    q(knee_index(leg, Limb::Fore)) = c.knees(1);
  }
  return q;
}

// Configuration with each foot at a base-frame position.
inline VecQ configuration_from_feet(const RobotModel& model, const Vec3& base, const std::array<Vec2, kNumLegs>& feet_in_base) {
  std::array<Vec2, kNumLegs> hips{};
  for (int leg = 0; leg < kNumLegs; ++leg) hips[leg] = leg_inverse_kinematics(model, leg, feet_in_base[leg]);
  return make_configuration(model, base, hips);
}

// Base-frame leg configuration read from generalized coordinates; the foot is
// the mean of the two limb endpoints.
inline LegConfig leg_config(const RobotModel& model, const VecQ& q, int leg) {
  const LegParams& p = model.legs[leg];
  LegConfig c;
  c.hips = Vec2(q(hip_index(leg, Limb::Rear)), q(hip_index(leg, Limb::Fore)));
  c.knees = Vec2(q(knee_index(leg, Limb::Rear)), q(knee_index(leg, Limb::Fore)));
  c.rear_knee_point = knee_point(p.rear, c.hips(0));
  c.fore_knee_point = knee_point(p.fore, c.hips(1));
  const Vec2 r = c.rear_knee_point + p.rear.shank_length * link_dir(c.hips(0) + c.knees(0));
  const Vec2 f = c.fore_knee_point + p.fore.shank_length * link_dir(c.hips(1) + c.knees(1));
  c.foot = 0.5 * (r + f);
  return c;
}

inline Vec4 actuated_positions(const VecQ& q) {
  Vec4 a;
  for (int i = 0; i < kNumActuated; ++i) a(i) = q(kActuatedIndex[i]);
  return a;
}

inline Vec4 passive_positions(const VecQ& q) {
  Vec4 a;
  for (int i = 0; i < kNumActuated; ++i) a(i) = q(kPassiveIndex[i]);
  return a;
}

// Velocities of a closed configuration given base and actuated rates; the
// knee rates follow from J_h qdot = 0.
inline VecQ consistent_velocity(const RobotModel& model, const VecQ& q, const Vec3& base_rate, const Vec4& actuated_rate) {
  VecQ qd = VecQ::Zero();
  qd.head<3>() = base_rate;
  for (int i = 0; i < kNumActuated; ++i) qd(kActuatedIndex[i]) = actuated_rate(i);
  const LoopConstraints lc = loop_constraints(model, q, VecQ::Zero());
  Mat4 Jp;
  for (int i = 0; i < kNumActuated; ++i) Jp.col(i) = lc.J.col(kPassiveIndex[i]);
  const Vec4 rhs = -lc.J * qd;
  const Vec4 passive = Jp.fullPivLu().solve(rhs);
  for (int i = 0; i < kNumActuated; ++i) qd(kPassiveIndex[i]) = passive(i);
  return qd;
}

// Mirror a whole-robot state across the vertical through the base origin.
inline VecQ mirror_coordinates(const VecQ& q) {
  VecQ m;
  m(0) = -q(0);
  m(1) = q(1);
  m(2) = -q(2);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    m(hip_index(leg, Limb::Rear)) = -q(hip_index(leg, Limb::Fore));
    m(knee_index(leg, Limb::Rear)) = -q(knee_index(leg, Limb::Fore));
    m(hip_index(leg, Limb::Fore)) = -q(hip_index(leg, Limb::Rear));
    m(knee_index(leg, Limb::Fore)) = -q(knee_index(leg, Limb::Rear));
  }
  return m;
}

struct CenterOfMass {
  Vec2 p = Vec2::Zero();
  Vec2 v = Vec2::Zero();
};

inline CenterOfMass center_of_mass(const RobotModel& model, const RobotKinematics& k, const VecQ& q, const VecQ& qd) {
  CenterOfMass c;
  c.p = model.torso_mass * Vec2(q(0), q(1));
  c.v = model.torso_mass * Vec2(qd(0), qd(1));
  for (const auto& leg : k.links)
    for (const auto& limb : leg)
      for (const auto& link : limb) {
        c.p += link.mass * link.com.p;
        c.v += link.mass * (link.com.J * qd);
      }
  c.p /= model.total_mass();
  c.v /= model.total_mass();
  return c;
}

inline CenterOfMass center_of_mass(const RobotModel& model, const VecQ& q, const VecQ& qd) {
  return center_of_mass(model, compute_kinematics(model, q, qd), q, qd);
}

}  // namespace mftwbc

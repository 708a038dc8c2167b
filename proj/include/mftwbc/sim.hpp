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

// Planar rigid-body simulation with penalty contact.
//
// Velocity Verlet in kick-drift-kick form with a corrected closing kick; the
// loop closure is held by Baumgarte terms on the constraint acceleration. Friction is a tangential
// spring to a sticking point that slides when the Coulomb bound is reached,
// so a loaded foot does not creep.

#pragma once

#include <ostream>
#include <vector>

#include "mftwbc/dynamics.hpp"

namespace mftwbc {

// Piecewise-linear ground; flat beyond the end points.
struct Terrain {
  std::vector<Vec2> points{Vec2(-1e3, 0.0), Vec2(1e3, 0.0)};  // (x, h), sorted by x
  std::vector<double> mu{0.8};                                 // per segment

  static Terrain flat(double mu = 0.8) { return Terrain{}.with_mu(mu); }

  Terrain with_mu(double m) const {
    Terrain t = *this;
    t.mu.assign(std::max<size_t>(1, points.size() - 1), m);
    return t;
  }

  void validate() const {
    if (points.size() < 2) throw Error(ErrorCode::BadConfig, "terrain needs at least two points");
    for (size_t i = 1; i < points.size(); ++i)
      if (!(points[i].x() > points[i - 1].x())) throw Error(ErrorCode::BadConfig, "terrain points must increase in x");
    if (mu.size() != points.size() - 1) throw Error(ErrorCode::BadConfig, "one friction coefficient per terrain segment");
    for (double m : mu)
      if (!(m >= 0.0)) throw Error(ErrorCode::BadConfig, "friction must be non-negative");
  }

  int segment(double x) const {
    if (x <= points.front().x()) return 0;
    for (size_t i = 1; i < points.size(); ++i)
      if (x < points[i].x()) return static_cast<int>(i - 1);
    return static_cast<int>(points.size() - 2);
  }

  double height(double x) const {
    if (x <= points.front().x()) return points.front().y();
    if (x >= points.back().x()) return points.back().y();
    const int s = segment(x);
    const Vec2& a = points[s];
    const Vec2& b = points[s + 1];
    return a.y() + (b.y() - a.y()) * (x - a.x()) / (b.x() - a.x());
  }

  double slope(double x) const {
    if (x <= points.front().x() || x >= points.back().x()) return 0.0;
    const int s = segment(x);
    return (points[s + 1].y() - points[s].y()) / (points[s + 1].x() - points[s].x());
  }

  double friction(double x) const { return mu[segment(x)]; }
};

struct ContactParams {
  double stiffness = 5e4;          // N/m
  double damping = 1e3;            // N s/m
  double tangential_stiffness = 5e4;
  double tangential_damping = 1e3;
};

// Per-foot contact memory.
struct ContactPoint {
  bool active = false;
  double anchor = 0.0;  // sticking point along the ground tangent
};

struct ContactResult {
  Vec4 f = Vec4::Zero();  // [f1x, f1z, f2x, f2z] in world axes
  std::array<bool, kNumLegs> active{};
  std::array<ContactPoint, kNumLegs> next{};  // updated memory
  std::array<bool, kNumLegs> sliding{};
};

// Normal force: spring-damper on the penetration, never pulling. Tangential:
// spring to the sticking point plus damping, clipped to mu * normal.
inline ContactResult contact_forces(const std::array<Vec2, kNumLegs>& p, const std::array<Vec2, kNumLegs>& v,
                                    const std::array<ContactPoint, kNumLegs>& memory, const Terrain& terrain,
                                    const ContactParams& cp) {
  ContactResult r;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double x = p[leg].x();
    const double s = terrain.slope(x);
    const double norm = std::sqrt(1.0 + s * s);
    const Vec2 n(-s / norm, 1.0 / norm);
    const Vec2 t(1.0 / norm, s / norm);
    const double depth = (terrain.height(x) - p[leg].y()) * n.y();
    if (depth <= 0.0) {
      r.next[leg] = {};
      continue;
    }
    const double vn = v[leg].dot(n);
    const double fn = std::max(0.0, cp.stiffness * depth - cp.damping * vn);
    const double xt = p[leg].dot(t);
    const double vt = v[leg].dot(t);
    const double anchor = memory[leg].active ? memory[leg].anchor : xt;
    double ft = -cp.tangential_stiffness * (xt - anchor) - cp.tangential_damping * vt;
    const double limit = terrain.friction(x) * fn;
    double next_anchor = anchor;
    if (std::abs(ft) > limit) {
      ft = std::copysign(limit, ft);
      // Slide the sticking point so the spring alone carries the bound.
      next_anchor = xt + ft / cp.tangential_stiffness;
      r.sliding[leg] = true;
    }
    const Vec2 f = fn * n + ft * t;
    r.f.segment<2>(2 * leg) = f;
    r.active[leg] = fn > 0.0;
    r.next[leg] = {true, next_anchor};
  }
  return r;
}

// Sagittal push on the base.
struct PushEvent {
  enum class Trigger { Time, LiftOff };
  Trigger trigger = Trigger::LiftOff;
  double time = 0.0;       // Time: start instant. LiftOff: earliest instant the trigger is armed.
  double impulse = 0.0;    // N s
  double duration = 0.01;  // s

  void validate() const {
    if (!(duration > 0.0)) throw Error(ErrorCode::BadConfig, "push duration must be positive");
  }
};

// Constant force over a whole number of physics steps so the delivered
// impulse is exact.
struct PushWindow {
  long first_step = -1;
  long steps = 0;
  double force = 0.0;

  static PushWindow start(const PushEvent& e, long step, double dt) {
    PushWindow w;
    w.first_step = step;
    w.steps = std::max<long>(1, std::lround(e.duration / dt));
    w.force = e.impulse / (static_cast<double>(w.steps) * dt);
    return w;
  }

  double at(long step) const { return step >= first_step && step < first_step + steps && first_step >= 0 ? force : 0.0; }
};

struct SimConfig {
  double dt = 2e-4;
  int control_every = 5;
  double baumgarte_omega = 200.0;
  double baumgarte_zeta = 1.0;
  double blowup_speed = 1e3;
  ContactParams contact{};
  Terrain terrain = Terrain::flat();

  double control_dt() const { return dt * control_every; }

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorCode::BadConfig, "dt must be positive");
    if (control_every < 1) throw Error(ErrorCode::BadConfig, "control_every must be >= 1");
    if (!(baumgarte_omega >= 0.0) || !(baumgarte_zeta >= 0.0)) throw Error(ErrorCode::BadConfig, "bad Baumgarte gains");
    if (!(contact.stiffness > 0.0) || !(contact.damping >= 0.0) || !(contact.tangential_stiffness > 0.0) ||
        !(contact.tangential_damping >= 0.0))
      throw Error(ErrorCode::BadConfig, "bad contact parameters");
    terrain.validate();
  }
};

inline nlohmann::json sim_config_to_json(const SimConfig& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const Vec2& p : c.terrain.points) pts.push_back({p.x(), p.y()});
  return {{"dt", c.dt},
          {"control_every", c.control_every},
          {"baumgarte_omega", c.baumgarte_omega},
          {"baumgarte_zeta", c.baumgarte_zeta},
          {"blowup_speed", c.blowup_speed},
          {"contact",
           {{"stiffness", c.contact.stiffness},
            {"damping", c.contact.damping},
            {"tangential_stiffness", c.contact.tangential_stiffness},
            {"tangential_damping", c.contact.tangential_damping}}},
          {"terrain", {{"points", pts}, {"mu", c.terrain.mu}}}};
}

inline SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig c = {}) {
  try {
    auto num = [&](const nlohmann::json& o, const char* k, double& v) {
      if (o.contains(k)) v = o.at(k).get<double>();
    };
    num(j, "dt", c.dt);
    if (j.contains("control_every")) c.control_every = j.at("control_every").get<int>();
    num(j, "baumgarte_omega", c.baumgarte_omega);
    num(j, "baumgarte_zeta", c.baumgarte_zeta);
    num(j, "blowup_speed", c.blowup_speed);
    if (j.contains("contact")) {
      const auto& k = j.at("contact");
      num(k, "stiffness", c.contact.stiffness);
      num(k, "damping", c.contact.damping);
      num(k, "tangential_stiffness", c.contact.tangential_stiffness);
      num(k, "tangential_damping", c.contact.tangential_damping);
    }
    if (j.contains("terrain")) {
      const auto& t = j.at("terrain");
      if (t.contains("points")) {
        c.terrain.points.clear();
        for (const auto& p : t.at("points")) c.terrain.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      }
      if (t.contains("mu")) {
        if (t.at("mu").is_number()) c.terrain = c.terrain.with_mu(t.at("mu").get<double>());
        else c.terrain.mu = t.at("mu").get<std::vector<double>>();
      } else if (c.terrain.mu.size() != c.terrain.points.size() - 1) {
        c.terrain = c.terrain.with_mu(c.terrain.mu.front());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  c.validate();
  return c;
}

struct SimState {
  GeneralizedState robot;
  std::array<ContactPoint, kNumLegs> contact{};
  long step = 0;
};

// Everything evaluated at one configuration.
struct SimEval {
  VecQ qdd = VecQ::Zero();
  ContactResult contact;
  std::array<Vec2, kNumLegs> foot_p{};
  std::array<Vec2, kNumLegs> foot_v{};
  Vec4 phi = Vec4::Zero();
  double push = 0.0;
};

class Simulator {
 public:
  Simulator(RobotModel model, SimConfig config) : model_(std::move(model)), cfg_(std::move(config)) { cfg_.validate(); }

  const RobotModel& model() const { return model_; }
  const SimConfig& config() const { return cfg_; }

  void reset(const GeneralizedState& s) {
    state_ = {};
    state_.robot = s;
    state_.robot.t = 0.0;
    have_eval_ = false;
    push_ = {};
  }

  const SimState& state() const { return state_; }
  void set_state(const SimState& s) {
    state_ = s;
    have_eval_ = false;
  }

  // Contact forces and feet at the current state (for estimation).
  const SimEval& evaluate() {
    if (!have_eval_) {
      eval_ = evaluate_at(state_.robot.q, state_.robot.qd, state_.contact, state_.step);
      have_eval_ = true;
    }
    return eval_;
  }

  void schedule_push(const PushEvent& e) { push_ = PushWindow::start(e, state_.step, cfg_.dt); }
  const PushWindow& push() const { return push_; }

  void set_torque(const Vec4& tau) {
    if (tau != tau_) have_eval_ = false;
    tau_ = tau;
  }
  const Vec4& torque() const { return tau_; }

  void step() {
    const double dt = cfg_.dt;
    SimState& s = state_;
    const SimEval& a0 = evaluate();
    const VecQ v_half = s.robot.qd + 0.5 * dt * a0.qdd;
    const std::array<ContactPoint, kNumLegs> memory = a0.contact.next;
    s.robot.q += dt * v_half;
    ++s.step;
    s.robot.t = static_cast<double>(s.step) * dt;
    // Second kick. The forces depend on velocity, so predict the end
    // velocity once and re-evaluate there.
    const SimEval pred = evaluate_at(s.robot.q, v_half, memory, s.step - 1);
    const SimEval a1 = evaluate_at(s.robot.q, v_half + 0.5 * dt * pred.qdd, memory, s.step - 1);
    s.robot.qd = v_half + 0.5 * dt * a1.qdd;
    s.contact = memory;
    have_eval_ = false;
    if (!s.robot.qd.allFinite() || !s.robot.q.allFinite() || s.robot.qd.norm() > cfg_.blowup_speed)
      throw Error(ErrorCode::NumericalBlowup, "velocity left the sane range at t=" + std::to_string(s.robot.t));
  }

  double energy() const { return kinetic_energy(model_, state_.robot.q, state_.robot.qd) + potential_energy(model_, state_.robot.q); }

 private:
  RobotModel model_;
  SimConfig cfg_;
  SimState state_;
  SimEval eval_;
  bool have_eval_ = false;
  Vec4 tau_ = Vec4::Zero();
  PushWindow push_;

  // `interval` selects the push force: it is held over whole steps.
  SimEval evaluate_at(const VecQ& q, const VecQ& qd, const std::array<ContactPoint, kNumLegs>& memory, long interval) const {
    SimEval e;
    const DynamicsTerms t = compute_tree_terms(model_, q, qd);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      e.foot_p[leg] = t.kin.feet[leg].p;
      e.foot_v[leg] = t.kin.feet[leg].J * qd;
    }
    e.contact = contact_forces(e.foot_p, e.foot_v, memory, cfg_.terrain, cfg_.contact);
    e.push = push_.at(interval);
    VecQ external = VecQ::Zero();
    external(0) = e.push;
    const double w = cfg_.baumgarte_omega, z = cfg_.baumgarte_zeta;
    e.phi = t.phi;
    const Vec4 target = -t.Jh_drift - 2.0 * z * w * (t.Jh * qd) - w * w * t.phi;
    e.qdd = forward_dynamics_constrained(t, tau_, e.contact.f, external, &target).qdd;
    return e;
  }
};

inline void write_trajectory_header(std::ostream& os) {
  os << "t";
  for (int i = 0; i < kNq; ++i) os << ",q" << i;
  for (int i = 0; i < kNq; ++i) os << ",qd" << i;
  for (int i = 0; i < kNumContact; ++i) os << ",fc" << i;
  os << ",contact0,contact1,push\n";
}

inline void write_trajectory_row(std::ostream& os, const SimState& s, const SimEval& e) {
  os << s.robot.t;
  for (int i = 0; i < kNq; ++i) os << ',' << s.robot.q(i);
  for (int i = 0; i < kNq; ++i) os << ',' << s.robot.qd(i);
  for (int i = 0; i < kNumContact; ++i) os << ',' << e.contact.f(i);
  os << ',' << e.contact.active[0] << ',' << e.contact.active[1] << ',' << e.push << '\n';
}

}  // namespace mftwbc

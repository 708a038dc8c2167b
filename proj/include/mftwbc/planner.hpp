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

// Gait timing and task references. Base height and pitch are held constant;
// the horizontal base motion is left to the foot placement law, which puts
// the swing foot at  x_c + k_v xd_c + k_p (xd_c - xd_c*)  evaluated at the
// predicted touch-down state.

#pragma once

#include <vector>

#include "mftwbc/wbc.hpp"

namespace mftwbc {

struct Command {
  double height = 0.40;  // base height above ground, m
  double speed = 0.0;    // average forward speed, m/s
};

// Piecewise-constant command schedule.
struct CommandProfile {
  std::vector<std::pair<double, Command>> points{{0.0, Command{}}};

  Command at(double t) const {
    Command c = points.front().second;
    for (const auto& [ts, cmd] : points)
      if (ts <= t) c = cmd;
    return c;
  }
};

struct BaseReference {
  double height = 0.0;
  double pitch = 0.0;
};

inline BaseReference base_reference(const Command& c) { return {c.height, 0.0}; }

struct ComState {
  double x = 0.0;
  double xd = 0.0;
};

// Linear inverted pendulum about the support point, pendulum height z, run
// forward for `remaining` seconds.
inline ComState predict_preimpact_com(const ComState& now, double support_x, double z, double remaining, double gravity) {
  if (remaining <= 0.0) return now;
  const double w = std::sqrt(gravity / z);
  const double c = std::cosh(w * remaining), s = std::sinh(w * remaining);
  const double r = now.x - support_x;
  return {support_x + r * c + now.xd / w * s, r * w * s + now.xd * c};
}

inline double foot_placement(double x_pre, double xd_pre, double xd_star, double k_v, double k_p) {
  return x_pre + k_v * xd_pre + k_p * (xd_pre - xd_star);
}

// Touch-down speed of the symmetric pendulum orbit whose average speed over a
// step of length T is v: the pendulum is fastest at the end of the step.
inline double desired_preimpact_speed(double v, double step_duration, double z, double gravity) {
  const double h = 0.5 * std::sqrt(gravity / z) * step_duration;
  return h > 1e-12 ? v * h / std::tanh(h) : v;
}

// Speed reference for the placement law. With k_v different from the orbit's
// own foot offset tanh(h)/w the law settles on a slower (or faster) orbit, so
// the reference is shifted until the law's fixed point is the orbit above.
inline double placement_speed_reference(double v, double step_duration, double z, double gravity, double k_v,
                                        double k_p) {
  const double star = desired_preimpact_speed(v, step_duration, z, gravity);
  const double w = std::sqrt(gravity / z);
  const double excess = k_v + k_p - std::tanh(0.5 * w * step_duration) / w;
  if (!(k_p > 0.0) || excess <= 0.0) return star;
  return star * excess / k_p;
}

// --- swing splines ----------------------------------------------------------------

struct Sample1 {
  double p = 0.0, v = 0.0, a = 0.0;
};

// Cubic Hermite segment on [t0, t1].
struct Hermite {
  double t0 = 0.0, t1 = 1.0;
  double p0 = 0.0, v0 = 0.0, p1 = 0.0, v1 = 0.0;

  Sample1 at(double t) const {
    const double T = t1 - t0;
    if (T <= 0.0) return {p1, 0.0, 0.0};
    const double s = std::clamp((t - t0) / T, 0.0, 1.0);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    const double e00 = 12 * s - 6, e10 = 6 * s - 4, e01 = -12 * s + 6, e11 = 6 * s - 2;
    Sample1 o;
    o.p = h00 * p0 + h10 * T * v0 + h01 * p1 + h11 * T * v1;
    o.v = (d00 * p0 + d10 * T * v0 + d01 * p1 + d11 * T * v1) / T;
    o.a = (e00 * p0 + e10 * T * v0 + e01 * p1 + e11 * T * v1) / (T * T);
    if (t > t1) o = {p1 + v1 * (t - t1), v1, 0.0};
    return o;
  }
};

struct SwingSample {
  Vec2 p = Vec2::Zero(), v = Vec2::Zero(), a = Vec2::Zero();
};

// x: cubic from the lift-off point to the target with zero end speed,
// recomputed from the current reference when the target moves.
// z: up to the apex at mid-step and back down, zero vertical speed at both
// ends and at the apex; after the nominal end it keeps sinking slowly so a
// late touch-down still happens.
class SwingTrajectory {
 public:
  SwingTrajectory() = default;
  SwingTrajectory(const Vec2& liftoff, double target_x, double apex, double t0, double duration, double sink_speed = 0.1,
                  double ground_offset = 0.0)
      : t0_(t0), duration_(duration), sink_(sink_speed) {
    x_ = {t0, t0 + duration, liftoff.x(), 0.0, target_x, 0.0};
    const double mid = t0 + 0.5 * duration;
    up_ = {t0, mid, liftoff.y(), 0.0, liftoff.y() + apex, 0.0};
    down_ = {mid, t0 + duration, liftoff.y() + apex, 0.0, liftoff.y() + ground_offset, 0.0};
  }

  double target() const { return x_.p1; }
  double start() const { return t0_; }
  double duration() const { return duration_; }

  void retarget(double t, double target_x) {
    if (t >= x_.t1) {
      x_.p1 = target_x;
      return;
    }
    const Sample1 now = x_.at(t);
    x_ = {t, x_.t1, now.p, now.v, target_x, 0.0};
  }

  SwingSample at(double t) const {
    SwingSample s;
    const Sample1 x = x_.at(std::min(t, x_.t1));
    s.p.x() = x.p;
    s.v.x() = t < x_.t1 ? x.v : 0.0;
    s.a.x() = t < x_.t1 ? x.a : 0.0;
    const Sample1 z = t < up_.t1 ? up_.at(t) : down_.at(std::min(t, down_.t1));
    s.p.y() = z.p;
    s.v.y() = z.v;
    s.a.y() = z.a;
    if (t > down_.t1) {
      s.p.y() = down_.p1 - sink_ * (t - down_.t1);
      s.v.y() = -sink_;
      s.a.y() = 0.0;
    }
    return s;
  }

 private:
  double t0_ = 0.0, duration_ = 0.35, sink_ = 0.1;
  Hermite x_, up_, down_;
};

// --- gait ------------------------------------------------------------------------------

struct PlannerConfig {
  double step_duration = 0.35;
  double apex = 0.06;
  double k_v = 0.16;
  double k_p = 0.08;
  double retarget_until = 0.7;      // fraction of the step after which the target is frozen
  double touchdown_force = 5.0;     // N
  double touchdown_hold = 0.002;    // s
  double touchdown_earliest = 0.5;  // fraction of the step before which contact is ignored
  double sink_speed = 0.1;          // m/s after the nominal swing end
  double max_step = 0.3;            // |target - CoM| clamp, m

  void validate() const {
    if (!(step_duration > 0.0)) throw Error(ErrorCode::BadConfig, "step duration must be positive");
    if (!(apex >= 0.0)) throw Error(ErrorCode::BadConfig, "apex must be non-negative");
    if (!(retarget_until >= 0.0 && retarget_until <= 1.0)) throw Error(ErrorCode::BadConfig, "retarget_until must be in [0,1]");
    if (!(touchdown_force > 0.0) || !(touchdown_hold >= 0.0)) throw Error(ErrorCode::BadConfig, "bad touch-down detector");
    if (!(max_step > 0.0)) throw Error(ErrorCode::BadConfig, "max_step must be positive");
  }
};

inline nlohmann::json planner_config_to_json(const PlannerConfig& c) {
  return {{"step_duration", c.step_duration},   {"apex", c.apex},
          {"k_v", c.k_v},                       {"k_p", c.k_p},
          {"retarget_until", c.retarget_until}, {"touchdown_force", c.touchdown_force},
          {"touchdown_hold", c.touchdown_hold}, {"touchdown_earliest", c.touchdown_earliest},
          {"sink_speed", c.sink_speed},         {"max_step", c.max_step}};
}

inline PlannerConfig planner_config_from_json(const nlohmann::json& j, PlannerConfig c = {}) {
  try {
    for (auto [key, ptr] : std::initializer_list<std::pair<const char*, double*>>{
             {"step_duration", &c.step_duration},
             {"apex", &c.apex},
             {"k_v", &c.k_v},
             {"k_p", &c.k_p},
             {"retarget_until", &c.retarget_until},
             {"touchdown_force", &c.touchdown_force},
             {"touchdown_hold", &c.touchdown_hold},
             {"touchdown_earliest", &c.touchdown_earliest},
             {"sink_speed", &c.sink_speed},
             {"max_step", &c.max_step}})
      if (j.contains(key)) *ptr = j.at(key).get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  c.validate();
  return c;
}

// What the planner sees each tick.
struct PlannerInput {
  double t = 0.0;
  std::array<Vec2, kNumLegs> foot_p{};
  std::array<Vec2, kNumLegs> foot_v{};
  std::array<double, kNumLegs> normal_force{};
  ComState com;
  double com_height = 0.0;  // above the support foot
};

enum class GaitEvent { None, LiftOff, TouchDown };

class Gait {
 public:
  Gait() = default;
  Gait(PlannerConfig config, double gravity) : cfg_(config), gravity_(gravity) { cfg_.validate(); }

  // Both feet planted at the given points.
  void stand(const std::array<Vec2, kNumLegs>& feet) {
    phase_ = {ContactPhase::Stance, ContactPhase::Stance};
    anchor_ = feet;
    walking_ = false;
    swing_leg_ = -1;
  }

  // Start stepping by lifting `leg` at time t.
  void start_walking(int leg, double t, const PlannerInput& in, const Command& cmd) {
    walking_ = true;
    expected_duration_ = cfg_.step_duration;
    lift(leg, t, in, cmd);
  }

  bool walking() const { return walking_; }
  int swing_leg() const { return swing_leg_; }
  int steps() const { return steps_; }
  double step_timer(double t) const { return walking_ ? t - step_start_ : 0.0; }
  const std::array<ContactPhase, kNumLegs>& phase() const { return phase_; }
  const std::array<Vec2, kNumLegs>& anchors() const { return anchor_; }
  const SwingTrajectory& swing() const { return swing_; }
  const PlannerConfig& config() const { return cfg_; }
  double last_touchdown_time() const { return last_touchdown_; }
  double expected_step_duration() const { return expected_duration_; }

  // Advance the gait; returns the event detected on this tick, if any.
  GaitEvent update(const PlannerInput& in, const Command& cmd) {
    if (!walking_) return GaitEvent::None;
    const double s = in.t - step_start_;
    const int sw = swing_leg_;
    // Debounced touch-down on the swing foot.
    if (s >= cfg_.touchdown_earliest * cfg_.step_duration && in.normal_force[sw] > cfg_.touchdown_force) {
      if (contact_since_ < 0.0) contact_since_ = in.t;
    } else {
      contact_since_ = -1.0;
    }
    if (contact_since_ >= 0.0 && in.t - contact_since_ >= cfg_.touchdown_hold - 1e-9) {
      phase_[sw] = ContactPhase::Stance;
      anchor_[sw] = in.foot_p[sw];
      ++steps_;
      // The foot lands a little off schedule (tracking lag, sink); the next
      // prediction aims at the instant the last step actually took.
      expected_duration_ = std::clamp(in.t - step_start_, 0.7 * cfg_.step_duration, 1.3 * cfg_.step_duration);
      last_touchdown_ = in.t;
      lift(1 - sw, in.t, in, cmd);
      return GaitEvent::TouchDown;
    }
    // Foot placement.
    if (s <= cfg_.retarget_until * cfg_.step_duration) swing_.retarget(in.t, placement(in, cmd, s));
    return GaitEvent::None;
  }

  double placement(const PlannerInput& in, const Command& cmd, double s) const {
    const int st = 1 - swing_leg_;
    const double remaining = std::max(0.0, expected_duration_ - s);
    const double z = std::max(in.com_height, 0.05);
    const ComState pre = predict_preimpact_com(in.com, anchor_[st].x(), z, remaining, gravity_);
    const double star = placement_speed_reference(cmd.speed, expected_duration_, z, gravity_, cfg_.k_v, cfg_.k_p);
    double x = foot_placement(pre.x, pre.xd, star, cfg_.k_v, cfg_.k_p);
    return std::clamp(x, pre.x - cfg_.max_step, pre.x + cfg_.max_step);
  }

  // Task references for the controller.
  void fill_tasks(double t, const Command& cmd, const WbcConfig& wbc, TaskSet& tasks) const {
    const BaseReference b = base_reference(cmd);
    tasks.height.ref(0) = b.height;
    tasks.height.vel(0) = tasks.height.acc(0) = 0.0;
    tasks.pitch.ref(0) = b.pitch;
    tasks.pitch.vel(0) = tasks.pitch.acc(0) = 0.0;
    tasks.height.kp = tasks.pitch.kp = wbc.base.kp;
    tasks.height.kd = tasks.pitch.kd = wbc.base.kd;
    tasks.phase = phase_;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      Task& f = tasks.foot[leg];
      if (phase_[leg] == ContactPhase::Stance) {
        f.ref = anchor_[leg];
        f.vel.setZero();
        f.acc.setZero();
        f.kp = wbc.stance.kp;
        f.kd = wbc.stance.kd;
      } else {
        const SwingSample s = swing_.at(t);
        f.ref = s.p;
        f.vel = s.v;
        f.acc = s.a;
        f.kp = wbc.swing.kp;
        f.kd = wbc.swing.kd;
      }
    }
  }

 private:
  PlannerConfig cfg_{};
  double gravity_ = 9.81;
  bool walking_ = false;
  int swing_leg_ = -1;
  int steps_ = 0;
  double step_start_ = 0.0;
  double contact_since_ = -1.0;
  double last_touchdown_ = 0.0;
  double expected_duration_ = 0.35;
  std::array<ContactPhase, kNumLegs> phase_{ContactPhase::Stance, ContactPhase::Stance};
  std::array<Vec2, kNumLegs> anchor_{};
  SwingTrajectory swing_;

  void lift(int leg, double t, const PlannerInput& in, const Command& cmd) {
    swing_leg_ = leg;
    phase_[leg] = ContactPhase::Swing;
    step_start_ = t;
    contact_since_ = -1.0;
    swing_ = SwingTrajectory(in.foot_p[leg], in.foot_p[leg].x(), cfg_.apex, t, cfg_.step_duration, cfg_.sink_speed);
    swing_.retarget(t, placement(in, cmd, 0.0));
  }
};

}  // namespace mftwbc

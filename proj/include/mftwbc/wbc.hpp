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

// Whole-body controller. One QP per tick over x = [qdd(11); fc(4); eps(12)].
//
// The transmissibility constraint keeps the predicted actuated joint position
//   qa + qda dt + 1/2 qdda dt^2
// inside the stacked per-leg polygon A qa <= b, relaxed by eps. The baseline
// controller instead keeps the predicted passive knees inside their
// reachable range.

#pragma once

#include <chrono>
#include <optional>
#include <ostream>

#include "mftwbc/dynamics.hpp"
#include "mftwbc/qp.hpp"
#include "mftwbc/wsmap.hpp"

namespace mftwbc {

inline constexpr int kQddOffset = 0;
inline constexpr int kFcOffset = kNq;
inline constexpr int kEpsOffset = kNq + kNumContact;
inline constexpr int kNumSlack = 12;
inline constexpr int kNumDecision = kNq + kNumContact + kNumSlack;

// --- tasks --------------------------------------------------------------------

struct Task {
  VecX ref, vel, acc;  // reference position, velocity, feed-forward acceleration
  VecX est, est_vel;   // measured
  double kp = 0.0;
  double kd = 0.0;
  double weight = 1.0;

  static Task of_dim(int n) {
    Task t;
    t.ref = t.vel = t.acc = t.est = t.est_vel = VecX::Zero(n);
    return t;
  }
};

inline VecX desired_task_accel(const Task& t) { return t.acc + t.kp * (t.ref - t.est) + t.kd * (t.vel - t.est_vel); }

struct TaskSet {
  Task height = Task::of_dim(1);
  Task pitch = Task::of_dim(1);
  std::array<Task, kNumLegs> foot{Task::of_dim(2), Task::of_dim(2)};
  std::array<ContactPhase, kNumLegs> phase{ContactPhase::Stance, ContactPhase::Stance};
};

// --- configuration -------------------------------------------------------------

struct WbcWeights {
  double height = 1.0;
  double pitch = 1.0;
  double swing_foot = 1.0;
  double stance_foot = 1e2;
  double force = 1e-3;
  double force_change = 5e-2;
  double slack = 1e3;
};

struct Gains {
  double kp = 0.0;
  double kd = 0.0;
};

// Units of the slack: Acceleration divides the transmissibility rows by
// dt^2/2 so eps is measured in rad/s^2 like the tracking residuals; Position
// keeps the rows as written, eps in rad.
enum class SlackScaling { Acceleration, Position };

struct WbcConfig {
  WbcWeights weights{};
  Gains base{100.0, 20.0};
  Gains swing{400.0, 40.0};
  Gains stance{0.0, 0.0};
  double mu = 0.6;
  double tau_max = 40.0;
  double qdd_joint_max = 500.0;
  double qdd_base_max = 50.0;
  double dt = 0.05;
  SlackScaling slack_scaling = SlackScaling::Position;
  bool regularize_normal_force = false;

  void validate() const {
    const WbcWeights& w = weights;
    for (double v : {w.height, w.pitch, w.swing_foot, w.stance_foot, w.force, w.force_change, w.slack, base.kp, base.kd,
                     swing.kp, swing.kd, stance.kp, stance.kd})
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::BadConfig, "weights and gains must be non-negative");
    if (!(mu > 0.0)) throw Error(ErrorCode::BadConfig, "friction coefficient must be positive");
    if (!(tau_max > 0.0)) throw Error(ErrorCode::BadConfig, "tau_max must be positive");
    if (!(qdd_joint_max > 0.0) || !(qdd_base_max > 0.0)) throw Error(ErrorCode::BadConfig, "acceleration bounds must be positive");
    if (!(dt > 0.0)) throw Error(ErrorCode::BadConfig, "prediction horizon must be positive");
  }
};

inline nlohmann::json wbc_config_to_json(const WbcConfig& c) {
  const WbcWeights& w = c.weights;
  return {{"weights",
           {{"height", w.height},
            {"pitch", w.pitch},
            {"swing_foot", w.swing_foot},
            {"stance_foot", w.stance_foot},
            {"force", w.force},
            {"force_change", w.force_change},
            {"slack", w.slack}}},
          {"base_gains", {c.base.kp, c.base.kd}},
          {"swing_gains", {c.swing.kp, c.swing.kd}},
          {"stance_gains", {c.stance.kp, c.stance.kd}},
          {"mu", c.mu},
          {"tau_max", c.tau_max},
          {"qdd_joint_max", c.qdd_joint_max},
          {"qdd_base_max", c.qdd_base_max},
          {"dt", c.dt},
          {"slack_scaling", c.slack_scaling == SlackScaling::Acceleration ? "acceleration" : "position"},
          {"regularize_normal_force", c.regularize_normal_force}};
}

// Missing keys keep their defaults.
inline WbcConfig wbc_config_from_json(const nlohmann::json& j, WbcConfig c = {}) {
  try {
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      auto get = [&](const char* k, double& v) {
        if (w.contains(k)) v = w.at(k).get<double>();
      };
      get("height", c.weights.height);
      get("pitch", c.weights.pitch);
      get("swing_foot", c.weights.swing_foot);
      get("stance_foot", c.weights.stance_foot);
      get("force", c.weights.force);
      get("force_change", c.weights.force_change);
      get("slack", c.weights.slack);
    }
    auto gains = [&](const char* k, Gains& g) {
      if (!j.contains(k)) return;
      const auto& a = j.at(k);
      if (!a.is_array() || a.size() != 2) throw Error(ErrorCode::BadConfig, std::string(k) + " must be [kp, kd]");
      g = {a.at(0).get<double>(), a.at(1).get<double>()};
    };
    gains("base_gains", c.base);
    gains("swing_gains", c.swing);
    gains("stance_gains", c.stance);
    auto num = [&](const char* k, double& v) {
      if (j.contains(k)) v = j.at(k).get<double>();
    };
    num("mu", c.mu);
    num("tau_max", c.tau_max);
    num("qdd_joint_max", c.qdd_joint_max);
    num("qdd_base_max", c.qdd_base_max);
    num("dt", c.dt);
    if (j.contains("regularize_normal_force")) c.regularize_normal_force = j.at("regularize_normal_force").get<bool>();
    if (j.contains("slack_scaling")) {
      const std::string s = j.at("slack_scaling").get<std::string>();
      if (s == "acceleration") c.slack_scaling = SlackScaling::Acceleration;
      else if (s == "position") c.slack_scaling = SlackScaling::Position;
      else throw Error(ErrorCode::BadConfig, "unknown slack_scaling '" + s + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  c.validate();
  return c;
}

// --- constraint transformation --------------------------------------------------

// Rows C qdd <= d. C is rows x kNq.
struct MftConstraint {
  MatX C;
  VecX d;
  double dt = 0.0;
  int rows() const { return static_cast<int>(C.rows()); }
};

inline MftConstraint build_mft_constraint(const Polyhedron& poly, const Vec4& qa, const Vec4& qda, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadConfig, "dt must be positive");
  if (poly.dim() != kNumActuated) throw Error(ErrorCode::BadConfig, "joint polyhedron must act on the 4 hips");
  MftConstraint m;
  m.dt = dt;
  m.C = 0.5 * dt * dt * poly.A * actuated_selection();
  m.d = poly.b - poly.A * (qa + qda * dt);
  return m;
}

// Foot-space form: p + J qd dt + 1/2 (J qdd + Jdot qd) dt^2 inside A p <= b.
inline MftConstraint build_cartesian_constraint(const Polyhedron& poly, const VecX& p, const MatX& J, const VecX& qd,
                                               const VecX& Jdot_qd, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadConfig, "dt must be positive");
  if (poly.dim() != p.size() || J.rows() != p.size()) throw Error(ErrorCode::BadConfig, "dimension mismatch");
  MftConstraint m;
  m.dt = dt;
  m.C = 0.5 * dt * dt * poly.A * J;
  m.d = poly.b - poly.A * (p + J * qd * dt + 0.5 * dt * dt * Jdot_qd);
  return m;
}

// Passive-knee range rows lo <= C qdd <= hi; kept two-sided.
struct RangeConstraint {
  MatX C;
  VecX lo, hi;
};

inline Vec4 passive_limits_lo(const Mat2& range) { return Vec4(range(0, 0), range(1, 0), range(0, 0), range(1, 0)); }
inline Vec4 passive_limits_hi(const Mat2& range) { return Vec4(range(0, 1), range(1, 1), range(0, 1), range(1, 1)); }

inline RangeConstraint sa_constraint(const VecQ& q, const VecQ& qd, double dt, const Vec4& q_min, const Vec4& q_max) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadConfig, "dt must be positive");
  const auto S = passive_selection();
  RangeConstraint r;
  r.C = 0.5 * dt * dt * S;
  const Vec4 pred = S * (q + qd * dt);
  r.lo = q_min - pred;
  r.hi = q_max - pred;
  return r;
}

// --- problem assembly -------------------------------------------------------------

enum class ControllerKind { Mft, Sa };

inline std::string_view to_string(ControllerKind k) { return k == ControllerKind::Mft ? "MFT" : "SA"; }

inline ControllerKind controller_kind_from_string(std::string_view s) {
  if (s == "MFT" || s == "mft") return ControllerKind::Mft;
  if (s == "SA" || s == "sa") return ControllerKind::Sa;
  throw Error(ErrorCode::BadConfig, "unknown controller '" + std::string(s) + "'");
}

struct ProblemRows {
  int floating_base = 0;
  int closure = 0;
  int swing_pins = 0;
  int friction = 0;
  int torque = 0;
  int transmissibility = 0;
  int passive_range = 0;
};

struct AssembledProblem {
  QpProblem qp;
  ProblemRows rows;
  ActuationMap actuation;
  double slack_scale = 1.0;  // eps units -> rows of C qdd <= d + eps / slack_scale
};

// Static contact forces for the current base pose: vertical load split by the
// lever rule, no tangential load.
inline Vec4 static_contact_forces(const RobotModel& model, const VecQ& q, const std::array<ContactPhase, kNumLegs>& phase) {
  const auto k = compute_kinematics(model, q, VecQ::Zero());
  const double w = model.total_mass() * model.gravity;
  const double xc = center_of_mass(model, k, q, VecQ::Zero()).p.x();
  Vec4 f = Vec4::Zero();
  const bool s0 = phase[0] == ContactPhase::Stance, s1 = phase[1] == ContactPhase::Stance;
  if (s0 && s1) {
    const double x0 = k.feet[0].p.x(), x1 = k.feet[1].p.x();
    double a = std::abs(x1 - x0) > 1e-6 ? (x1 - xc) / (x1 - x0) : 0.5;
    a = std::clamp(a, 0.0, 1.0);
    f(1) = a * w;
    f(3) = (1.0 - a) * w;
  } else if (s0) {
    f(1) = w;
  } else if (s1) {
    f(3) = w;
  }
  return f;
}

struct ProblemInputs {
  const DynamicsTerms* terms = nullptr;
  const TaskSet* tasks = nullptr;
  std::array<ContactPhase, kNumLegs> contact{ContactPhase::Stance, ContactPhase::Stance};
  Vec4 f_prev = Vec4::Zero();
  const MftConstraint* mft = nullptr;
  const RangeConstraint* sa = nullptr;
};

inline AssembledProblem assemble_problem(const ProblemInputs& in, const WbcConfig& cfg) {
  const DynamicsTerms& t = *in.terms;
  const TaskSet& tasks = *in.tasks;
  for (int leg = 0; leg < kNumLegs; ++leg)
    if (tasks.phase[leg] != in.contact[leg])
      throw Error(ErrorCode::InconsistentPhase, "foot task phase disagrees with the contact set");

  AssembledProblem out;
  QpProblem& p = out.qp;
  const int n = kNumDecision;
  p.H = MatX::Zero(n, n);
  p.g = VecX::Zero(n);

  // Tracking costs  w |J qdd + drift - a|^2.
  auto add_task = [&](const MatX& J, const VecX& drift, const VecX& a, double w) {
    if (w == 0.0) return;
    p.H.topLeftCorner(kNq, kNq) += w * J.transpose() * J;
    p.g.head(kNq) += w * J.transpose() * (drift - a);
  };
  const TaskJacobians tj = task_jacobians(t.kin);
  add_task(tj.base_height, VecX::Zero(1), desired_task_accel(tasks.height), cfg.weights.height);
  add_task(tj.base_pitch, VecX::Zero(1), desired_task_accel(tasks.pitch), cfg.weights.pitch);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double w = in.contact[leg] == ContactPhase::Stance ? cfg.weights.stance_foot : cfg.weights.swing_foot;
    add_task(tj.foot[leg], tj.foot_drift[leg], desired_task_accel(tasks.foot[leg]), w);
  }
  // Force regularization acts on the tangential components; the normal load
  // is shaped by the change penalty and the dynamics only.
  for (int leg = 0; leg < kNumLegs; ++leg) {
    p.H(kFcOffset + 2 * leg, kFcOffset + 2 * leg) += cfg.weights.force;
    if (cfg.regularize_normal_force) p.H(kFcOffset + 2 * leg + 1, kFcOffset + 2 * leg + 1) += cfg.weights.force;
  }
  p.H.block(kFcOffset, kFcOffset, kNumContact, kNumContact).diagonal().array() += cfg.weights.force_change;
  p.g.segment(kFcOffset, kNumContact) -= cfg.weights.force_change * in.f_prev;
  p.H.block(kEpsOffset, kEpsOffset, kNumSlack, kNumSlack).diagonal().array() += cfg.weights.slack;

  // Equalities: floating-base rows of the projected dynamics, loop closure at
  // acceleration level, zero force on swing feet.
  const int n_swing = (in.contact[0] == ContactPhase::Swing) + (in.contact[1] == ContactPhase::Swing);
  const int me = kNumBase + kNumLoop + 2 * n_swing;
  p.Aeq = MatX::Zero(me, n);
  p.beq = VecX::Zero(me);
  const MatQ Nt = t.N.transpose();
  p.Aeq.block(0, kQddOffset, kNumBase, kNq) = t.Sf * t.M;
  p.Aeq.block(0, kFcOffset, kNumBase, kNumContact) = -t.Sf * Nt * t.Jc.transpose();
  p.beq.head(kNumBase) = -t.Sf * (Nt * t.H + t.Jh.transpose() * (t.Lambda * t.Jh_drift));
  p.Aeq.block(kNumBase, kQddOffset, kNumLoop, kNq) = t.Jh;
  p.beq.segment(kNumBase, kNumLoop) = -t.Jh_drift;
  int r = kNumBase + kNumLoop;
  for (int leg = 0; leg < kNumLegs; ++leg)
    if (in.contact[leg] == ContactPhase::Swing) {
      p.Aeq(r++, kFcOffset + 2 * leg) = 1.0;
      p.Aeq(r++, kFcOffset + 2 * leg + 1) = 1.0;
    }
  out.rows.floating_base = kNumBase;
  out.rows.closure = kNumLoop;
  out.rows.swing_pins = 2 * n_swing;

  // Inequalities.
  out.actuation = actuation_map(t);
  const int n_stance = kNumLegs - n_swing;
  const int n_mft = in.mft ? in.mft->rows() : 0;
  const int n_sa = in.sa ? static_cast<int>(in.sa->C.rows()) : 0;
  if (n_mft > kNumSlack) throw Error(ErrorCode::BadConfig, "too many transmissibility rows");
  const int mi = 3 * n_stance + kNumActuated + n_mft + n_sa;
  p.Ain = MatX::Zero(mi, n);
  p.lower = VecX::Constant(mi, -kInf);
  p.upper = VecX::Constant(mi, kInf);
  r = 0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (in.contact[leg] != ContactPhase::Stance) continue;
    const int fx = kFcOffset + 2 * leg, fz = fx + 1;
    p.Ain(r, fz) = 1.0;
    p.lower(r++) = 0.0;
    p.Ain(r, fx) = 1.0;
    p.Ain(r, fz) = -cfg.mu;
    p.upper(r++) = 0.0;
    p.Ain(r, fx) = -1.0;
    p.Ain(r, fz) = -cfg.mu;
    p.upper(r++) = 0.0;
  }
  out.rows.friction = 3 * n_stance;
  p.Ain.block(r, kQddOffset, kNumActuated, kNq) = out.actuation.Tq;
  p.Ain.block(r, kFcOffset, kNumActuated, kNumContact) = out.actuation.Tf;
  p.lower.segment(r, kNumActuated) = VecX::Constant(kNumActuated, -cfg.tau_max) - out.actuation.tau0;
  p.upper.segment(r, kNumActuated) = VecX::Constant(kNumActuated, cfg.tau_max) - out.actuation.tau0;
  r += kNumActuated;
  out.rows.torque = kNumActuated;
  if (in.mft) {
    const double s = cfg.slack_scaling == SlackScaling::Acceleration ? 2.0 / (in.mft->dt * in.mft->dt) : 1.0;
    out.slack_scale = s;
    p.Ain.block(r, kQddOffset, n_mft, kNq) = s * in.mft->C;
    p.Ain.block(r, kEpsOffset, n_mft, n_mft) = -MatX::Identity(n_mft, n_mft);
    p.upper.segment(r, n_mft) = s * in.mft->d;
    r += n_mft;
    out.rows.transmissibility = n_mft;
  }
  if (in.sa) {
    const double s = 2.0 / (cfg.dt * cfg.dt);
    p.Ain.block(r, kQddOffset, n_sa, kNq) = s * in.sa->C;
    p.lower.segment(r, n_sa) = s * in.sa->lo;
    p.upper.segment(r, n_sa) = s * in.sa->hi;
    r += n_sa;
    out.rows.passive_range = n_sa;
  }

  // Bounds: base and joint accelerations; slack only where a transmissibility
  // row exists.
  p.xl = VecX::Constant(n, -kInf);
  p.xu = VecX::Constant(n, kInf);
  p.xl.head(kNumBase).setConstant(-cfg.qdd_base_max);
  p.xu.head(kNumBase).setConstant(cfg.qdd_base_max);
  p.xl.segment(kNumBase, kNq - kNumBase).setConstant(-cfg.qdd_joint_max);
  p.xu.segment(kNumBase, kNq - kNumBase).setConstant(cfg.qdd_joint_max);
  p.xl.tail(kNumSlack).setZero();
  p.xu.tail(kNumSlack).setZero();
  p.xu.segment(kEpsOffset, n_mft).setConstant(kInf);
  return out;
}

// --- controller ---------------------------------------------------------------------

struct TickResult {
  Vec4 tau = Vec4::Zero();
  VecQ qdd = VecQ::Zero();
  Vec4 fc = Vec4::Zero();
  VecX eps = VecX::Zero(kNumSlack);  // in the units of the relaxed rows
  QpStatus status = QpStatus::Optimal;
  int iterations = 0;
  double solve_time = 0.0;
  double tick_time = 0.0;
  double kkt = 0.0;
  bool fault = false;
};

class WbcController {
 public:
  WbcController(RobotModel model, WbcConfig config, ControllerKind kind, std::optional<Polyhedron> joint_poly,
                Mat2 passive_range)
      : model_(std::move(model)), cfg_(config), kind_(kind), poly_(std::move(joint_poly)), range_(passive_range) {
    cfg_.validate();
    if (kind_ == ControllerKind::Mft) {
      if (!poly_) throw Error(ErrorCode::BadConfig, "MFT controller needs the joint-space polyhedron");
      if (poly_->dim() != kNumActuated || poly_->faces() > kNumSlack)
        throw Error(ErrorCode::BadConfig, "polyhedron must be at most 12 x 4");
    }
  }

  const WbcConfig& config() const { return cfg_; }
  ControllerKind kind() const { return kind_; }
  const RobotModel& model() const { return model_; }
  const std::optional<Polyhedron>& polyhedron() const { return poly_; }
  const Mat2& passive_range() const { return range_; }
  const Vec4& last_tau() const { return tau_prev_; }
  const AssembledProblem& last_problem() const { return last_; }

  void reset(const GeneralizedState& s) {
    f_prev_ = static_contact_forces(model_, s.q, s.contact);
    tau_prev_.setZero();
    solver_.reset();
    started_ = true;
  }

  // Standard tasks from the measured state: height and pitch in the world,
  // feet in the world.
  void fill_estimates(const DynamicsTerms& t, TaskSet& tasks) const {
    tasks.height.est(0) = t.q(1);
    tasks.height.est_vel(0) = t.qd(1);
    tasks.pitch.est(0) = t.q(2);
    tasks.pitch.est_vel(0) = t.qd(2);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      tasks.foot[leg].est = t.kin.feet[leg].p;
      tasks.foot[leg].est_vel = t.kin.feet[leg].J * t.qd;
    }
  }

  TickResult tick(const GeneralizedState& s, const TaskSet& tasks) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!started_) reset(s);
    TickResult out;
    try {
      const DynamicsTerms terms = compute_terms(model_, s.q, s.qd);
      ProblemInputs in;
      in.terms = &terms;
      in.tasks = &tasks;
      in.contact = s.contact;
      in.f_prev = f_prev_;
      MftConstraint mft;
      RangeConstraint sa;
      if (kind_ == ControllerKind::Mft) {
        mft = build_mft_constraint(*poly_, actuated_positions(s.q), actuated_positions(s.qd), cfg_.dt);
        in.mft = &mft;
      } else {
        sa = sa_constraint(s.q, s.qd, cfg_.dt, passive_limits_lo(range_), passive_limits_hi(range_));
        in.sa = &sa;
      }
      last_ = assemble_problem(in, cfg_);
      const QpSolution sol = solver_.solve(last_.qp);
      out.status = sol.status;
      out.iterations = sol.iterations;
      out.solve_time = sol.solve_time;
      if (sol.status != QpStatus::Optimal) {
        out.fault = true;
      } else {
        out.kkt = kkt_residual(last_.qp, sol);
        out.qdd = sol.x.segment(kQddOffset, kNq);
        out.fc = sol.x.segment(kFcOffset, kNumContact);
        out.eps = sol.x.segment(kEpsOffset, kNumSlack);
        const ActuationMap& a = last_.actuation;
        out.tau = a.Tq * out.qdd + a.Tf * out.fc + a.tau0;
        // Rounding can overshoot the limit by a hair.
        out.tau = out.tau.cwiseMax(-cfg_.tau_max).cwiseMin(cfg_.tau_max);
        f_prev_ = out.fc;
        tau_prev_ = out.tau;
      }
    } catch (const Error&) {
      out.fault = true;
      out.status = QpStatus::Infeasible;
      solver_.reset();
    }
    if (out.fault) out.tau = tau_prev_;
    out.tick_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

 private:
  RobotModel model_;
  WbcConfig cfg_;
  ControllerKind kind_;
  std::optional<Polyhedron> poly_;
  Mat2 range_;
  QpSolver solver_;
  Vec4 f_prev_ = Vec4::Zero();
  Vec4 tau_prev_ = Vec4::Zero();
  AssembledProblem last_;
  bool started_ = false;
};

// --- diagnostics log ------------------------------------------------------------------

inline void write_tick_header(std::ostream& os) {
  os << "t";
  for (int i = 0; i < kNq; ++i) os << ",q" << i;
  for (int i = 0; i < kNq; ++i) os << ",qd" << i;
  for (int i = 0; i < kNumActuated; ++i) os << ",tau" << i;
  for (int i = 0; i < kNumContact; ++i) os << ",fc" << i;
  for (int i = 0; i < kNumSlack; ++i) os << ",eps" << i;
  os << ",iterations,solve_time,status,fault\n";
}

inline void write_tick_row(std::ostream& os, const GeneralizedState& s, const TickResult& r) {
  os << s.t;
  for (int i = 0; i < kNq; ++i) os << ',' << s.q(i);
  for (int i = 0; i < kNq; ++i) os << ',' << s.qd(i);
  for (int i = 0; i < kNumActuated; ++i) os << ',' << r.tau(i);
  for (int i = 0; i < kNumContact; ++i) os << ',' << r.fc(i);
  for (int i = 0; i < kNumSlack; ++i) os << ',' << r.eps(i);
  os << ',' << r.iterations << ',' << r.solve_time << ',' << to_string(r.status) << ',' << (r.fault ? 1 : 0) << '\n';
}

}  // namespace mftwbc

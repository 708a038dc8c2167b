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

#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>

#include "mftwbc/planner.hpp"
#include "mftwbc/sim.hpp"
#include "mftwbc/wsmap.hpp"

namespace mftwbc {

enum class Verdict { Recovered, Fell, Diverged };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Recovered: return "Recovered";
    case Verdict::Fell: return "Fell";
    case Verdict::Diverged: return "Diverged";
  }
  return "Unknown";
}

inline Verdict verdict_from_string(std::string_view s) {
  if (s == "Recovered") return Verdict::Recovered;
  if (s == "Fell") return Verdict::Fell;
  if (s == "Diverged") return Verdict::Diverged;
  throw Error(ErrorCode::BadConfig, "unknown verdict " + std::string(s));
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// --- experiment description --------------------------------------------------------

struct RecoveryCriterion {
  double post_push = 3.0;      // s of stepping required after the push
  double height_band = 0.3;    // |z - z_ref| <= band * z_ref
  double fall_fraction = 0.5;  // z < fraction * z_ref is a fall
  int min_touchdowns = 4;      // during post_push

  void validate() const {
    if (!(post_push > 0.0)) throw Error(ErrorCode::BadConfig, "post_push must be positive");
    if (!(height_band > 0.0) || !(fall_fraction > 0.0 && fall_fraction < 1.0))
      throw Error(ErrorCode::BadConfig, "bad height band or fall fraction");
    if (min_touchdowns < 0) throw Error(ErrorCode::BadConfig, "min_touchdowns must be non-negative");
  }
};

struct SweepGrid {
  std::vector<double> heights{0.38, 0.40, 0.42, 0.44, 0.46};
  double impulse_start = 3.0;
  double impulse_step = 0.1;
  double impulse_max = 30.0;
  double speed = 0.0;  // stepping in place
  RecoveryCriterion recovery;

  double impulse(int k) const { return std::round((impulse_start + k * impulse_step) * 1e9) / 1e9; }

  void validate() const {
    if (heights.empty()) throw Error(ErrorCode::BadConfig, "sweep needs at least one height");
    if (!(impulse_step > 0.0)) throw Error(ErrorCode::BadConfig, "impulse step must be positive");
    if (!(impulse_start >= 0.0) || !(impulse_max >= impulse_start))
      throw Error(ErrorCode::BadConfig, "impulse range out of order");
    recovery.validate();
  }
};

struct Scenario {
  double duration = 10.0;     // walk runs
  double stand_time = 1.0;    // both feet down before the first lift-off
  bool walk = true;
  int push_liftoff = 7;       // sweeps push at this lift-off (1 = the first)
  double measure_from = 3.0;  // walk summary window start
  std::vector<PushEvent> pushes;

  void validate() const {
    if (!(duration > 0.0) || !(stand_time >= 0.0)) throw Error(ErrorCode::BadConfig, "bad scenario timing");
    if (push_liftoff < 1) throw Error(ErrorCode::BadConfig, "push_liftoff counts from 1");
    if (!(measure_from >= 0.0) || measure_from >= duration)
      throw Error(ErrorCode::BadConfig, "measure_from must lie inside the run");
    for (const auto& p : pushes) p.validate();
  }
};

struct WsmapSettings {
  double resolution = 0.01;
  double lti_min = 0.7;
  int max_faces = 6;
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::string model_file;       // empty: built-in reference model
  std::string polyhedron_file;  // empty: built from the model at load
  WsmapSettings wsmap;
  std::vector<ControllerKind> controllers{ControllerKind::Mft, ControllerKind::Sa};
  CommandProfile commands;
  Scenario scenario;
  SweepGrid sweep;
  WbcConfig wbc;
  bool tau_from_model = true;  // wbc.tau_max follows the actuator rating unless given
  PlannerConfig planner;
  SimConfig sim;
  std::string output_dir = "runs";
  unsigned workers = 0;  // 0: hardware concurrency

  void validate() const {
    if (controllers.empty()) throw Error(ErrorCode::BadConfig, "no controllers selected");
    if (commands.points.empty()) throw Error(ErrorCode::BadConfig, "empty command profile");
    for (const auto& [t, c] : commands.points)
      if (!(c.height > 0.0) || !std::isfinite(c.speed)) throw Error(ErrorCode::BadConfig, "bad command");
    if (!(wsmap.resolution > 0.0) || wsmap.max_faces < 3) throw Error(ErrorCode::BadConfig, "bad workspace map settings");
    scenario.validate();
    sweep.validate();
    wbc.validate();
    planner.validate();
    sim.validate();
  }
};

namespace detail {

inline nlohmann::json push_to_json(const PushEvent& p) {
  return {{"trigger", p.trigger == PushEvent::Trigger::Time ? "time" : "liftoff"},
          {"time", p.time},
          {"impulse", p.impulse},
          {"duration", p.duration}};
}

inline PushEvent push_from_json(const nlohmann::json& j) {
  PushEvent p;
  const std::string trig = j.value("trigger", std::string("liftoff"));
  if (trig == "time") p.trigger = PushEvent::Trigger::Time;
  else if (trig == "liftoff") p.trigger = PushEvent::Trigger::LiftOff;
  else throw Error(ErrorCode::BadConfig, "push trigger must be time or liftoff");
  p.time = j.value("time", p.time);
  p.impulse = j.value("impulse", p.impulse);
  p.duration = j.value("duration", p.duration);
  return p;
}

}  // namespace detail

inline nlohmann::json spec_to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["model_file"] = s.model_file;
  j["polyhedron_file"] = s.polyhedron_file;
  j["wsmap"] = {{"resolution", s.wsmap.resolution}, {"lti_min", s.wsmap.lti_min}, {"max_faces", s.wsmap.max_faces}};
  j["controllers"] = nlohmann::json::array();
  for (auto k : s.controllers) j["controllers"].push_back(std::string(to_string(k)));
  j["commands"] = nlohmann::json::array();
  for (const auto& [t, c] : s.commands.points) j["commands"].push_back({{"t", t}, {"height", c.height}, {"speed", c.speed}});
  const Scenario& sc = s.scenario;
  j["scenario"] = {{"duration", sc.duration},         {"stand_time", sc.stand_time},
                   {"walk", sc.walk},                 {"push_liftoff", sc.push_liftoff},
                   {"measure_from", sc.measure_from}, {"pushes", nlohmann::json::array()}};
  for (const auto& p : sc.pushes) j["scenario"]["pushes"].push_back(detail::push_to_json(p));
  const SweepGrid& g = s.sweep;
  j["sweep"] = {{"heights", g.heights},
                {"impulse_start", g.impulse_start},
                {"impulse_step", g.impulse_step},
                {"impulse_max", g.impulse_max},
                {"speed", g.speed},
                {"recovery",
                 {{"post_push", g.recovery.post_push},
                  {"height_band", g.recovery.height_band},
                  {"fall_fraction", g.recovery.fall_fraction},
                  {"min_touchdowns", g.recovery.min_touchdowns}}}};
  j["wbc"] = wbc_config_to_json(s.wbc);
  if (s.tau_from_model) j["wbc"].erase("tau_max");
  j["planner"] = planner_config_to_json(s.planner);
  j["sim"] = sim_config_to_json(s.sim);
  j["output_dir"] = s.output_dir;
  j["workers"] = s.workers;
  return j;
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  try {
    if (!j.is_object()) throw Error(ErrorCode::BadConfig, "experiment config must be an object");
    s.name = j.value("name", s.name);
    s.model_file = j.value("model_file", s.model_file);
    s.polyhedron_file = j.value("polyhedron_file", s.polyhedron_file);
    if (j.contains("wsmap")) {
      const auto& w = j.at("wsmap");
      s.wsmap.resolution = w.value("resolution", s.wsmap.resolution);
      s.wsmap.lti_min = w.value("lti_min", s.wsmap.lti_min);
      s.wsmap.max_faces = w.value("max_faces", s.wsmap.max_faces);
    }
    if (j.contains("controllers")) {
      s.controllers.clear();
      for (const auto& k : j.at("controllers")) s.controllers.push_back(controller_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("commands")) {
      s.commands.points.clear();
      double last = -kInf;
      for (const auto& c : j.at("commands")) {
        const double t = c.value("t", 0.0);
        if (t < last) throw Error(ErrorCode::BadConfig, "command times must be ordered");
        last = t;
        s.commands.points.push_back({t, Command{c.value("height", 0.40), c.value("speed", 0.0)}});
      }
    }
    if (j.contains("scenario")) {
      const auto& c = j.at("scenario");
      Scenario& sc = s.scenario;
      sc.duration = c.value("duration", sc.duration);
      sc.stand_time = c.value("stand_time", sc.stand_time);
      sc.walk = c.value("walk", sc.walk);
      sc.push_liftoff = c.value("push_liftoff", sc.push_liftoff);
      sc.measure_from = c.value("measure_from", sc.measure_from);
      if (c.contains("pushes"))
        for (const auto& p : c.at("pushes")) sc.pushes.push_back(detail::push_from_json(p));
    }
    if (j.contains("sweep")) {
      const auto& c = j.at("sweep");
      SweepGrid& g = s.sweep;
      if (c.contains("heights")) g.heights = c.at("heights").get<std::vector<double>>();
      g.impulse_start = c.value("impulse_start", g.impulse_start);
      g.impulse_step = c.value("impulse_step", g.impulse_step);
      g.impulse_max = c.value("impulse_max", g.impulse_max);
      g.speed = c.value("speed", g.speed);
      if (c.contains("recovery")) {
        const auto& r = c.at("recovery");
        g.recovery.post_push = r.value("post_push", g.recovery.post_push);
        g.recovery.height_band = r.value("height_band", g.recovery.height_band);
        g.recovery.fall_fraction = r.value("fall_fraction", g.recovery.fall_fraction);
        g.recovery.min_touchdowns = r.value("min_touchdowns", g.recovery.min_touchdowns);
      }
    }
    if (j.contains("wbc")) {
      s.wbc = wbc_config_from_json(j.at("wbc"));
      s.tau_from_model = !j.at("wbc").contains("tau_max");
    }
    if (j.contains("planner")) s.planner = planner_config_from_json(j.at("planner"));
    if (j.contains("sim")) s.sim = sim_config_from_json(j.at("sim"));
    s.output_dir = j.value("output_dir", s.output_dir);
    s.workers = j.value("workers", s.workers);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  s.validate();
  return s;
}

// Relative model and polyhedron paths resolve against the config's folder.
inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, path + ": " + e.what());
  }
  ExperimentSpec s = spec_from_json(j);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (std::string* f : {&s.model_file, &s.polyhedron_file})
    if (!f->empty() && std::filesystem::path(*f).is_relative()) *f = (base / *f).lexically_normal().string();
  return s;
}

// --- shared, read-only inputs ----------------------------------------------------------

struct Resources {
  RobotModel model;
  PolyhedronFile poly;
  Mat2 passive_range = Mat2::Zero();
};

inline bool standing_feasible(const RobotModel& model, double height) {
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const LegIkResult ik = try_leg_inverse_kinematics(model, leg, Vec2(0.0, -height));
    if (!ik.ok) return false;
  }
  return true;
}

// Loads the model and polyhedron, fills in model-derived settings and checks
// the commanded heights.
inline Resources load_resources(ExperimentSpec& spec) {
  Resources r;
  r.model = spec.model_file.empty() ? RobotModel::reference() : load_model(spec.model_file);
  if (spec.tau_from_model) spec.wbc.tau_max = r.model.actuator.torque_max;
  spec.tau_from_model = false;
  const MftField field = grid_workspace(r.model, 0, spec.wsmap.resolution);
  r.passive_range = passive_joint_range(field);
  if (spec.polyhedron_file.empty())
    r.poly = build_workspace_map(r.model, spec.wsmap.resolution, default_bounds(r.model, spec.wsmap.lti_min),
                                 spec.wsmap.max_faces)
                 .file;
  else
    r.poly = load_polyhedron(spec.polyhedron_file, r.model.hash());
  std::vector<double> heights = spec.sweep.heights;
  for (const auto& [t, c] : spec.commands.points) heights.push_back(c.height);
  for (double h : heights)
    if (!standing_feasible(r.model, h))
      throw Error(ErrorCode::BadConfig, "height " + std::to_string(h) + " is outside the leg's reach");
  return r;
}

// --- closed loop ---------------------------------------------------------------------------

struct Accumulator {
  double sum = 0.0;
  double max = 0.0;
  long n = 0;

  void add(double v) {
    sum += v;
    max = n == 0 ? v : std::max(max, v);
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
};

inline nlohmann::json accumulator_json(const Accumulator& a) { return {{"mean", a.mean()}, {"max", a.max}, {"n", a.n}}; }

struct LoopStats {
  long ticks = 0;
  long faults = 0;
  Accumulator tick_time, solve_time, iterations;
  Accumulator height_error, pitch_error, swing_error;
  Accumulator eps, kkt, closure;
};

// Simulator, controller and gait wired together at the controller rate.
// Copyable, so a run can be forked at any tick.
class ClosedLoop {
 public:
  ClosedLoop(const Resources& res, const ExperimentSpec& spec, ControllerKind kind, CommandProfile commands)
      : sim_(res.model, spec.sim),
        ctl_(res.model, spec.wbc, kind, res.poly.poly, res.passive_range),
        gait_(spec.planner, res.model.gravity),
        wbc_(spec.wbc),
        commands_(std::move(commands)),
        stand_time_(spec.scenario.stand_time),
        walk_(spec.scenario.walk) {
    const double h = commands_.at(0.0).height;
    GeneralizedState s0;
    s0.q = configuration_from_feet(res.model, Vec3(0.0, h, 0.0), {Vec2(0.0, -h), Vec2(0.0, -h)});
    sim_.reset(s0);
    ctl_.reset(s0);
    gait_.stand({Vec2(0.0, 0.0), Vec2(0.0, 0.0)});
  }

  // Planner and controller for the current tick; the torque is held until
  // the next call. Returns the lift-off, if one happened on this tick.
  GaitEvent plan_and_control() {
    const RobotModel& m = sim_.model();
    const SimEval& e = sim_.evaluate();
    GeneralizedState st = sim_.state().robot;
    const double t = st.t;
    const Command cmd = commands_.at(t);
    const DynamicsTerms terms = compute_tree_terms(m, st.q, st.qd);
    const CenterOfMass com = center_of_mass(m, terms.kin, st.q, st.qd);

    PlannerInput in;
    in.t = t;
    for (int l = 0; l < kNumLegs; ++l) {
      in.foot_p[l] = e.foot_p[l];
      in.foot_v[l] = e.foot_v[l];
      in.normal_force[l] = e.contact.f(2 * l + 1);
    }
    in.com = {com.p.x(), com.v.x()};
    if (!gait_.walking() && gait_.steps() == 0) gait_.stand(in.foot_p);
    const int support = gait_.swing_leg() >= 0 ? 1 - gait_.swing_leg() : 0;
    in.com_height = com.p.y() - gait_.anchors()[support].y();

    GaitEvent ev = GaitEvent::None;
    if (walk_ && !gait_.walking() && t >= stand_time_ - 1e-9) {
      gait_.start_walking(0, t, in, cmd);
      ev = GaitEvent::LiftOff;
    } else if (gait_.update(in, cmd) == GaitEvent::TouchDown) {
      ev = GaitEvent::LiftOff;  // of the other foot
    }
    if (ev == GaitEvent::LiftOff) ++liftoffs_;

    tasks_ = TaskSet{};
    gait_.fill_tasks(t, cmd, wbc_, tasks_);
    st.contact = gait_.phase();
    ctl_.fill_estimates(terms, tasks_);
    last_ = ctl_.tick(st, tasks_);
    sim_.set_torque(last_.tau);
    record(st, cmd, e);
    return ev;
  }

  // Physics up to the next controller tick. Throws NumericalBlowup.
  void advance() {
    for (int k = 0; k < sim_.config().control_every; ++k) sim_.step();
  }

  double time() const { return sim_.state().robot.t; }
  const GeneralizedState& robot() const { return sim_.state().robot; }
  Command command() const { return commands_.at(time()); }
  int liftoffs() const { return liftoffs_; }
  Simulator& sim() { return sim_; }
  const Gait& gait() const { return gait_; }
  const WbcController& controller() const { return ctl_; }
  const TickResult& last_tick() const { return last_; }
  const TaskSet& last_tasks() const { return tasks_; }
  const LoopStats& stats() const { return stats_; }
  void clear_stats() { stats_ = {}; }

 private:
  void record(const GeneralizedState& st, const Command& cmd, const SimEval& e) {
    LoopStats& s = stats_;
    ++s.ticks;
    if (last_.fault) ++s.faults;
    s.tick_time.add(last_.tick_time);
    s.solve_time.add(last_.solve_time);
    s.iterations.add(last_.iterations);
    s.height_error.add(std::abs(cmd.height - st.q(1)));
    s.pitch_error.add(std::abs(st.q(2)));
    const int sw = gait_.swing_leg();
    if (sw >= 0) s.swing_error.add((tasks_.foot[sw].ref - tasks_.foot[sw].est).norm());
    s.eps.add(last_.eps.cwiseAbs().maxCoeff());
    s.kkt.add(last_.kkt);
    s.closure.add(e.phi.cwiseAbs().maxCoeff());
  }

  Simulator sim_;
  WbcController ctl_;
  Gait gait_;
  WbcConfig wbc_;
  CommandProfile commands_;
  double stand_time_;
  bool walk_;
  int liftoffs_ = 0;
  TaskSet tasks_;
  TickResult last_;
  LoopStats stats_;
};

// --- walking ----------------------------------------------------------------------------------

struct WalkLogs {
  std::ostream* ticks = nullptr;       // controller stream, one row per tick
  std::ostream* trajectory = nullptr;  // simulator state at the controller rate
};

struct WalkSummary {
  ControllerKind kind = ControllerKind::Mft;
  Verdict verdict = Verdict::Recovered;
  std::string reason;
  double duration = 0.0;
  int steps = 0;
  double mean_abs_speed = 0.0;  // over the measurement window
  double average_speed = 0.0;   // displacement / time over the window
  LoopStats stats;
};

inline nlohmann::json walk_summary_json(const WalkSummary& w, bool with_timing = true) {
  const LoopStats& s = w.stats;
  nlohmann::json j = {{"controller", std::string(to_string(w.kind))},
                      {"verdict", std::string(to_string(w.verdict))},
                      {"reason", w.reason},
                      {"duration", w.duration},
                      {"steps", w.steps},
                      {"mean_abs_speed", w.mean_abs_speed},
                      {"average_speed", w.average_speed},
                      {"ticks", s.ticks},
                      {"faults", s.faults},
                      {"iterations", accumulator_json(s.iterations)},
                      {"height_error", accumulator_json(s.height_error)},
                      {"pitch_error", accumulator_json(s.pitch_error)},
                      {"swing_error", accumulator_json(s.swing_error)},
                      {"eps", accumulator_json(s.eps)},
                      {"kkt", accumulator_json(s.kkt)},
                      {"closure", accumulator_json(s.closure)}};
  if (with_timing) {
    j["tick_time"] = accumulator_json(s.tick_time);
    j["solve_time"] = accumulator_json(s.solve_time);
  }
  return j;
}

inline WalkSummary run_walk(const ExperimentSpec& spec, const Resources& res, ControllerKind kind, WalkLogs logs = {}) {
  ClosedLoop loop(res, spec, kind, spec.commands);
  WalkSummary out;
  out.kind = kind;
  std::vector<bool> fired(spec.scenario.pushes.size(), false);
  const double window = spec.scenario.measure_from;
  double x_start = 0.0, t_start = -1.0, abs_sum = 0.0;
  long abs_n = 0;
  if (logs.ticks) write_tick_header(*logs.ticks);
  if (logs.trajectory) write_trajectory_header(*logs.trajectory);
  const double end = spec.scenario.duration - 1e-9;
  while (loop.time() < end) {
    const GaitEvent ev = loop.plan_and_control();
    const double t = loop.time();
    for (size_t i = 0; i < fired.size(); ++i) {
      const PushEvent& p = spec.scenario.pushes[i];
      if (fired[i] || t < p.time - 1e-9) continue;
      if (p.trigger == PushEvent::Trigger::Time || ev == GaitEvent::LiftOff) {
        loop.sim().schedule_push(p);
        fired[i] = true;
      }
    }
    const GeneralizedState& st = loop.robot();
    if (logs.ticks) write_tick_row(*logs.ticks, st, loop.last_tick());
    if (logs.trajectory) write_trajectory_row(*logs.trajectory, loop.sim().state(), loop.sim().evaluate());
    if (t >= window - 1e-9) {
      if (t_start < 0.0) {
        t_start = t;
        x_start = st.q(0);
      }
      abs_sum += std::abs(st.qd(0));
      ++abs_n;
    }
    try {
      loop.advance();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericalBlowup) throw;
      out.verdict = Verdict::Diverged;
      out.reason = e.what();
      break;
    }
    const double ref = loop.command().height;
    if (loop.robot().q(1) < spec.sweep.recovery.fall_fraction * ref) {
      out.verdict = Verdict::Fell;
      out.reason = "base below fall height";
      break;
    }
  }
  out.duration = loop.time();
  out.steps = loop.gait().steps();
  out.stats = loop.stats();
  if (abs_n > 0) out.mean_abs_speed = abs_sum / abs_n;
  if (t_start >= 0.0 && loop.time() > t_start) out.average_speed = (loop.robot().q(0) - x_start) / (loop.time() - t_start);
  return out;
}

// --- push sweep -----------------------------------------------------------------------------

struct RunRecord {
  double impulse = 0.0;
  Verdict verdict = Verdict::Recovered;
  std::string reason;
  long ticks = 0;
  double wall_time = 0.0;
  double tick_mean = 0.0;
  double tick_max = 0.0;
  std::string config_hash;
};

struct SweepEntry {
  double height = 0.0;
  ControllerKind kind = ControllerKind::Mft;
  std::optional<double> i_max;
  bool censored = false;  // every impulse up to impulse_max recovered
  std::string note;
  std::vector<RunRecord> runs;
  double wall_time = 0.0;
};

struct SweepResult {
  std::string name;
  std::string spec_hash;
  std::vector<SweepEntry> entries;
  double wall_time = 0.0;
  unsigned workers = 1;

  const SweepEntry* find(double height, ControllerKind kind) const {
    for (const auto& e : entries)
      if (e.kind == kind && std::abs(e.height - height) < 1e-9) return &e;
    return nullptr;
  }
  std::vector<double> heights() const {
    std::vector<double> h;
    for (const auto& e : entries)
      if (std::none_of(h.begin(), h.end(), [&](double v) { return std::abs(v - e.height) < 1e-9; })) h.push_back(e.height);
    std::sort(h.begin(), h.end());
    return h;
  }
};

// Everything that determines one sweep run. The controller is the only
// field allowed to differ between the two controllers' runs.
inline nlohmann::json run_config_json(const ExperimentSpec& spec, const Resources& res, double height, double impulse,
                                      ControllerKind kind) {
  nlohmann::json s = spec_to_json(spec);
  nlohmann::json j = {{"model", hex64(res.model.hash())},
                      {"polyhedron", hex64(fnv1a(polyhedron_to_text(res.poly)))},
                      {"passive_range", {res.passive_range(0, 0), res.passive_range(0, 1), res.passive_range(1, 0),
                                         res.passive_range(1, 1)}},
                      {"wbc", s["wbc"]},
                      {"planner", s["planner"]},
                      {"sim", s["sim"]},
                      {"stand_time", spec.scenario.stand_time},
                      {"push_liftoff", spec.scenario.push_liftoff},
                      {"recovery", s["sweep"]["recovery"]},
                      {"speed", spec.sweep.speed},
                      {"height", height},
                      {"impulse", impulse},
                      {"controller", std::string(to_string(kind))}};
  return j;
}

inline std::string run_config_hash(nlohmann::json run_config) {
  run_config.erase("controller");
  return hex64(fnv1a(run_config.dump()));
}

inline CommandProfile sweep_commands(const ExperimentSpec& spec, double height) {
  CommandProfile c;
  c.points = {{0.0, Command{height, spec.sweep.speed}}};
  return c;
}

// Walks the loop up to the tick at which the configured lift-off happens.
// Returns false if the robot did not get there standing.
inline bool run_to_push_liftoff(ClosedLoop& loop, const ExperimentSpec& spec, std::string& why) {
  const double ref = loop.command().height;
  const double limit = spec.scenario.stand_time + 10.0 * spec.scenario.push_liftoff * spec.planner.step_duration + 5.0;
  try {
    while (loop.time() < limit) {
      if (loop.plan_and_control() == GaitEvent::LiftOff && loop.liftoffs() == spec.scenario.push_liftoff) return true;
      loop.advance();
      if (loop.robot().q(1) < spec.sweep.recovery.fall_fraction * ref) {
        why = "fell before the push";
        return false;
      }
    }
    why = "no lift-off before the push deadline";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NumericalBlowup) throw;
    why = e.what();
  }
  return false;
}

// `loop` sits at a lift-off tick with its torque already chosen: push now
// and judge the next post_push seconds.
inline RunRecord judge_push(ClosedLoop loop, const ExperimentSpec& spec, double impulse) {
  const auto w0 = std::chrono::steady_clock::now();
  const RecoveryCriterion& c = spec.sweep.recovery;
  RunRecord r;
  r.impulse = impulse;
  PushEvent p;
  p.impulse = impulse;
  loop.sim().schedule_push(p);
  loop.clear_stats();
  const double ref = loop.command().height;
  const double t0 = loop.time();
  const int steps0 = loop.gait().steps();
  try {
    loop.advance();
    while (loop.time() < t0 + c.post_push - 1e-9) {
      const double z = loop.robot().q(1);
      if (z < c.fall_fraction * ref) {
        r.verdict = Verdict::Fell;
        r.reason = "base below fall height";
        break;
      }
      if (std::abs(z - ref) > c.height_band * ref) {
        r.verdict = Verdict::Fell;
        r.reason = "base left the height band";
        break;
      }
      loop.plan_and_control();
      loop.advance();
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NumericalBlowup) throw;
    r.verdict = Verdict::Diverged;
    r.reason = e.what();
  }
  if (r.verdict == Verdict::Recovered && loop.gait().steps() - steps0 < c.min_touchdowns) {
    r.verdict = Verdict::Fell;
    r.reason = "stopped stepping";
  }
  r.ticks = loop.stats().ticks;
  r.tick_mean = loop.stats().tick_time.mean();
  r.tick_max = loop.stats().tick_time.max;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
  return r;
}

// One (height, controller) chain: impulses from the start upwards until the
// first failure.
inline SweepEntry sweep_chain(const ExperimentSpec& spec, const Resources& res, double height, ControllerKind kind,
                              const std::function<void(const SweepEntry&, const RunRecord&)>& progress = {}) {
  const auto w0 = std::chrono::steady_clock::now();
  SweepEntry e;
  e.height = height;
  e.kind = kind;
  ClosedLoop loop(res, spec, kind, sweep_commands(spec, height));
  if (run_to_push_liftoff(loop, spec, e.note)) {
    for (int k = 0;; ++k) {
      const double impulse = spec.sweep.impulse(k);
      if (impulse > spec.sweep.impulse_max + 1e-9) {
        e.censored = true;
        break;
      }
      RunRecord r = judge_push(loop, spec, impulse);
      r.config_hash = run_config_hash(run_config_json(spec, res, height, impulse, kind));
      e.runs.push_back(r);
      if (progress) progress(e, r);
      if (r.verdict != Verdict::Recovered) break;
      e.i_max = impulse;
    }
  }
  e.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
  return e;
}

inline SweepResult run_push_sweep(const ExperimentSpec& spec, const Resources& res,
                                  const std::function<void(const SweepEntry&, const RunRecord&)>& progress = {}) {
  const auto w0 = std::chrono::steady_clock::now();
  SweepResult out;
  out.name = spec.name;
  out.spec_hash = hex64(fnv1a(spec_to_json(spec).dump()));
  std::vector<std::pair<double, ControllerKind>> jobs;
  for (double h : spec.sweep.heights)
    for (ControllerKind k : spec.controllers) jobs.push_back({h, k});
  out.entries.resize(jobs.size());
  unsigned workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  out.workers = workers;

  std::atomic<size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (size_t i; (i = next++) < jobs.size();) {
      try {
        out.entries[i] = sweep_chain(spec, res, jobs[i].first, jobs[i].second,
                                     [&](const SweepEntry& e, const RunRecord& r) {
                                       if (!progress) return;
                                       std::lock_guard<std::mutex> lock(mu);
                                       progress(e, r);
                                     });
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
  return out;
}

// --- results file and report ------------------------------------------------------------------

inline constexpr int kSweepSchemaVersion = 1;

inline nlohmann::json sweep_to_json(const SweepResult& r) {
  nlohmann::json j = {{"schema_version", kSweepSchemaVersion}, {"name", r.name},       {"spec_hash", r.spec_hash},
                      {"wall_time", r.wall_time},              {"workers", r.workers}, {"entries", nlohmann::json::array()}};
  for (const auto& e : r.entries) {
    nlohmann::json je = {{"height", e.height},
                         {"controller", std::string(to_string(e.kind))},
                         {"i_max", e.i_max ? nlohmann::json(*e.i_max) : nlohmann::json(nullptr)},
                         {"censored", e.censored},
                         {"note", e.note},
                         {"wall_time", e.wall_time},
                         {"runs", nlohmann::json::array()}};
    for (const auto& run : e.runs)
      je["runs"].push_back({{"impulse", run.impulse},
                            {"verdict", std::string(to_string(run.verdict))},
                            {"reason", run.reason},
                            {"ticks", run.ticks},
                            {"wall_time", run.wall_time},
                            {"tick_mean", run.tick_mean},
                            {"tick_max", run.tick_max},
                            {"config_hash", run.config_hash}});
    j["entries"].push_back(je);
  }
  return j;
}

inline SweepResult sweep_from_json(const nlohmann::json& j) {
  SweepResult r;
  try {
    if (j.value("schema_version", 0) != kSweepSchemaVersion)
      throw Error(ErrorCode::SchemaMismatch, "unsupported sweep result schema");
    r.name = j.value("name", std::string());
    r.spec_hash = j.value("spec_hash", std::string());
    r.wall_time = j.value("wall_time", 0.0);
    r.workers = j.value("workers", 1u);
    for (const auto& je : j.at("entries")) {
      SweepEntry e;
      e.height = je.at("height").get<double>();
      e.kind = controller_kind_from_string(je.at("controller").get<std::string>());
      if (!je.at("i_max").is_null()) e.i_max = je.at("i_max").get<double>();
      e.censored = je.value("censored", false);
      e.note = je.value("note", std::string());
      e.wall_time = je.value("wall_time", 0.0);
      for (const auto& jr : je.at("runs")) {
        RunRecord run;
        run.impulse = jr.at("impulse").get<double>();
        run.verdict = verdict_from_string(jr.at("verdict").get<std::string>());
        run.reason = jr.value("reason", std::string());
        run.ticks = jr.value("ticks", 0L);
        run.wall_time = jr.value("wall_time", 0.0);
        run.tick_mean = jr.value("tick_mean", 0.0);
        run.tick_max = jr.value("tick_max", 0.0);
        run.config_hash = jr.value("config_hash", std::string());
        e.runs.push_back(run);
      }
      r.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  return r;
}

inline void save_sweep(const SweepResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write " + path);
  out << sweep_to_json(r).dump(2) << '\n';
}

inline SweepResult load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, path + ": " + e.what());
  }
  return sweep_from_json(j);
}

inline std::optional<double> percentage_increase(std::optional<double> sa, std::optional<double> mft) {
  if (!sa || !mft || *sa <= 0.0) return std::nullopt;
  return 100.0 * (*mft - *sa) / *sa;
}

struct ReportRow {
  double height = 0.0;
  std::optional<double> sa, mft, increase;
};

inline std::vector<ReportRow> report_rows(const SweepResult& r) {
  std::vector<ReportRow> rows;
  for (double h : r.heights()) {
    ReportRow row;
    row.height = h;
    if (const SweepEntry* e = r.find(h, ControllerKind::Sa)) row.sa = e->i_max;
    if (const SweepEntry* e = r.find(h, ControllerKind::Mft)) row.mft = e->i_max;
    row.increase = percentage_increase(row.sa, row.mft);
    rows.push_back(row);
  }
  return rows;
}

inline bool has_data(const SweepResult& r) {
  return std::any_of(r.entries.begin(), r.entries.end(), [](const SweepEntry& e) { return !e.runs.empty(); });
}

namespace detail {

inline std::string cell(std::optional<double> v, const char* fmt) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

}  // namespace detail

// Heights across, SA / MFT / increase down.
inline std::string format_report(const SweepResult& r) {
  if (!has_data(r)) return "no data\n";
  const std::vector<ReportRow> rows = report_rows(r);
  std::ostringstream os;
  auto line = [&](const char* label, auto get) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-22s", label);
    os << buf;
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "%9s", get(row).c_str());
      os << buf;
    }
    os << '\n';
  };
  line("Height [m]", [](const ReportRow& x) { return detail::cell(x.height, "%.2f"); });
  line("SA-WBC  I_max [N s]", [](const ReportRow& x) { return detail::cell(x.sa, "%.1f"); });
  line("MFT-WBC I_max [N s]", [](const ReportRow& x) { return detail::cell(x.mft, "%.1f"); });
  line("Increase [%]", [](const ReportRow& x) { return detail::cell(x.increase, "%.1f"); });
  for (const auto& e : r.entries) {
    if (e.censored) os << "note: " << to_string(e.kind) << " at " << e.height << " m recovered up to the impulse cap\n";
    if (!e.note.empty()) os << "note: " << to_string(e.kind) << " at " << e.height << " m: " << e.note << '\n';
  }
  return os.str();
}

inline std::string report_csv(const SweepResult& r) {
  std::ostringstream os;
  os.precision(12);
  os << "height,sa_i_max,mft_i_max,increase_percent\n";
  auto opt = [&](std::optional<double> v) {
    if (v) os << *v;
  };
  for (const auto& row : report_rows(r)) {
    os << row.height << ',';
    opt(row.sa);
    os << ',';
    opt(row.mft);
    os << ',';
    opt(row.increase);
    os << '\n';
  }
  return os.str();
}

}  // namespace mftwbc

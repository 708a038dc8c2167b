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

// Acceptance suite. One line per criterion:
//   [PASS] / [FAIL] / [INFO] <n> <title>: <summary>
// followed by indented detail. Exit status is 1 if any criterion failed.
//
//   acceptance                 all criteria
//   acceptance 2 3 5           a subset
//   acceptance --sweep-out s.json --workers 4

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <random>
#include <sstream>

#include "mftwbc/harness.hpp"

using namespace mftwbc;

namespace {

enum class Mark { Pass, Fail, Info };

struct Outcome {
  Mark mark = Mark::Pass;
  std::string summary;
  std::vector<std::string> detail;
};

std::string fmt(const char* f, double a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

template <class A, class B>
double rel_err(const A& a, const B& b) {
  return (a - b).norm() / std::max({1.0, a.norm(), b.norm()});
}

const RobotModel& model() {
  static const RobotModel m = RobotModel::reference();
  return m;
}

const WorkspaceMap& workspace() {
  static const WorkspaceMap w = build_workspace_map(model(), 0.01, default_bounds(model(), 0.7));
  return w;
}

Vec2 reachable_foot(int leg, std::mt19937_64& rng, double margin = 0.02) {
  for (;;) {
    const Vec2 p(uniform(rng, -0.35, 0.35), uniform(rng, -0.54, -0.2));
    if (!try_leg_inverse_kinematics(model(), leg, p).ok) continue;
    bool ok = true;
    for (double dx : {-margin, margin})
      for (double dz : {-margin, margin}) ok = ok && try_leg_inverse_kinematics(model(), leg, p + Vec2(dx, dz)).ok;
    if (ok) return p;
  }
}

GeneralizedState consistent_state(std::mt19937_64& rng, double height_lo = 0.3, double height_hi = 0.6) {
  GeneralizedState s;
  const Vec3 base(uniform(rng, -0.5, 0.5), uniform(rng, height_lo, height_hi), uniform(rng, -0.4, 0.4));
  s.q = configuration_from_feet(model(), base, {reachable_foot(0, rng), reachable_foot(1, rng)});
  Vec3 br;
  Vec4 ar;
  for (int i = 0; i < 3; ++i) br(i) = uniform(rng, -1, 1);
  for (int i = 0; i < 4; ++i) ar(i) = uniform(rng, -2, 2);
  s.qd = consistent_velocity(model(), s.q, br, ar);
  return s;
}

// ---------------------------------------------------------------------------------------------
// 1. push sweep

Outcome push_sweep(unsigned workers, const std::string& sweep_out) {
  ExperimentSpec spec;
  spec.name = "acceptance";
  spec.workers = workers;
  const Resources res = load_resources(spec);
  const SweepResult r = run_push_sweep(spec, res);
  if (!sweep_out.empty()) save_sweep(r, sweep_out);

  Outcome o;
  const std::vector<ReportRow> rows = report_rows(r);
  auto row = [&](double h) -> const ReportRow* {
    for (const auto& x : rows)
      if (std::abs(x.height - h) < 1e-9) return &x;
    return nullptr;
  };
  bool a = !rows.empty();
  for (const auto& x : rows) a = a && x.sa && x.mft && *x.mft >= *x.sa;
  const ReportRow *r38 = row(0.38), *r42 = row(0.42), *r44 = row(0.44), *r46 = row(0.46);
  const bool b = r38 && r44 && r46 && r38->increase && r44->increase && r46->increase &&
                 *r44->increase > *r38->increase && *r46->increase > *r38->increase;
  const bool c = r42 && r44 && r46 && r42->sa && r44->sa && r46->sa && *r42->sa > *r44->sa && *r44->sa > *r46->sa;
  bool censored = false;
  for (const auto& e : r.entries) censored = censored || e.censored;

  o.mark = a && b && c && !censored ? Mark::Pass : Mark::Fail;
  o.summary = std::string("(a) MFT >= SA at every height ") + (a ? "yes" : "no") + ", (b) increase at 0.44/0.46 above 0.38 " +
              (b ? "yes" : "no") + ", (c) SA strictly decreasing 0.42..0.46 " + (c ? "yes" : "no");
  std::istringstream table(format_report(r));
  for (std::string line; std::getline(table, line);) o.detail.push_back(line);
  if (censored) o.detail.push_back("some chains reached the impulse cap without failing");
  o.detail.push_back(fmt("sweep wall time %.0f s", r.wall_time) + ", workers " + std::to_string(r.workers));
  return o;
}

// ---------------------------------------------------------------------------------------------
// 2. constraint transformation

Outcome constraint_oracle() {
  const Polyhedron& P = workspace().file.poly;
  std::mt19937_64 rng(20260101);
  const int trials = 100000;
  long mismatches = 0, rows = 0, active = 0;
  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    Vec4 qa, qda;
    VecQ qdd;
    for (int k = 0; k < 4; ++k) {
      qa(k) = uniform(rng, -2.5, 2.5);
      qda(k) = uniform(rng, -10, 10);
    }
    for (int k = 0; k < kNq; ++k) qdd(k) = uniform(rng, -500, 500);
    const double dt = uniform(rng, 1e-3, 0.1);
    const MftConstraint m = build_mft_constraint(P, qa, qda, dt);
    const Vec4 predicted = qa + qda * dt + 0.5 * dt * dt * actuated_positions(qdd);
    const VecX via_cd = m.C * qdd - m.d;
    const VecX direct = P.A * predicted - P.b;
    worst = std::max(worst, (via_cd - direct).lpNorm<Eigen::Infinity>());
    for (int r = 0; r < P.faces(); ++r) {
      ++rows;
      if (direct(r) <= 0) ++active;
      if (std::abs(direct(r)) > 1e-10 && (via_cd(r) <= 0) != (direct(r) <= 0)) ++mismatches;
    }
  }
  Outcome o;
  o.mark = mismatches == 0 ? Mark::Pass : Mark::Fail;
  o.summary = std::to_string(trials) + " samples, " + std::to_string(mismatches) + " membership mismatches";
  o.detail.push_back(std::to_string(rows) + " face rows, " + std::to_string(active) + " satisfied");
  o.detail.push_back(fmt("largest row difference %.2e", worst));
  return o;
}

// ---------------------------------------------------------------------------------------------
// 3. dynamics properties

Outcome dynamics_properties() {
  const RobotModel& m = model();
  std::mt19937_64 rng(7);
  double sym = 0, min_eig = kInf, idem = 0, jn = 0, roundtrip = 0, jac = 0;
  for (int i = 0; i < 200; ++i) {
    const GeneralizedState s = consistent_state(rng);
    const DynamicsTerms t = compute_terms(m, s.q, s.qd);
    sym = std::max(sym, (t.M - t.M.transpose()).norm() / t.M.norm());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<MatQ>(t.M).eigenvalues().minCoeff());
    idem = std::max(idem, (t.N * t.N - t.N).norm());
    jn = std::max(jn, (t.Jh * t.N).norm());

    Vec4 tau, fc;
    for (int j = 0; j < 4; ++j) tau(j) = uniform(rng, -30, 30);
    for (int j = 0; j < 4; ++j) fc(j) = uniform(rng, -100, 100);
    const auto fd = forward_dynamics_constrained(t, tau, fc);
    roundtrip = std::max(roundtrip, rel_err(inverse_dynamics_actuated(t, fd.qdd, fc), tau));

    // Foot and closure Jacobians against central differences.
    const double h = 1e-6;
    const TaskJacobians tj = task_jacobians(m, s.q, s.qd);
    Mat4Q fd_loop;
    std::array<Mat2Q, kNumLegs> fd_foot;
    for (int j = 0; j < kNq; ++j) {
      VecQ dq = VecQ::Zero();
      dq(j) = h;
      fd_loop.col(j) = (loop_constraints(m, s.q + dq, s.qd).phi - loop_constraints(m, s.q - dq, s.qd).phi) / (2 * h);
      const TaskJacobians p = task_jacobians(m, s.q + dq, s.qd), n = task_jacobians(m, s.q - dq, s.qd);
      for (int leg = 0; leg < kNumLegs; ++leg) fd_foot[leg].col(j) = (p.foot_position[leg] - n.foot_position[leg]) / (2 * h);
    }
    jac = std::max(jac, rel_err(loop_constraints(m, s.q, s.qd).J, fd_loop));
    for (int leg = 0; leg < kNumLegs; ++leg) jac = std::max(jac, rel_err(tj.foot[leg], fd_foot[leg]));
  }

  // Passive swing: no torque, no contact, one second in the air.
  double drift = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    GeneralizedState s;
    s.q = configuration_from_feet(m, Vec3(0.0, 10.0, uniform(rng, -0.2, 0.2)),
                                  {Vec2(uniform(rng, -0.05, 0.05), -0.40), Vec2(uniform(rng, -0.05, 0.05), -0.40)});
    Vec3 br(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    Vec4 ar;
    for (int i = 0; i < 4; ++i) ar(i) = uniform(rng, -2, 2);
    s.qd = consistent_velocity(m, s.q, br, ar);
    Simulator sim(m, SimConfig{});
    sim.reset(s);
    const double e0 = sim.energy();
    const int n = static_cast<int>(std::lround(1.0 / sim.config().dt));
    for (int i = 0; i < n; ++i) sim.step();
    drift = std::max(drift, std::abs(sim.energy() - e0) / 1.0);
  }

  Outcome o;
  const bool ok = sym < 1e-12 && min_eig > 0 && idem < 1e-10 && jn < 1e-10 && roundtrip < 1e-8 && jac < 1e-6 && drift < 1e-3;
  o.mark = ok ? Mark::Pass : Mark::Fail;
  o.summary = "200 random states, 3 passive swings";
  o.detail.push_back(fmt("M asymmetry %.1e", sym) + fmt(", smallest eigenvalue %.3e", min_eig));
  o.detail.push_back(fmt("|N N - N| %.1e", idem) + fmt(", |Jh N| %.1e", jn));
  o.detail.push_back(fmt("inverse o forward dynamics rel. error %.1e (limit 1e-8)", roundtrip));
  o.detail.push_back(fmt("Jacobian vs finite differences rel. error %.1e (limit 1e-6)", jac));
  o.detail.push_back(fmt("passive swing energy drift %.1e J/s (limit 1e-3)", drift));
  return o;
}

// ---------------------------------------------------------------------------------------------
// 4. QP solver

// Mehrotra predictor-corrector on min 1/2 x'Hx + g'x s.t. E x = e, G x <= h.
VecX interior_point(const MatX& H, const VecX& g, const MatX& E, const VecX& e, const MatX& G, const VecX& h, bool& converged) {
  const int n = static_cast<int>(g.size()), me = static_cast<int>(E.rows()), mi = static_cast<int>(G.rows());
  VecX x = VecX::Zero(n), y = VecX::Zero(me), s = VecX::Ones(mi), z = VecX::Ones(mi);
  converged = false;
  for (int it = 0; it < 300; ++it) {
    const VecX rd = H * x + g + E.transpose() * y + G.transpose() * z;
    const VecX rp = E * x - e;
    const VecX ri = G * x + s - h;
    const double mu = mi ? s.dot(z) / mi : 0.0;
    if (rd.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + g.lpNorm<Eigen::Infinity>()) &&
        (me == 0 || rp.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + e.lpNorm<Eigen::Infinity>())) &&
        (mi == 0 || ri.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + h.lpNorm<Eigen::Infinity>())) && mu < 1e-12) {
      converged = true;
      break;
    }
    const int N = n + me + 2 * mi;
    MatX K = MatX::Zero(N, N);
    K.block(0, 0, n, n) = H;
    K.block(0, n, n, me) = E.transpose();
    K.block(0, n + me, n, mi) = G.transpose();
    K.block(n, 0, me, n) = E;
    K.block(n + me, 0, mi, n) = G;
    K.block(n + me, n + me + mi, mi, mi).setIdentity();
    K.block(n + me + mi, n + me, mi, mi) = s.asDiagonal();
    K.block(n + me + mi, n + me + mi, mi, mi) = z.asDiagonal();
    const Eigen::PartialPivLU<MatX> lu(K);
    VecX dx, dy, ds, dz;
    auto direction = [&](const VecX& rc) {
      VecX rhs(N);
      rhs << -rd, -rp, -ri, -rc;
      const VecX d = lu.solve(rhs);
      dx = d.segment(0, n);
      dy = d.segment(n, me);
      dz = d.segment(n + me, mi);
      ds = d.segment(n + me + mi, mi);
    };
    auto max_step = [&](double frac) {
      double a = 1.0;
      for (int i = 0; i < mi; ++i) {
        if (ds(i) < 0) a = std::min(a, -frac * s(i) / ds(i));
        if (dz(i) < 0) a = std::min(a, -frac * z(i) / dz(i));
      }
      return a;
    };
    direction((s.array() * z.array()).matrix());
    if (mi > 0) {
      const double aff = max_step(1.0);
      const double mu_aff = (s + aff * ds).dot(z + aff * dz) / mi;
      const double sigma = std::max(0.01, std::pow(mu_aff / mu, 3));
      direction((s.array() * z.array() + ds.array() * dz.array() - sigma * mu).matrix());
    }
    const double a = max_step(0.995);
    x += a * dx;
    y += a * dy;
    s += a * ds;
    z += a * dz;
  }
  return x;
}

QpProblem random_qp(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const int n = std::uniform_int_distribution<int>(2, 30)(rng);
  const int me = std::uniform_int_distribution<int>(0, n / 3)(rng);
  const int mi = std::uniform_int_distribution<int>(0, 40 - n / 2)(rng);
  auto rnd = [&](int r, int c) {
    MatX m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
  };
  const MatX R = rnd(n, n);
  QpProblem p;
  p.H = R.transpose() * R + 0.1 * MatX::Identity(n, n);
  p.g = rnd(n, 1) * 5.0;
  const VecX xf = rnd(n, 1);
  p.Aeq = rnd(me, n);
  p.beq = p.Aeq * xf;
  p.Ain = rnd(mi, n);
  p.lower.resize(mi);
  p.upper.resize(mi);
  const VecX ax = p.Ain * xf;
  for (int i = 0; i < mi; ++i) {
    const double k = uniform(rng, 0, 1);
    p.lower(i) = k < 0.3 ? -kInf : ax(i) - uniform(rng, 0, 1);
    p.upper(i) = k > 0.7 ? kInf : ax(i) + uniform(rng, 0, 1);
  }
  if (uniform(rng, 0, 1) < 0.5) {
    p.xl = xf - VecX::Constant(n, 0.5 + uniform(rng, 0, 1));
    p.xu = xf + VecX::Constant(n, 0.5 + uniform(rng, 0, 1));
  }
  return p;
}

VecX reference_solve(const QpProblem& p, bool& converged) {
  const int n = p.n();
  std::vector<std::pair<VecX, double>> rows;
  for (int i = 0; i < p.Ain.rows(); ++i) {
    if (std::isfinite(p.upper(i))) rows.emplace_back(p.Ain.row(i).transpose(), p.upper(i));
    if (std::isfinite(p.lower(i))) rows.emplace_back(-p.Ain.row(i).transpose(), -p.lower(i));
  }
  for (int i = 0; i < p.xu.size(); ++i) {
    rows.emplace_back(VecX::Unit(n, i), p.xu(i));
    rows.emplace_back(-VecX::Unit(n, i), -p.xl(i));
  }
  MatX G(rows.size(), n);
  VecX h(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    G.row(k) = rows[k].first.transpose();
    h(k) = rows[k].second;
  }
  return interior_point(p.H, p.g, p.Aeq, p.beq, G, h, converged);
}

Outcome qp_oracle(const Resources& res) {
  std::mt19937_64 rng(4);
  double primal = 0.0, kkt = 0.0;
  int failed = 0, warm_worst = 0;
  for (int t = 0; t < 500; ++t) {
    const QpProblem p = random_qp(rng);
    bool converged = false;
    const VecX ref = reference_solve(p, converged);
    QpSolver s;
    const QpSolution a = s.solve(p);
    const QpSolution b = s.solve(p);
    if (a.status != QpStatus::Optimal || !converged) {
      ++failed;
      continue;
    }
    primal = std::max(primal, (a.x - ref).lpNorm<Eigen::Infinity>());
    kkt = std::max(kkt, kkt_residual(p, a));
    warm_worst = std::max(warm_worst, b.iterations);
  }

  // Every tick of a 10 s walk, both controllers.
  ExperimentSpec spec;
  spec.commands.points = {{0.0, Command{0.40, 0.0}}, {2.0, Command{0.40, 0.3}}};
  spec.scenario.duration = 10.0;
  spec.wbc.tau_max = res.model.actuator.torque_max;
  double walk_kkt = 0.0;
  long ticks = 0, faults = 0;
  for (ControllerKind k : {ControllerKind::Mft, ControllerKind::Sa}) {
    const WalkSummary w = run_walk(spec, res, k);
    walk_kkt = std::max(walk_kkt, w.stats.kkt.max);
    ticks += w.stats.ticks;
    faults += w.stats.faults;
  }

  Outcome o;
  const bool ok = failed == 0 && primal < 1e-6 && kkt < 1e-8 && walk_kkt < 1e-8 && faults == 0 && warm_worst <= 1;
  o.mark = ok ? Mark::Pass : Mark::Fail;
  o.summary = fmt("500 random QPs, worst primal error %.1e", primal) + fmt(", walking KKT max %.1e", walk_kkt);
  o.detail.push_back(std::to_string(failed) + " problems unsolved by either solver");
  o.detail.push_back(fmt("random problems KKT max %.1e", kkt));
  o.detail.push_back(std::to_string(ticks) + " walking ticks, " + std::to_string(faults) + " faults");
  o.detail.push_back("warm-started identical resolve: at most " + std::to_string(warm_worst) + " iteration(s)");
  return o;
}

// ---------------------------------------------------------------------------------------------
// 5. polyhedron conditions

Outcome polyhedron_audit() {
  const auto t0 = std::chrono::steady_clock::now();
  const WorkspaceMap w = build_workspace_map(model(), 0.01, default_bounds(model(), 0.7));
  const double r_min = w.file.r_min;
  Outcome o;
  bool ok = w.file.poly.A.rows() == 12 && w.file.poly.A.cols() == 4;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const MftField& f = w.fields[leg];
    const PolygonFit& fit = w.fits[leg];
    // Re-solve each cell independently of the stored field.
    std::vector<Vec2> boundary = joint_polygon_boundary_image(model(), leg, fit.vertices, 5000);
    int inside_bad = 0, outside = 0;
    double worst = 0.0;
    for (int j = 0; j < f.nz; ++j)
      for (int i = 0; i < f.nx; ++i) {
        const auto ik = try_leg_inverse_kinematics(model(), leg, f.point(i, j));
        if (!ik.ok) continue;
        const LtiResult l = lti(model(), leg, ik.config);
        const bool pref = l.gamma_LTI >= 0.7 && raci(model(), leg, ik.config, kDefaultFootAcceleration) <= w.file.bounds.raci_max;
        const bool in = (fit.poly.A * ik.config.hips - fit.poly.b).maxCoeff() <= 1e-9;
        if (in && !pref) ++inside_bad;
        if (!in && pref) {
          ++outside;
          worst = std::max(worst, distance_to_samples(f.point(i, j), boundary));
        }
      }
    ok = ok && inside_bad == 0 && worst <= r_min && fit.poly.faces() == 6;
    o.detail.push_back("leg " + std::to_string(leg) + ": " + std::to_string(fit.poly.faces()) + " faces, " +
                       std::to_string(inside_bad) + " non-preferable cells inside, " + std::to_string(outside) +
                       " preferable cells outside" + fmt(" within %.4f m", worst) + fmt(" (r_min %.4f m)", r_min));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.mark = ok ? Mark::Pass : Mark::Fail;
  o.summary = "stacked A is " + std::to_string(w.file.poly.A.rows()) + "x" + std::to_string(w.file.poly.A.cols()) +
              fmt(", %.1f s including grid build", secs);
  return o;
}

// ---------------------------------------------------------------------------------------------
// 6. MFT index properties

Outcome index_properties() {
  const RobotModel& m = model();
  int cells = 0, out_of_range = 0, zero_unflagged = 0, flagged_nonzero = 0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const MftField& f = workspace().fields[leg];
    for (int j = 0; j < f.nz; ++j)
      for (int i = 0; i < f.nx; ++i) {
        const auto ik = try_leg_inverse_kinematics(m, leg, f.point(i, j));
        if (!ik.ok) continue;
        ++cells;
        const LtiResult l = lti(m, leg, ik.config);
        if (!(l.gamma_LTI >= 0.0 && l.gamma_LTI <= 1.0)) ++out_of_range;
        if (l.singular && l.gamma_LTI != 0.0) ++flagged_nonzero;
        if (!l.singular && l.gamma_LTI == 0.0) ++zero_unflagged;
      }
  }

  // Constructed closure singularities: both limbs hanging straight, and the
  // two shanks collinear through the foot.
  int singular_cases = 0, singular_ok = 0;
  {
    LegConfig c;
    c.rear_knee_point = c.fore_knee_point = Vec2(0.0, -m.legs[0].rear.thigh_length);
    c.foot = Vec2(0.0, -(m.legs[0].rear.thigh_length + m.legs[0].rear.shank_length));
    const LtiResult l = lti(m, 0, c);
    ++singular_cases;
    singular_ok += l.singular && l.gamma_LTI == 0.0;
  }
  const double reach = m.legs[0].rear.thigh_length + m.legs[0].rear.shank_length;
  std::vector<double> approach;
  for (int i = 5; i >= 1; --i) {
    const auto ik = try_leg_inverse_kinematics(m, 0, Vec2(0.02, -(reach - 1e-3 * i)));
    if (ik.ok) approach.push_back(lti(m, 0, ik.config).gamma_LTI);
  }
  bool vanishing = approach.size() == 5 && approach.back() < 0.1;
  for (size_t i = 1; i < approach.size(); ++i) vanishing = vanishing && approach[i] < approach[i - 1];

  // RACI: monotone in a_max, and worst direction by brute force.
  std::mt19937_64 rng(6);
  int non_monotone = 0;
  double brute = 0.0;
  for (int t = 0; t < 200; ++t) {
    const LegConfig c = try_leg_inverse_kinematics(m, 0, reachable_foot(0, rng)).config;
    double prev = -1.0;
    for (double a : {0.0, 10.0, 30.0, 60.0, 90.0, 120.0}) {
      const double r = raci(m, 0, c, a);
      if (r < prev) ++non_monotone;
      prev = r;
    }
    if (t >= 50) continue;
    // Hip torques for a foot acceleration from the leg's constrained equations
    // of motion, solved as one linear system.
    const VecQ q = leg_coordinates(0, c);
    const auto k = compute_kinematics(m, q, VecQ::Zero());
    const Mat4 M = mass_matrix(m, k).block<4, 4>(3, 3);
    const Eigen::Matrix<double, 2, 4> Jh = loop_constraints(k).J.block<2, 4>(0, 3);
    const Eigen::Matrix<double, 2, 4> Jf = k.limb_ends[0][0].J.block<2, 4>(0, 3);
    Mat4 K;
    K << Jh, Jf;
    Mat4 B = Mat4::Zero();
    B(0, 0) = 1.0;
    B(2, 1) = 1.0;
    B.rightCols<2>() = Jh.transpose();
    const auto Klu = K.fullPivLu();
    const auto Blu = B.fullPivLu();
    double worst = 0.0;
    for (int d = 0; d < 3600; ++d) {
      const double th = 2.0 * kPi * d / 3600.0;
      Vec4 rhs;
      rhs << 0, 0, kDefaultFootAcceleration * std::cos(th), kDefaultFootAcceleration * std::sin(th);
      const Vec4 x = Blu.solve(M * Klu.solve(rhs));
      worst = std::max(worst, x.head<2>().cwiseAbs().maxCoeff());
    }
    worst /= std::sqrt(m.leg_mass(0));
    const double r = raci(m, 0, c, kDefaultFootAcceleration);
    brute = std::max(brute, std::abs(r - worst) / std::max(1.0, worst));
  }

  Outcome o;
  const bool ok = out_of_range == 0 && zero_unflagged == 0 && flagged_nonzero == 0 && singular_ok == singular_cases &&
                  vanishing && non_monotone == 0 && brute < 1e-3;
  o.mark = ok ? Mark::Pass : Mark::Fail;
  o.summary = std::to_string(cells) + " reachable grid cells, " + std::to_string(out_of_range) + " LTI values outside [0,1]";
  o.detail.push_back(std::to_string(zero_unflagged) + " zero LTI without a singular flag, " + std::to_string(flagged_nonzero) +
                     " flagged with nonzero LTI");
  o.detail.push_back("constructed singularity flagged with zero LTI: " + std::string(singular_ok == singular_cases ? "yes" : "no") +
                     ", LTI falls towards the stretched limb: " + (vanishing ? "yes" : "no"));
  o.detail.push_back(std::to_string(non_monotone) + " monotonicity violations over 200 configurations");
  o.detail.push_back(fmt("RACI vs 3600-direction brute force, worst rel. error %.1e (limit 1e-3)", brute));
  return o;
}

// ---------------------------------------------------------------------------------------------
// 7. soft constraint

// Highest standing height whose actuated joints lie in the hexagons.
double band_top(const Resources& res) {
  auto inside = [&](double h) {
    const VecQ q = configuration_from_feet(res.model, Vec3(0.0, h, 0.0), {Vec2(0.0, -h), Vec2(0.0, -h)});
    return res.poly.poly.contains(actuated_positions(q));
  };
  double lo = 0.35, hi = 0.53;
  if (!inside(lo)) return lo;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

Outcome soft_constraint(const Resources& res) {
  const double top = band_top(res);
  const double reference = top + 0.04;
  const double start = 0.40, switch_at = 2.0, transient = 5.0, duration = 12.0;
  // Stepping in place: a point-footed biped cannot balance standing still.
  ExperimentSpec spec;
  spec.wbc.tau_max = res.model.actuator.torque_max;
  CommandProfile cmd;
  cmd.points = {{0.0, Command{start, 0.0}}, {switch_at, Command{reference, 0.0}}};
  ClosedLoop loop(res, spec, ControllerKind::Mft, cmd);
  const Polyhedron& P = res.poly.poly;
  long ticks = 0, inside = 0, grid_inside = 0;
  double worst_face = -kInf, height_max = 0.0, eps_tail = 0.0;
  while (loop.time() < duration - 1e-9) {
    loop.plan_and_control();
    const double t = loop.time();
    const VecQ& q = loop.robot().q;
    if (t >= transient) {
      ++ticks;
      const double face = (P.A * actuated_positions(q) - P.b).maxCoeff();
      worst_face = std::max(worst_face, face);
      inside += face <= 1e-9;
      bool grid = true;
      for (int leg = 0; leg < kNumLegs; ++leg) {
        const MftField& f = workspace().fields[leg];
        const auto idx = f.index_of(leg_config(res.model, q, leg).foot);
        grid = grid && idx && f.at(idx->first, idx->second).preferable;
      }
      grid_inside += grid;
      height_max = std::max(height_max, q(1));
    }
    if (t >= duration - 1.0) eps_tail = std::max(eps_tail, loop.last_tick().eps.cwiseAbs().maxCoeff());
    loop.advance();
  }
  const double settled = loop.robot().q(1);
  const bool below = height_max < reference - 1e-3;
  const bool joints = inside == ticks;
  const bool eps = eps_tail < 1e-6;
  Outcome o;
  o.mark = below && joints && eps ? Mark::Pass : Mark::Fail;
  o.summary = fmt("reference %.3f m", reference) + fmt(", settled at %.4f m", settled) +
              fmt(", joints in hexagon on %.1f%% of ticks", 100.0 * inside / std::max(1L, ticks)) +
              fmt(", steady-state slack %.2e", eps_tail);
  o.detail.push_back(fmt("top of the preferable standing band %.4f m", top));
  o.detail.push_back(std::string("height stays below the reference: ") +
                     (below ? "yes" : "no") + fmt(" (highest %.4f m after the transient)", height_max));
  o.detail.push_back(fmt("largest face value A q - b after the transient %.2e", worst_face));
  o.detail.push_back(fmt("feet on preferable grid cells on %.1f%% of ticks", 100.0 * grid_inside / std::max(1L, ticks)));
  o.detail.push_back(fmt("largest slack over the last second %.2e (limit 1e-6)", eps_tail));
  return o;
}

// ---------------------------------------------------------------------------------------------
// 8. timing

Outcome timing(const Resources& res) {
  ExperimentSpec spec;
  spec.commands.points = {{0.0, Command{0.40, 0.0}}, {2.0, Command{0.40, 0.3}}};
  spec.scenario.duration = 10.0;
  spec.wbc.tau_max = res.model.actuator.torque_max;
  Outcome o;
  o.mark = Mark::Info;
  for (ControllerKind k : {ControllerKind::Mft, ControllerKind::Sa}) {
    const WalkSummary w = run_walk(spec, res, k);
    o.detail.push_back(std::string(to_string(k)) + fmt(": tick mean %.3f ms", 1e3 * w.stats.tick_time.mean()) +
                       fmt(", max %.3f ms", 1e3 * w.stats.tick_time.max) +
                       fmt(", QP mean %.3f ms", 1e3 * w.stats.solve_time.mean()) +
                       fmt(", %.1f iterations on average", w.stats.iterations.mean()) + ", " +
                       std::to_string(w.stats.ticks) + " ticks");
  }
  o.summary = "control tick on a 10 s walk against a 0.2 ms typical, 0.6 ms worst budget";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mftwbc acceptance suite"};
  std::vector<int> only;
  unsigned workers = 0;
  std::string sweep_out;
  app.add_option("criteria", only, "criteria to run (default: all)")->check(CLI::Range(1, 8));
  app.add_option("--workers", workers, "parallel sweep workers (0: one per core)");
  app.add_option("--sweep-out", sweep_out, "save the push sweep result");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::string> titles = {"",
                                           "push recovery trend",
                                           "constraint transformation",
                                           "dynamics properties",
                                           "QP solver",
                                           "polyhedron conditions",
                                           "MFT index properties",
                                           "soft constraint",
                                           "timing"};
  auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };

  std::optional<Resources> res;
  auto resources = [&]() -> const Resources& {
    if (!res) {
      ExperimentSpec s;
      res = load_resources(s);
    }
    return *res;
  };

  int failed = 0;
  for (int n = 1; n <= 8; ++n) {
    if (!wanted(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      switch (n) {
        case 1: o = push_sweep(workers, sweep_out); break;
        case 2: o = constraint_oracle(); break;
        case 3: o = dynamics_properties(); break;
        case 4: o = qp_oracle(resources()); break;
        case 5: o = polyhedron_audit(); break;
        case 6: o = index_properties(); break;
        case 7: o = soft_constraint(resources()); break;
        case 8: o = timing(resources()); break;
      }
    } catch (const std::exception& e) {
      o.mark = Mark::Fail;
      o.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* mark = o.mark == Mark::Pass ? "PASS" : o.mark == Mark::Fail ? "FAIL" : "INFO";
    std::cout << '[' << mark << "] " << n << ' ' << titles[n] << ": " << o.summary << '\n';
    for (const auto& d : o.detail) std::cout << "       " << d << '\n';
    std::cout << "       " << fmt("(%.1f s)", secs) << '\n' << std::flush;
    failed += o.mark == Mark::Fail;
  }
  return failed == 0 ? 0 : 1;
}

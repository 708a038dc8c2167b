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

#include <random>

#include "mftwbc/qp.hpp"

namespace mftwbc {
namespace {

QpProblem scalar(double h, double g) { return QpProblem::unconstrained(MatX::Constant(1, 1, h), VecX::Constant(1, g)); }

TEST(Qp, UnconstrainedScalar) {
  QpSolver s;
  const QpProblem p = scalar(2.0, -2.0);
  const QpSolution r = s.solve(p);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-15);
  EXPECT_LT(kkt_residual(p, r), 1e-12);
}

TEST(Qp, ActiveUpperBoundMultiplier) {
  QpProblem p = scalar(2.0, -2.0);
  p.Ain = MatX::Ones(1, 1);
  p.lower = VecX::Constant(1, -kInf);
  p.upper = VecX::Zero(1);
  QpSolver s;
  const QpSolution r = s.solve(p);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 0.0, 1e-15);
  EXPECT_NEAR(r.y_in(0), 2.0, 1e-12);
  EXPECT_LT(kkt_residual(p, r), 1e-12);

  QpSolution off = r;
  off.x(0) += 1e-3;
  EXPECT_GT(kkt_residual(p, off), 1e-4);
  off.x(0) -= 2e-3;
  EXPECT_GT(kkt_residual(p, off), 1e-4);
}

TEST(Qp, SameThroughVariableBounds) {
  QpProblem p = scalar(2.0, -2.0);
  p.xl = VecX::Constant(1, -kInf);
  p.xu = VecX::Zero(1);
  QpSolver s;
  const QpSolution r = s.solve(p);
  EXPECT_NEAR(r.x(0), 0.0, 1e-15);
  EXPECT_NEAR(r.y_bound(0), 2.0, 1e-12);
  EXPECT_LT(kkt_residual(p, r), 1e-12);
}

TEST(Qp, InconsistentEqualitiesAreInfeasible) {
  QpProblem p = QpProblem::unconstrained(MatX::Identity(2, 2), VecX::Zero(2));
  p.Aeq.resize(2, 2);
  p.Aeq << 1, 1, 2, 2;
  p.beq = Vec2(1, 3);
  QpSolver s;
  EXPECT_EQ(s.solve(p).status, QpStatus::Infeasible);
}

TEST(Qp, EmptyFeasibleSetIsInfeasible) {
  QpProblem p = QpProblem::unconstrained(MatX::Identity(2, 2), VecX::Zero(2));
  p.Ain.resize(2, 2);
  p.Ain << 1, 0, -1, 0;
  p.lower = Vec2(1.0, 1.0);
  p.upper = Vec2(kInf, kInf);
  QpSolver s;
  const QpSolution r = s.solve(p);
  EXPECT_EQ(r.status, QpStatus::Infeasible);
  EXPECT_GT(r.infeasibility, 0.0);
}

// Independent reference: Mehrotra predictor-corrector interior point on
//   min 1/2 x'Hx + g'x  s.t.  E x = e,  G x <= h
struct IpmResult {
  VecX x, y, z;
  bool converged = false;
};

IpmResult interior_point(const MatX& H, const VecX& g, const MatX& E, const VecX& e, const MatX& G, const VecX& h) {
  const int n = static_cast<int>(g.size()), me = static_cast<int>(E.rows()), mi = static_cast<int>(G.rows());
  VecX x = VecX::Zero(n), y = VecX::Zero(me), s = VecX::Ones(mi), z = VecX::Ones(mi);
  IpmResult out;
  for (int it = 0; it < 300; ++it) {
    const VecX rd = H * x + g + E.transpose() * y + G.transpose() * z;
    const VecX rp = E * x - e;
    const VecX ri = G * x + s - h;
    const double mu = mi ? s.dot(z) / mi : 0.0;
    const double scale = 1.0 + g.lpNorm<Eigen::Infinity>();
    if (rd.lpNorm<Eigen::Infinity>() < 1e-10 * scale &&
        (me == 0 || rp.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + e.lpNorm<Eigen::Infinity>())) &&
        (mi == 0 || ri.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + h.lpNorm<Eigen::Infinity>())) && mu < 1e-12) {
      out.converged = true;
      break;
    }
    // Full Newton system in (dx, dy, dz, ds); the reduced form loses too
    // much accuracy once z/s spreads over many decades.
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
    auto direction = [&](const VecX& rc, VecX& dx, VecX& dy, VecX& ds, VecX& dz) {
      VecX rhs(N);
      rhs << -rd, -rp, -ri, -rc;
      const VecX d = lu.solve(rhs);
      dx = d.segment(0, n);
      dy = d.segment(n, me);
      dz = d.segment(n + me, mi);
      ds = d.segment(n + me + mi, mi);
    };
    auto max_step = [&](const VecX& ds, const VecX& dz, double frac) {
      double a = 1.0;
      for (int i = 0; i < mi; ++i) {
        if (ds(i) < 0) a = std::min(a, -frac * s(i) / ds(i));
        if (dz(i) < 0) a = std::min(a, -frac * z(i) / dz(i));
      }
      return a;
    };
    VecX dx, dy, ds, dz;
    direction((s.array() * z.array()).matrix(), dx, dy, ds, dz);
    if (mi > 0) {
      const double aff = max_step(ds, dz, 1.0);
      const double mu_aff = (s + aff * ds).dot(z + aff * dz) / mi;
      const double sigma = std::max(0.01, std::pow(mu_aff / mu, 3));
      const VecX rc = (s.array() * z.array() + ds.array() * dz.array() - sigma * mu).matrix();
      direction(rc, dx, dy, ds, dz);
    }
    const double a = max_step(ds, dz, 0.995);
    x += a * dx;
    y += a * dy;
    s += a * ds;
    z += a * dz;
  }
  out.x = x;
  out.y = y;
  out.z = z;
  return out;
}

struct RandomQp {
  QpProblem p;
  IpmResult reference;
  QpSolution reference_solution;
};

RandomQp random_qp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dn(2, 30);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const int n = dn(rng);
  const int me = std::uniform_int_distribution<int>(0, n / 3)(rng);
  const int mi = std::uniform_int_distribution<int>(0, 40 - std::min(40, n / 2))(rng);
  auto rnd = [&](int r, int c) {
    MatX m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
  };
  const MatX R = rnd(n, n);
  RandomQp out;
  QpProblem& p = out.p;
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
    const double k = ud(rng);
    p.lower(i) = k < 0.3 ? -kInf : ax(i) - ud(rng);
    p.upper(i) = k > 0.7 ? kInf : ax(i) + ud(rng);
  }
  const bool bounds = ud(rng) < 0.5;
  if (bounds) {
    p.xl = xf - VecX::Constant(n, 0.5) - VecX::Constant(n, ud(rng));
    p.xu = xf + VecX::Constant(n, 0.5) + VecX::Constant(n, ud(rng));
  }
  // Oracle form G x <= h.
  // Each row remembers (bound?, index, sign) to map multipliers back.
  struct OracleRow {
    VecX a;
    double b;
    bool bound;
    int index;
    double sign;
  };
  std::vector<OracleRow> rows;
  for (int i = 0; i < mi; ++i) {
    if (std::isfinite(p.upper(i))) rows.push_back({p.Ain.row(i).transpose(), p.upper(i), false, i, 1.0});
    if (std::isfinite(p.lower(i))) rows.push_back({-p.Ain.row(i).transpose(), -p.lower(i), false, i, -1.0});
  }
  if (bounds)
    for (int i = 0; i < n; ++i) {
      rows.push_back({VecX::Unit(n, i), p.xu(i), true, i, 1.0});
      rows.push_back({-VecX::Unit(n, i), -p.xl(i), true, i, -1.0});
    }
  MatX G(rows.size(), n);
  VecX h(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    G.row(k) = rows[k].a.transpose();
    h(k) = rows[k].b;
  }
  out.reference = interior_point(p.H, p.g, p.Aeq, p.beq, G, h);
  QpSolution& r = out.reference_solution;
  r.x = out.reference.x;
  r.y_eq = out.reference.y;
  r.y_in = VecX::Zero(mi);
  r.y_bound = VecX::Zero(bounds ? n : 0);
  for (size_t k = 0; k < rows.size(); ++k)
    (rows[k].bound ? r.y_bound : r.y_in)(rows[k].index) += rows[k].sign * out.reference.z(k);
  return out;
}

TEST(Qp, MatchesInteriorPointReferenceOnRandomProblems) {
  std::mt19937_64 rng(11);
  int worst_iter = 0;
  for (int t = 0; t < 500; ++t) {
    const RandomQp q = random_qp(rng);
    QpSolver s;
    const QpSolution r = s.solve(q.p);
    ASSERT_EQ(r.status, QpStatus::Optimal) << t;
    ASSERT_TRUE(q.reference.converged) << t;
    EXPECT_LT((r.x - q.reference.x).lpNorm<Eigen::Infinity>(), 1e-6) << t;
    EXPECT_LT(kkt_residual(q.p, r), 1e-8) << t;
    EXPECT_LT(kkt_residual(q.p, q.reference_solution), 1e-6) << t;
    worst_iter = std::max(worst_iter, r.iterations);
  }
  EXPECT_LT(worst_iter, 500);
}

TEST(Qp, DualObjectiveTraceNeverDecreases) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    const RandomQp q = random_qp(rng);
    QpSolver s;
    const QpSolution r = s.solve(q.p);
    for (size_t i = 1; i < r.objective_trace.size(); ++i)
      EXPECT_GE(r.objective_trace[i], r.objective_trace[i - 1] - 1e-9 * (1.0 + std::abs(r.objective_trace[i])));
  }
}

TEST(Qp, WarmResolveOfTheSameProblemIsImmediate) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const RandomQp q = random_qp(rng);
    QpSolver s;
    const QpSolution a = s.solve(q.p);
    const QpSolution b = s.solve(q.p);
    EXPECT_LE(b.iterations, 1);
    EXPECT_LT((a.x - b.x).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Qp, WarmStartAfterSmallPerturbation) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> nd(0.0, 1.0);
  long warm_total = 0, cold_total = 0;
  for (int t = 0; t < 200; ++t) {
    RandomQp q = random_qp(rng);
    QpSolver warm;
    warm.solve(q.p);
    for (int i = 0; i < q.p.n(); ++i) q.p.g(i) += 1e-3 * (1.0 + std::abs(q.p.g(i))) * nd(rng);
    const QpSolution w = warm.solve(q.p);
    QpSolver cold;
    const QpSolution c = cold.solve(q.p, false);
    ASSERT_EQ(w.status, QpStatus::Optimal);
    EXPECT_LT((w.x - c.x).lpNorm<Eigen::Infinity>(), 1e-8);
    warm_total += w.iterations;
    cold_total += c.iterations;
  }
  EXPECT_LT(warm_total, cold_total);
}

TEST(Qp, Deterministic) {
  std::mt19937_64 rng(15);
  const RandomQp q = random_qp(rng);
  QpSolver a, b;
  const QpSolution ra = a.solve(q.p), rb = b.solve(q.p);
  EXPECT_EQ(ra.iterations, rb.iterations);
  for (int i = 0; i < q.p.n(); ++i) EXPECT_EQ(ra.x(i), rb.x(i));
}

}  // namespace
}  // namespace mftwbc

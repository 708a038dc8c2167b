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

// Dense convex QP
//
//   min 1/2 x'Hx + g'x   s.t.  Aeq x = beq,  lower <= Ain x <= upper,  xl <= x <= xu
//
// Equalities are eliminated with a QR null-space basis; the remaining
// inequality problem is solved with the Goldfarb-Idnani dual active-set
// method, which starts from the unconstrained minimum and therefore needs no
// feasible initial point. A solver instance keeps the last active set for
// warm starting.

#pragma once

#include <chrono>
#include <vector>

#include "mftwbc/common.hpp"

namespace mftwbc {

struct QpProblem {
  MatX H;
  VecX g;
  MatX Aeq;
  VecX beq;
  MatX Ain;
  VecX lower;  // -inf allowed
  VecX upper;  // +inf allowed
  VecX xl;     // empty or size n
  VecX xu;

  int n() const { return static_cast<int>(g.size()); }
  int n_eq() const { return static_cast<int>(Aeq.rows()); }
  int n_in() const { return static_cast<int>(Ain.rows()); }
  bool has_bounds() const { return xl.size() == g.size() || xu.size() == g.size(); }
  double bound_lo(int i) const { return xl.size() ? xl(i) : -kInf; }
  double bound_hi(int i) const { return xu.size() ? xu(i) : kInf; }

  double objective(const VecX& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }

  static QpProblem unconstrained(const MatX& H, const VecX& g) {
    QpProblem p;
    p.H = H;
    p.g = g;
    p.Aeq.resize(0, g.size());
    p.beq.resize(0);
    p.Ain.resize(0, g.size());
    p.lower.resize(0);
    p.upper.resize(0);
    return p;
  }
};

enum class QpStatus { Optimal, Infeasible, MaxIter };

inline std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::MaxIter: return "MaxIter";
  }
  return "Unknown";
}

// Multiplier signs follow H x + g + Aeq' y_eq + Ain' y_in + y_bound = 0, so a
// positive value belongs to an active upper side and a negative one to a lower side.
struct QpSolution {
  VecX x;
  VecX y_eq;
  VecX y_in;
  VecX y_bound;
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  double solve_time = 0.0;
  double objective = 0.0;
  double infeasibility = 0.0;  // violation left on the blocking row when Infeasible
  std::vector<double> objective_trace;
};

// Scaled worst of stationarity, primal feasibility, dual feasibility and
// complementarity.
inline double kkt_residual(const QpProblem& p, const QpSolution& s) {
  const VecX& x = s.x;
  const int n = p.n();
  VecX grad = p.H * x + p.g;
  double scale = std::max({1.0, p.g.lpNorm<Eigen::Infinity>(), (p.H * x).lpNorm<Eigen::Infinity>()});
  VecX r = grad;
  if (p.n_eq()) r += p.Aeq.transpose() * s.y_eq;
  if (p.n_in()) r += p.Ain.transpose() * s.y_in;
  if (s.y_bound.size() == n) r += s.y_bound;
  double res = r.lpNorm<Eigen::Infinity>() / scale;
  if (p.n_eq()) res = std::max(res, (p.Aeq * x - p.beq).lpNorm<Eigen::Infinity>() / std::max(1.0, p.beq.lpNorm<Eigen::Infinity>()));
  auto side = [&](double ax, double lo, double hi, double y) {
    const double mag = std::max({1.0, std::isfinite(lo) ? std::abs(lo) : 0.0, std::isfinite(hi) ? std::abs(hi) : 0.0});
    double v = std::max({0.0, lo - ax, ax - hi}) / mag;
    if (y > 0) v = std::max(v, std::isfinite(hi) ? std::abs(y * (hi - ax)) / (mag * std::max(1.0, std::abs(y))) : y);
    if (y < 0) v = std::max(v, std::isfinite(lo) ? std::abs(y * (ax - lo)) / (mag * std::max(1.0, std::abs(y))) : -y);
    res = std::max(res, v);
  };
  if (p.n_in()) {
    const VecX ax = p.Ain * x;
    for (int i = 0; i < p.n_in(); ++i) side(ax(i), p.lower(i), p.upper(i), s.y_in(i));
  }
  if (p.has_bounds())
    for (int i = 0; i < n; ++i) side(x(i), p.bound_lo(i), p.bound_hi(i), s.y_bound.size() ? s.y_bound(i) : 0.0);
  return res;
}

class QpSolver {
 public:
  int max_iterations = 500;
  double feasibility_tol = 1e-9;

  void reset() { warm_.clear(); }

  // Identifier of one one-sided inequality: kind 0 general row, 1 bound;
  // side +1 upper, -1 lower.
  struct RowId {
    int kind;
    int row;
    int side;
    bool operator==(const RowId& o) const { return kind == o.kind && row == o.row && side == o.side; }
  };

  const std::vector<RowId>& active_set() const { return warm_; }

  QpSolution solve(const QpProblem& p, bool warm_start = true) {
    const auto t0 = std::chrono::steady_clock::now();
    QpSolution s = solve_impl(p, warm_start);
    s.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
  }

 private:
  std::vector<RowId> warm_;

  // One-sided rows n'x >= c in the original space.
  struct Row {
    RowId id;
    VecX n;
    double c;
  };

  QpSolution solve_impl(const QpProblem& p, bool warm_start) {
    const int n = p.n();
    QpSolution sol;
    sol.x = VecX::Zero(n);
    sol.y_eq = VecX::Zero(p.n_eq());
    sol.y_in = VecX::Zero(p.n_in());
    sol.y_bound = VecX::Zero(p.has_bounds() ? n : 0);

    // Collect one-sided rows.
    std::vector<Row> rows;
    for (int i = 0; i < p.n_in(); ++i) {
      if (std::isfinite(p.lower(i))) rows.push_back({{0, i, -1}, p.Ain.row(i).transpose(), p.lower(i)});
      if (std::isfinite(p.upper(i))) rows.push_back({{0, i, +1}, -p.Ain.row(i).transpose(), -p.upper(i)});
    }
    if (p.has_bounds())
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(p.bound_lo(i))) rows.push_back({{1, i, -1}, VecX::Unit(n, i), p.bound_lo(i)});
        if (std::isfinite(p.bound_hi(i))) rows.push_back({{1, i, +1}, -VecX::Unit(n, i), -p.bound_hi(i)});
      }

    // Equality elimination: x = xp + Z y.
    VecX xp = VecX::Zero(n);
    MatX Z = MatX::Identity(n, n);
    if (p.n_eq() > 0) {
      Eigen::ColPivHouseholderQR<MatX> qr(p.Aeq.transpose());
      qr.setThreshold(1e-12);
      const int rank = static_cast<int>(qr.rank());
      const MatX Q = qr.householderQ();
      xp = p.Aeq.completeOrthogonalDecomposition().solve(p.beq);
      if ((p.Aeq * xp - p.beq).lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, p.beq.lpNorm<Eigen::Infinity>())) {
        sol.status = QpStatus::Infeasible;
        sol.infeasibility = (p.Aeq * xp - p.beq).lpNorm<Eigen::Infinity>();
        sol.x = xp;
        return sol;
      }
      Z = Q.rightCols(n - rank);
    }
    const int nr = static_cast<int>(Z.cols());
    MatX Hr = Z.transpose() * p.H * Z;
    Hr = 0.5 * (Hr + Hr.transpose()).eval();
    const VecX gr = Z.transpose() * (p.H * xp + p.g);
    Eigen::LLT<MatX> llt(Hr);
    if (llt.info() != Eigen::Success || nr == 0 ||
        llt.matrixL().toDenseMatrix().diagonal().minCoeff() < 1e-7 * std::sqrt(std::max(1.0, Hr.diagonal().maxCoeff()))) {
      if (nr > 0) {
        Hr.diagonal().array() += 1e-10 * std::max(1.0, Hr.diagonal().maxCoeff());
        llt.compute(Hr);
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::BadConfig, "QP Hessian is not positive semidefinite");
      }
    }
    const MatX L = nr ? MatX(llt.matrixL()) : MatX(0, 0);
    auto Linv = [&](const VecX& v) -> VecX { return L.triangularView<Eigen::Lower>().solve(v); };
    auto LinvT = [&](const VecX& v) -> VecX { return L.transpose().triangularView<Eigen::Upper>().solve(v); };

    // Reduced rows: (n'Z) y >= c - n'xp.
    const int m = static_cast<int>(rows.size());
    MatX Nr(nr, m);
    VecX cr(m);
    for (int k = 0; k < m; ++k) {
      Nr.col(k) = Z.transpose() * rows[k].n;
      cr(k) = rows[k].c - rows[k].n.dot(xp);
    }
    const double row_scale = std::max(1.0, cr.size() ? cr.lpNorm<Eigen::Infinity>() : 0.0);

    VecX y0 = nr ? VecX(-llt.solve(gr)) : VecX(0);
    VecX y = y0;
    std::vector<int> active;  // indices into rows
    VecX u;                   // multipliers of the active rows
    int iterations = 0;
    auto objective = [&](const VecX& yy) { return 0.5 * yy.dot(Hr * yy) + gr.dot(yy); };

    // Minimizer with the active rows as equalities, plus their multipliers.
    auto equality_solve = [&](const std::vector<int>& act, VecX& yy, VecX& uu) -> bool {
      const int q = static_cast<int>(act.size());
      if (q == 0) {
        yy = y0;
        uu.resize(0);
        return true;
      }
      MatX B(nr, q);
      VecX rhs(q);
      for (int j = 0; j < q; ++j) {
        B.col(j) = Linv(Nr.col(act[j]));
        rhs(j) = cr(act[j]) - Nr.col(act[j]).dot(y0);
      }
      Eigen::ColPivHouseholderQR<MatX> qr(B);
      if (qr.rank() < q) return false;
      // B'B u = rhs
      const MatX BtB = B.transpose() * B;
      uu = BtB.ldlt().solve(rhs);
      yy = y0 + LinvT(B * uu);
      return true;
    };

    // Warm start from the previous active set.
    if (warm_start && !warm_.empty()) {
      for (const RowId& id : warm_)
        for (int k = 0; k < m; ++k)
          if (rows[k].id == id && Nr.col(k).norm() > 1e-12) {
            active.push_back(k);
            break;
          }
      for (;;) {
        VecX yy, uu;
        if (!equality_solve(active, yy, uu)) {
          // Dependent rows; fall back to a cold start.
          active.clear();
          y = y0;
          u.resize(0);
          break;
        }
        int worst = -1;
        for (int j = 0; j < uu.size(); ++j)
          if (uu(j) < 0 && (worst < 0 || uu(j) < uu(worst))) worst = j;
        if (worst < 0) {
          y = yy;
          u = uu;
          break;
        }
        active.erase(active.begin() + worst);
        ++iterations;
      }
    }
    sol.objective_trace.push_back(nr ? objective(y) : 0.0);

    const double tol = feasibility_tol;
    for (;;) {
      // Most violated inactive row; ties to the smallest index.
      int pidx = -1;
      double smin = -tol * row_scale;
      for (int k = 0; k < m; ++k) {
        if (std::find(active.begin(), active.end(), k) != active.end()) continue;
        const double nk = Nr.col(k).norm();
        const double s = Nr.col(k).dot(y) - cr(k);
        if (nk <= 1e-14) {
          if (s < -tol * row_scale) {
            sol.status = QpStatus::Infeasible;
            sol.infeasibility = -s;
            return finish(p, rows, Z, xp, y, active, u, iterations, sol, false);
          }
          continue;
        }
        if (s / nk < smin) {
          smin = s / nk;
          pidx = k;
        }
      }
      if (pidx < 0) {
        sol.status = QpStatus::Optimal;
        return finish(p, rows, Z, xp, y, active, u, iterations, sol, true);
      }
      double up = 0.0;  // multiplier accumulated on the entering row
      for (;;) {
        if (iterations >= max_iterations) {
          sol.status = QpStatus::MaxIter;
          return finish(p, rows, Z, xp, y, active, u, iterations, sol, false);
        }
        const int q = static_cast<int>(active.size());
        const VecX v = Linv(Nr.col(pidx));
        VecX r = VecX::Zero(q);
        VecX z;
        if (q > 0) {
          MatX B(nr, q);
          for (int j = 0; j < q; ++j) B.col(j) = Linv(Nr.col(active[j]));
          r = B.colPivHouseholderQr().solve(v);
          z = LinvT(v - B * r);
        } else {
          z = LinvT(v);
        }
        const double s_p = Nr.col(pidx).dot(y) - cr(pidx);
        // Dual step bound.
        double t1 = kInf;
        int drop = -1;
        for (int j = 0; j < q; ++j)
          if (r(j) > 1e-12 && u(j) / r(j) < t1) {
            t1 = u(j) / r(j);
            drop = j;
          }
        const double zn = z.dot(Nr.col(pidx));
        const double t2 = (z.norm() > 1e-12 * std::max(1.0, v.norm()) && zn > 1e-14) ? -s_p / zn : kInf;
        if (!std::isfinite(t1) && !std::isfinite(t2)) {
          sol.status = QpStatus::Infeasible;
          sol.infeasibility = -s_p;
          return finish(p, rows, Z, xp, y, active, u, iterations, sol, false);
        }
        ++iterations;
        if (!std::isfinite(t2)) {
          // Partial dual step: rotate multipliers, drop the blocking row.
          u -= t1 * r;
          up += t1;
          active.erase(active.begin() + drop);
          u = erase(u, drop);
          continue;
        }
        const double t = std::min(t1, t2);
        y += t * z;
        if (q > 0) u -= t * r;
        up += t;
        sol.objective_trace.push_back(objective(y));
        if (t2 <= t1) {
          active.push_back(pidx);
          u.conservativeResize(q + 1);
          u(q) = up;
          break;
        }
        active.erase(active.begin() + drop);
        u = erase(u, drop);
      }
    }
  }

  static VecX erase(const VecX& v, int k) {
    VecX out(v.size() - 1);
    out << v.head(k), v.tail(v.size() - k - 1);
    return out;
  }

  QpSolution& finish(const QpProblem& p, const std::vector<Row>& rows, const MatX& Z, const VecX& xp, const VecX& y,
                     const std::vector<int>& active, const VecX& u, int iterations, QpSolution& sol, bool store) {
    const int n = p.n();
    sol.x = xp + (Z.cols() ? VecX(Z * y) : VecX::Zero(n));
    sol.iterations = iterations;
    sol.objective = p.objective(sol.x);
    // Active-row multipliers: grad - sum u_k n_k + Aeq' y_eq = 0.
    VecX grad = p.H * sol.x + p.g;
    for (size_t j = 0; j < active.size(); ++j) {
      const Row& r = rows[active[j]];
      const double mult = u.size() > static_cast<int>(j) ? u(j) : 0.0;
      // n'x >= c with multiplier mult contributes -mult * n to the gradient
      // balance; translate into the signed convention of the solution.
      const double signed_mult = r.id.side > 0 ? mult : -mult;
      if (r.id.kind == 0) sol.y_in(r.id.row) += signed_mult;
      else sol.y_bound(r.id.row) += signed_mult;
      grad -= mult * r.n;
    }
    if (p.n_eq() > 0) sol.y_eq = p.Aeq.transpose().completeOrthogonalDecomposition().solve(-grad);
    if (store) {
      warm_.clear();
      for (int k : active) warm_.push_back(rows[k].id);
    }
    return sol;
  }
};

}  // namespace mftwbc

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

// Offline workspace map: grid the foot workspace, evaluate the transmissibility
// indices, mark the preferable cells and fit a small convex polygon that stays
// inside them. Polygons are stored as halfspaces {x | A x <= b}.

#pragma once

#include <algorithm>
#include <cinttypes>
#include <functional>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "mftwbc/mft.hpp"

namespace mftwbc {

// --- polyhedron -------------------------------------------------------------

enum class PolySpace { FootCartesian, ActuatedJoint, GeneralizedAccel };

inline std::string_view to_string(PolySpace s) {
  switch (s) {
    case PolySpace::FootCartesian: return "FootCartesian";
    case PolySpace::ActuatedJoint: return "ActuatedJoint";
    case PolySpace::GeneralizedAccel: return "GeneralizedAccel";
  }
  return "Unknown";
}

inline PolySpace poly_space_from_string(std::string_view s) {
  if (s == "FootCartesian") return PolySpace::FootCartesian;
  if (s == "ActuatedJoint") return PolySpace::ActuatedJoint;
  if (s == "GeneralizedAccel") return PolySpace::GeneralizedAccel;
  throw Error(ErrorCode::SchemaMismatch, "unknown polyhedron space '" + std::string(s) + "'");
}

struct Polyhedron {
  PolySpace space = PolySpace::ActuatedJoint;
  MatX A;
  VecX b;
  VecX witness;  // strictly interior point

  int faces() const { return static_cast<int>(A.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }

  // min_i (b_i - A_i x); positive inside, negative outside.
  double margin(const VecX& x) const { return faces() == 0 ? kInf : (b - A * x).minCoeff(); }
  // Rows are compared against a tolerance scaled by their norm so membership
  // does not depend on how the halfspaces are scaled.
  bool contains(const VecX& x, double tol = 1e-9) const {
    for (int i = 0; i < faces(); ++i)
      if (A.row(i).dot(x) - b(i) > tol * A.row(i).norm()) return false;
    return true;
  }

  void normalize() {
    for (int i = 0; i < faces(); ++i) {
      const double n = A.row(i).norm();
      if (n > 0.0) {
        A.row(i) /= n;
        b(i) /= n;
      }
    }
  }
};

// Block-diagonal stacking; membership is the conjunction of the blocks.
inline Polyhedron stack_polyhedra(const std::vector<Polyhedron>& parts) {
  if (parts.empty()) return {};
  int rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (p.space != parts.front().space) throw Error(ErrorCode::BadConfig, "cannot stack polyhedra from different spaces");
    rows += p.faces();
    cols += p.dim();
  }
  Polyhedron s;
  s.space = parts.front().space;
  s.A = MatX::Zero(rows, cols);
  s.b = VecX::Zero(rows);
  s.witness = VecX::Zero(cols);
  int r = 0, c = 0;
  for (const auto& p : parts) {
    s.A.block(r, c, p.faces(), p.dim()) = p.A;
    s.b.segment(r, p.faces()) = p.b;
    if (p.witness.size() == p.dim()) s.witness.segment(c, p.dim()) = p.witness;
    r += p.faces();
    c += p.dim();
  }
  return s;
}

// --- workspace field ----------------------------------------------------------

struct MftBounds {
  double lti_min = 0.7;
  double lti_max = 1.0;
  double raci_min = 0.0;
  double raci_max = kInf;

  void validate() const {
    if (!(lti_min <= lti_max) || !(raci_min <= raci_max)) throw Error(ErrorCode::BadConfig, "index bounds out of order");
  }
  bool admits(double lti, double raci) const {
    return lti >= lti_min && lti <= lti_max && raci >= raci_min && raci <= raci_max;
  }
};

// Bounds with the acceleration-capacity limit set so the worst-case foot
// acceleration a_max stays within the actuator torque.
inline MftBounds default_bounds(const RobotModel& model, double lti_min = 0.7) {
  MftBounds b;
  b.lti_min = lti_min;
  b.raci_max = std::min(raci_torque_bound(model, 0), raci_torque_bound(model, 1));
  return b;
}

struct MftCell {
  bool reachable = false;
  bool preferable = false;
  double lti = 0.0;
  double raci = kInf;
  Vec2 hips = Vec2::Zero();
  Vec2 knees = Vec2::Zero();
};

struct GridExtent {
  Vec2 lo{-0.6, -0.6};
  Vec2 hi{0.6, 0.6};
};

// Cell centers sit on the lattice k * resolution, so a refined grid contains
// every coarse center exactly.
struct MftField {
  int leg = 0;
  double resolution = 0.01;
  double a_max = kDefaultFootAcceleration;
  int i0 = 0, j0 = 0;  // lattice index of the first column / row
  int nx = 0, nz = 0;
  std::vector<MftCell> cells;

  Vec2 point(int i, int j) const { return Vec2((i0 + i) * resolution, (j0 + j) * resolution); }
  MftCell& at(int i, int j) { return cells[static_cast<size_t>(j) * nx + i]; }
  const MftCell& at(int i, int j) const { return cells[static_cast<size_t>(j) * nx + i]; }

  // Cell containing a point, if it is on the grid.
  std::optional<std::pair<int, int>> index_of(const Vec2& p) const {
    const int i = static_cast<int>(std::lround(p.x() / resolution)) - i0;
    const int j = static_cast<int>(std::lround(p.y() / resolution)) - j0;
    if (i < 0 || j < 0 || i >= nx || j >= nz) return std::nullopt;
    return std::make_pair(i, j);
  }

  int count_reachable() const {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const MftCell& c) { return c.reachable; }));
  }
  int count_preferable() const {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const MftCell& c) { return c.preferable; }));
  }
  double reachable_area() const { return count_reachable() * resolution * resolution; }
};

inline MftField grid_workspace(const RobotModel& model, int leg, double resolution,
                               double a_max = kDefaultFootAcceleration, const GridExtent& extent = {},
                               unsigned threads = 0) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::BadConfig, "grid resolution must be positive");
  MftField f;
  f.leg = leg;
  f.resolution = resolution;
  f.a_max = a_max;
  f.i0 = static_cast<int>(std::ceil(extent.lo.x() / resolution - 1e-9));
  f.j0 = static_cast<int>(std::ceil(extent.lo.y() / resolution - 1e-9));
  f.nx = static_cast<int>(std::floor(extent.hi.x() / resolution + 1e-9)) - f.i0 + 1;
  f.nz = static_cast<int>(std::floor(extent.hi.y() / resolution + 1e-9)) - f.j0 + 1;
  f.cells.assign(static_cast<size_t>(f.nx) * f.nz, MftCell{});
  auto rows = [&](int begin, int step) {
    for (int j = begin; j < f.nz; j += step)
      for (int i = 0; i < f.nx; ++i) {
        const auto ik = try_leg_inverse_kinematics(model, leg, f.point(i, j));
        if (!ik.ok) continue;
        MftCell& c = f.at(i, j);
        c.reachable = true;
        c.hips = ik.config.hips;
        c.knees = ik.config.knees;
        const MftIndices m = mft_indices(model, leg, ik.config, a_max);
        c.lti = m.gamma_LTI;
        c.raci = m.gamma_RACI;
      }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(f.nz));
  if (threads <= 1) {
    rows(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(rows, static_cast<int>(t), static_cast<int>(threads));
    for (auto& th : pool) th.join();
  }
  return f;
}

// Returns the number of preferable cells; zero is legal here, the fit rejects it.
inline int mark_preferable(MftField& field, const MftBounds& bounds) {
  bounds.validate();
  int n = 0;
  for (auto& c : field.cells) {
    c.preferable = c.reachable && bounds.admits(c.lti, c.raci);
    n += c.preferable;
  }
  return n;
}

// Range of the passive knee angles over the reachable cells: [rear; fore] x [min, max].
inline Eigen::Matrix<double, 2, 2> passive_joint_range(const MftField& field) {
  Eigen::Matrix<double, 2, 2> r;
  r.col(0).setConstant(kInf);
  r.col(1).setConstant(-kInf);
  for (const auto& c : field.cells) {
    if (!c.reachable) continue;
    r.col(0) = r.col(0).cwiseMin(c.knees);
    r.col(1) = r.col(1).cwiseMax(c.knees);
  }
  return r;
}

// --- convex polygon fit --------------------------------------------------------

namespace detail {

// Andrew's monotone chain, counter-clockwise, collinear points dropped.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> h(2 * pts.size());
  size_t k = 0;
  auto turn = [](const Vec2& o, const Vec2& a, const Vec2& b) { return cross2(a - o, b - o); };
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && turn(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && turn(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

inline double polygon_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (size_t i = 0; i < v.size(); ++i) a += cross2(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

inline Vec2 polygon_centroid(const std::vector<Vec2>& v) {
  const double a = polygon_area(v);
  Vec2 c = Vec2::Zero();
  if (std::abs(a) < 1e-300) {
    for (const auto& p : v) c += p;
    return c / static_cast<double>(v.size());
  }
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    c += (p + q) * cross2(p, q);
  }
  return c / (6.0 * a);
}

// Keeps the part of a convex polygon with n.x <= c.
inline std::vector<Vec2> clip(const std::vector<Vec2>& poly, const Vec2& n, double c) {
  std::vector<Vec2> out;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    const double dp = n.dot(p) - c, dq = n.dot(q) - c;
    if (dp <= 0) out.push_back(p);
    if ((dp < 0 && dq > 0) || (dp > 0 && dq < 0)) out.push_back(p + (q - p) * (dp / (dp - dq)));
  }
  return out;
}

// Unit-normal halfspaces of a counter-clockwise polygon.
inline Polyhedron halfspaces(const std::vector<Vec2>& v, PolySpace space) {
  Polyhedron p;
  p.space = space;
  const int n = static_cast<int>(v.size());
  p.A.resize(n, 2);
  p.b.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 e = v[(i + 1) % n] - v[i];
    const Vec2 normal = Vec2(e.y(), -e.x()).normalized();  // outward for CCW
    p.A.row(i) = normal.transpose();
    p.b(i) = normal.dot(v[i]);
  }
  p.witness = polygon_centroid(v);
  return p;
}

inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double l2 = ab.squaredNorm();
  const double t = l2 > 0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace detail

struct PolygonFit {
  Polyhedron poly;
  std::vector<Vec2> vertices;  // counter-clockwise
};

// Largest-area-style inner polygon: hull of the good points, cut until no bad
// point is inside or on it, then drop the vertex whose removal loses least
// area until at most max_faces remain. Every step shrinks the polygon, so bad
// points never re-enter.
inline PolygonFit fit_convex_polygon(const std::vector<Vec2>& good, const std::vector<Vec2>& bad, int max_faces,
                                     PolySpace space) {
  if (good.size() < 3) throw Error(ErrorCode::EmptyPreferable, "not enough preferable points to fit a polygon");
  if (max_faces < 3) throw Error(ErrorCode::InfeasibleFit, "a polygon needs at least three faces");
  std::vector<Vec2> poly = detail::convex_hull(good);
  if (poly.size() < 3) throw Error(ErrorCode::InfeasibleFit, "preferable points are collinear");
  double scale = 0.0;
  for (const auto& p : poly) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-9 * std::max(scale, 1.0);

  auto inside = [&](const Vec2& p) {
    for (size_t i = 0; i < poly.size(); ++i)
      if (cross2(poly[(i + 1) % poly.size()] - poly[i], p - poly[i]) < -eps * (poly[(i + 1) % poly.size()] - poly[i]).norm())
        return false;
    return true;
  };

  for (;;) {
    // Cut the bad point nearest the centroid first; it forces the deepest cut,
    // which often takes care of the others.
    const Vec2 c = detail::polygon_centroid(poly);
    int worst = -1;
    double best = kInf;
    for (size_t k = 0; k < bad.size(); ++k) {
      if (!inside(bad[k])) continue;
      const double d = (bad[k] - c).norm();
      if (d < best) {
        best = d;
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) break;
    if (best <= eps) throw Error(ErrorCode::InfeasibleFit, "non-preferable point at the polygon centroid");
    const Vec2 n = (bad[worst] - c) / best;
    poly = detail::clip(poly, n, n.dot(bad[worst]) - 2.0 * eps);
    if (poly.size() < 3 || std::abs(detail::polygon_area(poly)) <= eps * eps)
      throw Error(ErrorCode::InfeasibleFit, "polygon collapsed while excluding non-preferable points");
  }

  // Drop near-collinear vertices and then the cheapest ones.
  while (static_cast<int>(poly.size()) > max_faces ||
         [&] {
           for (size_t i = 0; i < poly.size(); ++i) {
             const Vec2& a = poly[(i + poly.size() - 1) % poly.size()];
             const Vec2& b = poly[(i + 1) % poly.size()];
             if (std::abs(cross2(poly[i] - a, b - a)) <= eps * eps) return true;
           }
           return false;
         }()) {
    size_t drop = 0;
    double loss = kInf;
    for (size_t i = 0; i < poly.size(); ++i) {
      const Vec2& a = poly[(i + poly.size() - 1) % poly.size()];
      const Vec2& b = poly[(i + 1) % poly.size()];
      const double area = 0.5 * std::abs(cross2(poly[i] - a, b - a));
      if (area < loss) {
        loss = area;
        drop = i;
      }
    }
    poly.erase(poly.begin() + static_cast<long>(drop));
    if (poly.size() < 3) throw Error(ErrorCode::InfeasibleFit, "polygon collapsed during simplification");
  }

  PolygonFit fit;
  fit.vertices = poly;
  fit.poly = detail::halfspaces(poly, space);
  return fit;
}

// Condition audit over every grid cell. Condition 1: no gridded point inside
// the polygon is outside the preferable set. Condition 2: every preferable
// point outside the polygon is within r_min of its boundary.
struct FitAudit {
  int inside_not_preferable = 0;
  int preferable_outside = 0;
  double max_outside_distance = 0.0;
  bool ok(double r_min) const { return inside_not_preferable == 0 && max_outside_distance <= r_min; }
};

// Distance from a Cartesian point to the boundary of a polygon given in the
// fitting space; boundary samples are supplied already mapped to Cartesian.
inline double distance_to_samples(const Vec2& p, const std::vector<Vec2>& boundary) {
  double d = kInf;
  for (size_t k = 0; k + 1 < boundary.size(); ++k) d = std::min(d, detail::segment_distance(p, boundary[k], boundary[k + 1]));
  return d;
}

// Cartesian image of the joint-space polygon boundary.
inline std::vector<Vec2> joint_polygon_boundary_image(const RobotModel& model, int leg, const std::vector<Vec2>& vertices,
                                                      int samples_per_edge = 2000) {
  std::vector<Vec2> out;
  for (size_t e = 0; e < vertices.size(); ++e) {
    const Vec2& a = vertices[e];
    const Vec2& b = vertices[(e + 1) % vertices.size()];
    for (int s = 0; s <= samples_per_edge; ++s) {
      const Vec2 h = a + (b - a) * (static_cast<double>(s) / samples_per_edge);
      try {
        out.push_back(solve_passive_joints(model, leg, h).foot);
      } catch (const Error&) {
        // the boundary left the closable region; the chain breaks here
      }
    }
  }
  if (!out.empty()) out.push_back(out.front());
  return out;
}

inline FitAudit audit_cartesian_fit(const MftField& field, const PolygonFit& fit) {
  FitAudit a;
  std::vector<Vec2> ring = fit.vertices;
  ring.push_back(fit.vertices.front());
  for (int j = 0; j < field.nz; ++j)
    for (int i = 0; i < field.nx; ++i) {
      const Vec2 p = field.point(i, j);
      const bool in = fit.poly.contains(p, 1e-9);
      const bool pref = field.at(i, j).preferable;
      if (in && !pref) ++a.inside_not_preferable;
      if (!in && pref) {
        ++a.preferable_outside;
        a.max_outside_distance = std::max(a.max_outside_distance, distance_to_samples(p, ring));
      }
    }
  return a;
}

inline FitAudit audit_joint_fit(const RobotModel& model, const MftField& field, const PolygonFit& fit) {
  FitAudit a;
  const std::vector<Vec2> image = joint_polygon_boundary_image(model, field.leg, fit.vertices);
  for (int j = 0; j < field.nz; ++j)
    for (int i = 0; i < field.nx; ++i) {
      const MftCell& c = field.at(i, j);
      if (!c.reachable) continue;
      const bool in = fit.poly.contains(c.hips, 1e-9);
      if (in && !c.preferable) ++a.inside_not_preferable;
      if (!in && c.preferable) {
        ++a.preferable_outside;
        a.max_outside_distance = std::max(a.max_outside_distance, distance_to_samples(field.point(i, j), image));
      }
    }
  return a;
}

inline double default_r_min(double resolution) { return 2.0 * std::sqrt(2.0) * resolution; }

inline PolygonFit fit_polyhedron_cartesian(const MftField& field, int max_faces = 6, double r_min = -1.0) {
  if (r_min < 0) r_min = default_r_min(field.resolution);
  std::vector<Vec2> good, bad;
  for (int j = 0; j < field.nz; ++j)
    for (int i = 0; i < field.nx; ++i) (field.at(i, j).preferable ? good : bad).push_back(field.point(i, j));
  if (good.empty()) throw Error(ErrorCode::EmptyPreferable, "no preferable cells");
  PolygonFit fit = fit_convex_polygon(good, bad, max_faces, PolySpace::FootCartesian);
  const FitAudit a = audit_cartesian_fit(field, fit);
  if (!a.ok(r_min)) throw Error(ErrorCode::InfeasibleFit, "fitted polygon misses preferable cells beyond r_min");
  return fit;
}

// Fit in the hip-angle plane through the leg's inverse kinematics.
inline PolygonFit fit_polyhedron_joint_space(const MftField& field, const RobotModel& model, int max_faces = 6,
                                             double r_min = -1.0) {
  if (r_min < 0) r_min = default_r_min(field.resolution);
  std::vector<Vec2> good, bad;
  for (const auto& c : field.cells) {
    if (!c.reachable) continue;
    (c.preferable ? good : bad).push_back(c.hips);
  }
  if (good.empty()) throw Error(ErrorCode::EmptyPreferable, "no preferable cells");
  PolygonFit fit = fit_convex_polygon(good, bad, max_faces, PolySpace::ActuatedJoint);
  const FitAudit a = audit_joint_fit(model, field, fit);
  if (!a.ok(r_min)) throw Error(ErrorCode::InfeasibleFit, "fitted polygon misses preferable cells beyond r_min");
  return fit;
}

// --- persisted map ---------------------------------------------------------------

inline constexpr int kPolyhedronSchemaVersion = 1;

struct PolyhedronFile {
  Polyhedron poly;
  std::uint64_t model_hash = 0;
  MftBounds bounds;
  double resolution = 0.01;
  double r_min = 0.0;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string polyhedron_to_text(const PolyhedronFile& f) {
  std::string s;
  char buf[64];
  s += "mftwbc-polyhedron\n";
  s += "schema_version " + std::to_string(kPolyhedronSchemaVersion) + "\n";
  std::snprintf(buf, sizeof buf, "%016" PRIx64, f.model_hash);
  s += std::string("model_hash ") + buf + "\n";
  s += "space " + std::string(to_string(f.poly.space)) + "\n";
  s += "bounds " + detail::fmt17(f.bounds.lti_min) + " " + detail::fmt17(f.bounds.lti_max) + " " +
       detail::fmt17(f.bounds.raci_min) + " " + detail::fmt17(f.bounds.raci_max) + "\n";
  s += "resolution " + detail::fmt17(f.resolution) + "\n";
  s += "r_min " + detail::fmt17(f.r_min) + "\n";
  s += "size " + std::to_string(f.poly.faces()) + " " + std::to_string(f.poly.dim()) + "\n";
  s += "witness";
  for (int k = 0; k < f.poly.witness.size(); ++k) s += " " + detail::fmt17(f.poly.witness(k));
  s += "\n";
  for (int i = 0; i < f.poly.faces(); ++i) {
    s += "row";
    for (int k = 0; k < f.poly.dim(); ++k) s += " " + detail::fmt17(f.poly.A(i, k));
    s += " " + detail::fmt17(f.poly.b(i)) + "\n";
  }
  s += "end\n";
  return s;
}

inline PolyhedronFile polyhedron_from_text(const std::string& text) {
  std::istringstream in(text);
  auto fail = [](const std::string& why) -> Error { return Error(ErrorCode::SchemaMismatch, "polyhedron file: " + why); };
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw fail(std::string("expected '") + key + "'");
  };
  auto number = [&]() {
    std::string tok;
    if (!(in >> tok)) throw fail("truncated");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw fail("bad number '" + tok + "'");
    return v;
  };
  std::string magic;
  if (!std::getline(in, magic) || magic != "mftwbc-polyhedron") throw fail("missing header");
  expect("schema_version");
  int version = 0;
  if (!(in >> version) || version != kPolyhedronSchemaVersion) throw fail("unsupported schema_version");
  PolyhedronFile f;
  expect("model_hash");
  std::string hash;
  if (!(in >> hash) || hash.size() != 16) throw fail("bad model_hash");
  try {
    f.model_hash = std::stoull(hash, nullptr, 16);
  } catch (const std::exception&) {
    throw fail("bad model_hash");
  }
  expect("space");
  std::string space;
  in >> space;
  f.poly.space = poly_space_from_string(space);
  expect("bounds");
  f.bounds.lti_min = number();
  f.bounds.lti_max = number();
  f.bounds.raci_min = number();
  f.bounds.raci_max = number();
  expect("resolution");
  f.resolution = number();
  expect("r_min");
  f.r_min = number();
  expect("size");
  int rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols <= 0 || rows > 100000 || cols > 1000) throw fail("bad size");
  expect("witness");
  f.poly.witness.resize(cols);
  for (int k = 0; k < cols; ++k) f.poly.witness(k) = number();
  f.poly.A.resize(rows, cols);
  f.poly.b.resize(rows);
  for (int i = 0; i < rows; ++i) {
    expect("row");
    for (int k = 0; k < cols; ++k) f.poly.A(i, k) = number();
    f.poly.b(i) = number();
  }
  expect("end");
  return f;
}

inline void save_polyhedron(const PolyhedronFile& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write " + path);
  out << polyhedron_to_text(f);
}

inline PolyhedronFile load_polyhedron(const std::string& path, std::optional<std::uint64_t> expected_hash = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  PolyhedronFile f = polyhedron_from_text(ss.str());
  if (expected_hash && *expected_hash != f.model_hash)
    throw Error(ErrorCode::ModelHashMismatch, "polyhedron was built for a different model");
  return f;
}

// Full offline pipeline for both legs: per-leg hexagons stacked over
// [q4, q6, q8, q10].
struct WorkspaceMap {
  std::array<MftField, kNumLegs> fields;
  std::array<PolygonFit, kNumLegs> fits;
  PolyhedronFile file;
};

inline WorkspaceMap build_workspace_map(const RobotModel& model, double resolution, const MftBounds& bounds,
                                        int max_faces = 6, double r_min = -1.0, unsigned threads = 0) {
  if (r_min < 0) r_min = default_r_min(resolution);
  WorkspaceMap w;
  std::vector<Polyhedron> parts;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    w.fields[leg] = grid_workspace(model, leg, resolution, kDefaultFootAcceleration, {}, threads);
    if (mark_preferable(w.fields[leg], bounds) == 0) throw Error(ErrorCode::EmptyPreferable, "no preferable cells");
    w.fits[leg] = fit_polyhedron_joint_space(w.fields[leg], model, max_faces, r_min);
    parts.push_back(w.fits[leg].poly);
  }
  w.file.poly = stack_polyhedra(parts);
  w.file.model_hash = model.hash();
  w.file.bounds = bounds;
  w.file.resolution = resolution;
  w.file.r_min = r_min;
  return w;
}

}  // namespace mftwbc

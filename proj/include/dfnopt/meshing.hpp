// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_MESHING_HPP
#define DFNOPT_MESHING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"
#include "dfnopt/triangulator.hpp"

namespace dfnopt {

enum class MeshMode { Nonconforming, TraceConforming };

struct MeshOptions {
  double max_area = 0.01;  // delta_h
  MeshMode mode = MeshMode::Nonconforming;
  double min_angle_deg = 22.0;
  std::size_t max_nodes = 2'000'000;
};

/// P1 triangulation of one fracture in its local frame.
struct FractureMesh {
  int fracture_id = 0;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  /// Polygon edges each node lies on (-1 when unused).
  std::vector<std::array<int, 2>> node_edges;
  /// node -> free DOF index, or -1 for Dirichlet nodes
  std::vector<int> dof;
  std::vector<int> free_nodes;
  std::vector<int> dirichlet_nodes;
  double max_area = 0.0;  // largest element area actually produced

  int num_nodes() const noexcept { return static_cast<int>(nodes.size()); }
  int num_dofs() const noexcept { return static_cast<int>(free_nodes.size()); }

  double area(int t) const {
    const auto& tr = triangles[static_cast<std::size_t>(t)];
    const Vec2 a = nodes[static_cast<std::size_t>(tr[1])] - nodes[static_cast<std::size_t>(tr[0])];
    const Vec2 b = nodes[static_cast<std::size_t>(tr[2])] - nodes[static_cast<std::size_t>(tr[0])];
    return 0.5 * detail::cross2(a, b);
  }

  /// Barycentric coordinates of p in triangle t.
  std::array<double, 3> barycentric(int t, const Vec2& p) const {
    const auto& tr = triangles[static_cast<std::size_t>(t)];
    const Vec2& a = nodes[static_cast<std::size_t>(tr[0])];
    const Vec2& b = nodes[static_cast<std::size_t>(tr[1])];
    const Vec2& c = nodes[static_cast<std::size_t>(tr[2])];
    const double d = detail::cross2(b - a, c - a);
    const double l1 = detail::cross2(p - a, c - a) / d;
    const double l2 = detail::cross2(b - a, p - a) / d;
    return {1.0 - l1 - l2, l1, l2};
  }

  bool on_edge(int node, int edge) const {
    const auto& m = node_edges[static_cast<std::size_t>(node)];
    return m[0] == edge || m[1] == edge;
  }
};

namespace detail {

inline bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d, double& t,
                           double& u) {
  const Vec2 r = b - a, s = d - c;
  const double den = cross2(r, s);
  if (std::abs(den) < 1e-14 * r.norm() * s.norm()) return false;
  t = cross2(c - a, s) / den;
  u = cross2(c - a, r) / den;
  const double e = 1e-12;
  return t > -e && t < 1 + e && u > -e && u < 1 + e;
}

/// Projects p onto the boundary of the counter-clockwise polygon when it lies
/// outside or within tol of an edge.
inline Vec2 snap_to_polygon(const std::vector<Vec2>& poly, const Vec2& p, double tol) {
  const std::size_t n = poly.size();
  bool outside = false;
  double best = std::numeric_limits<double>::infinity();
  Vec2 proj = p;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& a = poly[k];
    const Vec2 e = poly[(k + 1) % n] - a;
    if (cross2(e, p - a) < 0.0) outside = true;
    const double s = std::clamp(e.dot(p - a) / e.squaredNorm(), 0.0, 1.0);
    const Vec2 q = a + s * e;
    if ((q - p).norm() < best) {
      best = (q - p).norm();
      proj = q;
    }
  }
  return outside || best <= tol ? proj : p;
}

inline void classify_dofs(const Fracture& f, FractureMesh& mesh) {
  const auto nn = static_cast<std::size_t>(mesh.num_nodes());
  mesh.dof.assign(nn, -1);
  mesh.free_nodes.clear();
  mesh.dirichlet_nodes.clear();
  for (std::size_t v = 0; v < nn; ++v) {
    bool dir = false;
    for (int e : mesh.node_edges[v])
      if (e >= 0 && f.edge_bcs[static_cast<std::size_t>(e)].is_dirichlet()) dir = true;
    if (dir) {
      mesh.dirichlet_nodes.push_back(static_cast<int>(v));
    } else {
      mesh.dof[v] = static_cast<int>(mesh.free_nodes.size());
      mesh.free_nodes.push_back(static_cast<int>(v));
    }
  }
}

}  // namespace detail

/// Triangulates fracture f. In trace-conforming mode every trace in `traces`
/// becomes a chain of element edges; otherwise traces are ignored.
inline FractureMesh triangulate_fracture(const Fracture& f, const LocalFrame& frame,
                                         std::span<const Trace> traces, const MeshOptions& opt) {
  if (!(opt.max_area > 0.0)) throw ConfigError("mesh area bound must be positive");
  auto poly = local_polygon(f, frame);
  detail::Triangulator tri(poly, opt.max_nodes);

  if (opt.mode == MeshMode::TraceConforming && !traces.empty()) {
    std::vector<std::array<Vec2, 2>> segs;
    double diam = 0.0;
    for (const auto& a : poly)
      for (const auto& b : poly) diam = std::max(diam, (a - b).norm());
    for (const auto& t : traces)
      segs.push_back({detail::snap_to_polygon(poly, frame.to_local(t.endpoints[0]), 1e-9 * diam),
                      detail::snap_to_polygon(poly, frame.to_local(t.endpoints[1]), 1e-9 * diam)});
    // Points on each segment (parameters), including pairwise crossings.
    std::vector<std::vector<double>> params(segs.size(), std::vector<double>{0.0, 1.0});
    for (std::size_t a = 0; a < segs.size(); ++a)
      for (std::size_t b = a + 1; b < segs.size(); ++b) {
        double t = 0, u = 0;
        if (detail::segments_cross(segs[a][0], segs[a][1], segs[b][0], segs[b][1], t, u)) {
          params[a].push_back(std::clamp(t, 0.0, 1.0));
          params[b].push_back(std::clamp(u, 0.0, 1.0));
        }
      }
    std::vector<std::vector<int>> chain(segs.size());
    for (std::size_t a = 0; a < segs.size(); ++a) {
      auto& ps = params[a];
      std::sort(ps.begin(), ps.end());
      ps.erase(std::unique(ps.begin(), ps.end(), [](double x, double y) { return y - x < 1e-12; }),
               ps.end());
      for (double t : ps) chain[a].push_back(tri.insert(segs[a][0] + t * (segs[a][1] - segs[a][0])));
    }
    for (std::size_t a = 0; a < segs.size(); ++a)
      for (std::size_t k = 0; k + 1 < chain[a].size(); ++k)
        if (chain[a][k] != chain[a][k + 1]) tri.enforce_segment(chain[a][k], chain[a][k + 1], static_cast<int>(a));
  }

  const double poly_area = detail::polygon_area(poly);
  tri.refine(opt.max_area, opt.min_angle_deg, 1e-3 * std::min(opt.max_area, poly_area));

  FractureMesh mesh;
  mesh.fracture_id = f.id;
  mesh.nodes = tri.points();
  mesh.node_edges = tri.vertex_marks();
  for (const auto& t : tri.triangles()) {
    if (!t.alive) continue;
    mesh.triangles.push_back(t.v);
  }
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
    mesh.max_area = std::max(mesh.max_area, mesh.area(t));
  detail::classify_dofs(f, mesh);
  return mesh;
}

inline FractureMesh triangulate_fracture(const FractureNetwork& net, int i, const MeshOptions& opt) {
  std::vector<Trace> on;
  for (int m : net.incidence(i)) on.push_back(net.trace(m));
  return triangulate_fracture(net.fracture(i), net.frame(i), on, opt);
}

/// Breakpoints (arc length from the first trace endpoint) where a trace
/// crosses element edges of one fracture mesh. Between consecutive
/// breakpoints the trace lies in `triangle[k]`.
struct TracePartition {
  int trace_id = 0;
  int fracture_id = 0;
  std::vector<double> breakpoints;
  std::vector<int> triangle;
  Vec2 start = Vec2::Zero();  // local coordinates of the trace endpoints
  Vec2 end = Vec2::Zero();

  int num_elements() const noexcept { return static_cast<int>(triangle.size()); }
  double length() const noexcept { return breakpoints.empty() ? 0.0 : breakpoints.back(); }
  Vec2 point_at(double s) const { return start + (s / length()) * (end - start); }
  /// Index of the piece containing s (pieces are closed on the left).
  int piece_at(double s) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
    int k = static_cast<int>(it - breakpoints.begin()) - 1;
    return std::clamp(k, 0, num_elements() - 1);
  }
};

inline TracePartition induced_trace_partition(const FractureMesh& mesh, const LocalFrame& frame,
                                              const Trace& trace) {
  TracePartition part;
  part.trace_id = trace.id;
  part.fracture_id = mesh.fracture_id;
  part.start = frame.to_local(trace.endpoints[0]);
  part.end = frame.to_local(trace.endpoints[1]);
  const double len = trace.length();
  const Vec2 a = part.start, d = part.end - part.start;
  const Vec2 lo = a.cwiseMin(part.end), hi = a.cwiseMax(part.end);
  Vec2 mlo = mesh.nodes.front(), mhi = mlo;
  for (const auto& n : mesh.nodes) {
    mlo = mlo.cwiseMin(n);
    mhi = mhi.cwiseMax(n);
  }
  const double eps = 1e-11 * std::max(len, (mhi - mlo).norm());
  const double gap = 1e-8 * (mhi - mlo).norm();

  struct Piece {
    double t0, t1;
    int tri;
  };
  std::vector<Piece> pieces;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
    Vec2 bmin = mesh.nodes[static_cast<std::size_t>(tr[0])], bmax = bmin;
    for (int v : tr) {
      bmin = bmin.cwiseMin(mesh.nodes[static_cast<std::size_t>(v)]);
      bmax = bmax.cwiseMax(mesh.nodes[static_cast<std::size_t>(v)]);
    }
    if ((bmin.array() > hi.array() + eps).any() || (bmax.array() < lo.array() - eps).any()) continue;
    double t0 = 0.0, t1 = 1.0;
    bool empty = false;
    for (int k = 0; k < 3 && !empty; ++k) {
      const Vec2& p = mesh.nodes[static_cast<std::size_t>(tr[static_cast<std::size_t>(k)])];
      const Vec2& q = mesh.nodes[static_cast<std::size_t>(tr[static_cast<std::size_t>((k + 1) % 3)])];
      const Vec2 e = q - p;
      const Vec2 nin = Vec2(-e.y(), e.x()).normalized();
      const double dist = nin.dot(a - p);
      const double rate = nin.dot(d);
      if (std::abs(rate) < gap) {
        if (dist < -gap) empty = true;
        continue;
      }
      const double t = -dist / rate;
      if (rate > 0)
        t0 = std::max(t0, t);
      else
        t1 = std::min(t1, t);
    }
    if (empty || (t1 - t0) * len <= eps) continue;
    pieces.push_back({t0, t1, t});
  }
  if (pieces.empty()) throw GeometryError("trace " + std::to_string(trace.id) + " does not cross the mesh of fracture " + std::to_string(mesh.fracture_id));

  std::vector<double> bp;
  for (const auto& p : pieces) {
    bp.push_back(p.t0);
    bp.push_back(p.t1);
  }
  std::sort(bp.begin(), bp.end());
  std::vector<double> merged;
  for (double t : bp) {
    t = std::clamp(t, 0.0, 1.0);
    if (merged.empty() || (t - merged.back()) * len > eps) merged.push_back(t);
  }
  merged.front() = 0.0;
  if ((1.0 - merged.back()) * len > gap)
    merged.push_back(1.0);
  else
    merged.back() = 1.0;

  for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
    const double mid = 0.5 * (merged[k] + merged[k + 1]);
    int owner = -1;
    for (const auto& p : pieces)
      if (p.t0 - 1e-12 <= mid && mid <= p.t1 + 1e-12) {
        owner = p.tri;
        break;
      }
    if (owner < 0)
      throw GeometryError("trace " + std::to_string(trace.id) + " leaves the mesh of fracture " +
                          std::to_string(mesh.fracture_id));
    part.triangle.push_back(owner);
  }
  part.breakpoints.reserve(merged.size());
  for (double t : merged) part.breakpoints.push_back(t * len);
  part.breakpoints.back() = len;
  return part;
}

enum class TraceMeshKind { Lambda, Psi };

/// Uniform partition of a trace carrying piecewise-constant (lambda) or
/// continuous piecewise-linear (psi) basis functions.
struct TraceMesh {
  int trace_id = 0;
  TraceMeshKind kind = TraceMeshKind::Lambda;
  std::vector<double> breakpoints;

  int num_elements() const noexcept { return static_cast<int>(breakpoints.size()) - 1; }
  int dof_count() const noexcept {
    return kind == TraceMeshKind::Lambda ? num_elements() : static_cast<int>(breakpoints.size());
  }
  double length() const noexcept { return breakpoints.back(); }
  int element_at(double s) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
    return std::clamp(static_cast<int>(it - breakpoints.begin()) - 1, 0, num_elements() - 1);
  }
};

/// Element count of a trace mesh from the induced counts and ratio.
inline int trace_mesh_size(int induced_max, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0) throw ConfigError("trace mesh ratio must lie in (0, 1]");
  return std::max(1, static_cast<int>(std::lround(ratio * induced_max)));
}

inline TraceMesh build_trace_mesh(const Trace& t, const TracePartition& a, const TracePartition& b,
                                  double ratio, TraceMeshKind kind) {
  const int n = trace_mesh_size(std::max(a.num_elements(), b.num_elements()), ratio);
  TraceMesh tm;
  tm.trace_id = t.id;
  tm.kind = kind;
  const double len = t.length();
  tm.breakpoints.resize(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) tm.breakpoints[static_cast<std::size_t>(k)] = len * k / n;
  tm.breakpoints.back() = len;
  return tm;
}

/// Sorted union of breakpoint lists (duplicates within tol merged).
inline std::vector<double> merge_breakpoints(std::initializer_list<const std::vector<double>*> lists,
                                             double tol) {
  std::vector<double> all;
  for (const auto* l : lists) all.insert(all.end(), l->begin(), l->end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double s : all)
    if (out.empty() || s - out.back() > tol) out.push_back(s);
  return out;
}

}  // namespace dfnopt

#endif  // DFNOPT_MESHING_HPP

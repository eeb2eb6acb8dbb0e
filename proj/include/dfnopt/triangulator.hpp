// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_TRIANGULATOR_HPP
#define DFNOPT_TRIANGULATOR_HPP

// Incremental constrained Delaunay triangulation of a convex polygon with
// interior constraint segments, refined by circumcenter insertion until an
// area bound and a minimum-angle bound hold.

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <vector>

#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"

namespace dfnopt::detail {

class Triangulator {
 public:
  /// Edge tags: 0 = free, k+1 = polygon edge k, -(c+1) = interior constraint c.
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};  // neighbor across the edge opposite v[k]
    std::array<int, 3> tag{};
    bool alive = true;
  };

  Triangulator(const std::vector<Vec2>& polygon, std::size_t max_nodes)
      : max_nodes_(max_nodes) {
    const std::size_t n = polygon.size();
    double diam = 0.0;
    for (const auto& a : polygon)
      for (const auto& b : polygon) diam = std::max(diam, (a - b).norm());
    scale_ = diam;
    eps_orient_ = 1e-13 * diam * diam;
    for (std::size_t k = 0; k < n; ++k) {
      add_vertex(polygon[k]);
      vmark_[k] = {static_cast<int>((k + n - 1) % n), static_cast<int>(k)};
    }
    // Fan from vertex 0.
    for (std::size_t k = 1; k + 1 < n; ++k) {
      Tri t;
      t.v = {0, static_cast<int>(k), static_cast<int>(k + 1)};
      tris_.push_back(t);
    }
    const int nt = static_cast<int>(tris_.size());
    for (int k = 0; k < nt; ++k) {
      Tri& t = tris_[static_cast<std::size_t>(k)];
      // edge opposite v0 is polygon edge k+1
      t.tag[0] = k + 2;
      t.nb[1] = k + 1 < nt ? k + 1 : -1;  // edge (v2, v0)
      if (k + 1 >= nt) t.tag[1] = static_cast<int>(n);  // polygon edge n-1
      t.nb[2] = k - 1;                                  // edge (v0, v1)
      if (k == 0) t.tag[2] = 1;                         // polygon edge 0
    }
    for (int k = 0; k < nt; ++k)
      for (int j = 0; j < 3; ++j) vtri_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(k)].v[static_cast<std::size_t>(j)])] = k;
  }

  const std::vector<Vec2>& points() const noexcept { return pts_; }
  const std::vector<Tri>& triangles() const noexcept { return tris_; }
  /// Polygon edges each vertex lies on (-1 when unused).
  const std::vector<std::array<int, 2>>& vertex_marks() const noexcept { return vmark_; }

  /// Inserts p (interior or on the polygon boundary) and returns its vertex id.
  int insert(const Vec2& p) {
    Location loc = locate(p, last_tri(), false);
    if (loc.kind == Location::Outside)
      throw GeometryError("triangulator: point outside the polygon");
    if (loc.kind == Location::OnVertex) return loc.vertex;
    return insert_at(p, loc);
  }

  /// Makes segment (a, b) a union of constrained edges.
  void enforce_segment(int a, int b, int constraint) {
    enforce_rec(a, b, -(constraint + 1), 0);
  }

  /// Circumcenter refinement until every triangle has area <= max_area and
  /// minimum angle >= min_angle_deg (the angle bound is only enforced on
  /// triangles larger than quality_floor).
  void refine(double max_area, double min_angle_deg, double quality_floor) {
    const double sin_min = std::sin(min_angle_deg * std::numbers::pi / 180.0);
    std::deque<int> queue;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) queue.push_back(t);
    std::vector<int> fresh;
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      if (!tris_[static_cast<std::size_t>(t)].alive) continue;
      if (!is_bad(t, max_area, sin_min, quality_floor)) continue;
      const Vec2 c = circumcenter(t);
      fresh.clear();
      Location loc = locate(c, t, true);
      if (loc.kind == Location::Blocked || loc.kind == Location::Outside) {
        split_edge(loc.tri, loc.edge, fresh);
      } else if (loc.kind == Location::OnVertex) {
        continue;  // degenerate; cannot improve this triangle
      } else {
        std::vector<int> cavity;
        build_cavity(c, loc, cavity);
        int enc_tri = -1, enc_edge = -1;
        find_encroached(c, cavity, enc_tri, enc_edge);
        if (enc_tri >= 0)
          split_edge(enc_tri, enc_edge, fresh);
        else
          commit(c, loc, cavity, fresh);
      }
      for (int f : fresh) queue.push_back(f);
      if (tris_[static_cast<std::size_t>(t)].alive) queue.push_back(t);
    }
  }

  double triangle_area(int t) const {
    const Tri& tr = tris_[static_cast<std::size_t>(t)];
    return 0.5 * orient(pts_[static_cast<std::size_t>(tr.v[0])], pts_[static_cast<std::size_t>(tr.v[1])],
                        pts_[static_cast<std::size_t>(tr.v[2])]);
  }

 private:
  struct Location {
    enum Kind { Inside, OnEdge, OnVertex, Outside, Blocked } kind = Inside;
    int tri = -1;
    int edge = -1;
    int vertex = -1;
  };

  static double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  }

  static bool in_circle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const long double adx = a.x() - d.x(), ady = a.y() - d.y();
    const long double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const long double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const long double det = (adx * adx + ady * ady) * (bdx * cdy - bdy * cdx) -
                            (bdx * bdx + bdy * bdy) * (adx * cdy - ady * cdx) +
                            (cdx * cdx + cdy * cdy) * (adx * bdy - ady * bdx);
    return det > 0;
  }

  const Vec2& P(int v) const { return pts_[static_cast<std::size_t>(v)]; }
  Tri& T(int t) { return tris_[static_cast<std::size_t>(t)]; }
  const Tri& T(int t) const { return tris_[static_cast<std::size_t>(t)]; }

  int add_vertex(const Vec2& p) {
    if (pts_.size() >= max_nodes_)
      throw ResourceError("mesh node count exceeds the configured cap of " + std::to_string(max_nodes_));
    pts_.push_back(p);
    vmark_.push_back({-1, -1});
    vtri_.push_back(-1);
    return static_cast<int>(pts_.size()) - 1;
  }

  int last_tri() const {
    for (int t = static_cast<int>(tris_.size()) - 1; t >= 0; --t)
      if (T(t).alive) return t;
    return 0;
  }

  Vec2 circumcenter(int t) const {
    const Vec2& a = P(T(t).v[0]);
    const Vec2 b = P(T(t).v[1]) - a;
    const Vec2 c = P(T(t).v[2]) - a;
    const double d = 2.0 * (b.x() * c.y() - b.y() * c.x());
    const double bb = b.squaredNorm(), cc = c.squaredNorm();
    return a + Vec2((c.y() * bb - b.y() * cc) / d, (b.x() * cc - c.x() * bb) / d);
  }

  bool is_bad(int t, double max_area, double sin_min, double quality_floor) const {
    const double area = triangle_area(t);
    if (area > max_area) return true;
    if (area <= quality_floor) return false;
    // sin of the smallest angle = 2*area / (product of the two longest edges)
    const Tri& tr = T(t);
    std::array<double, 3> len{};
    for (int k = 0; k < 3; ++k)
      len[static_cast<std::size_t>(k)] = (P(tr.v[static_cast<std::size_t>((k + 1) % 3)]) - P(tr.v[static_cast<std::size_t>((k + 2) % 3)])).norm();
    std::sort(len.begin(), len.end());
    return 2.0 * area / (len[1] * len[2]) < sin_min;
  }

  /// Visibility walk towards p. With stop_at_constraints the walk reports
  /// the first constrained edge it would cross.
  Location locate(const Vec2& p, int start, bool stop_at_constraints) {
    int t = start;
    std::uint32_t rng = 12345u;
    const std::size_t limit = 4 * tris_.size() + 100;
    for (std::size_t step = 0; step < limit; ++step) {
      const Tri& tr = T(t);
      rng = rng * 1664525u + 1013904223u;
      const int off = static_cast<int>((rng >> 16) % 3);
      bool moved = false;
      for (int j = 0; j < 3; ++j) {
        const int k = (j + off) % 3;
        const Vec2& a = P(tr.v[static_cast<std::size_t>((k + 1) % 3)]);
        const Vec2& b = P(tr.v[static_cast<std::size_t>((k + 2) % 3)]);
        if (orient(a, b, p) < -eps_orient_) {
          const auto ku = static_cast<std::size_t>(k);
          if (tr.nb[ku] < 0) return {Location::Outside, t, k, -1};
          if (stop_at_constraints && tr.tag[ku] != 0) return {Location::Blocked, t, k, -1};
          t = tr.nb[ku];
          moved = true;
          break;
        }
      }
      if (moved) continue;
      // p is in the closure of t.
      for (int k = 0; k < 3; ++k) {
        const int v = tr.v[static_cast<std::size_t>(k)];
        if ((P(v) - p).norm() <= 1e-11 * scale_) return {Location::OnVertex, t, -1, v};
      }
      for (int k = 0; k < 3; ++k) {
        const Vec2& a = P(tr.v[static_cast<std::size_t>((k + 1) % 3)]);
        const Vec2& b = P(tr.v[static_cast<std::size_t>((k + 2) % 3)]);
        if (std::abs(orient(a, b, p)) <= eps_orient_) return {Location::OnEdge, t, k, -1};
      }
      return {Location::Inside, t, -1, -1};
    }
    throw InternalError("triangulator: point location did not terminate");
  }

  void build_cavity(const Vec2& p, const Location& loc, std::vector<int>& cavity) {
    ++stamp_;
    if (mark_.size() < tris_.size()) mark_.resize(tris_.size(), 0);
    cavity.clear();
    std::vector<int> seeds{loc.tri};
    if (loc.kind == Location::OnEdge) {
      const int n = T(loc.tri).nb[static_cast<std::size_t>(loc.edge)];
      if (n >= 0) seeds.push_back(n);
    }
    for (int s : seeds) {
      mark_[static_cast<std::size_t>(s)] = stamp_;
      cavity.push_back(s);
    }
    for (std::size_t q = 0; q < cavity.size(); ++q) {
      const Tri& tr = T(cavity[q]);
      for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const int n = tr.nb[ku];
        if (n < 0 || tr.tag[ku] != 0 || mark_[static_cast<std::size_t>(n)] == stamp_) continue;
        const Tri& nt = T(n);
        if (in_circle(P(nt.v[0]), P(nt.v[1]), P(nt.v[2]), p)) {
          mark_[static_cast<std::size_t>(n)] = stamp_;
          cavity.push_back(n);
        }
      }
    }
    // Keep the cavity star-shaped with respect to p.
    const std::size_t nseeds = seeds.size();
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t q = nseeds; q < cavity.size(); ++q) {
        const int c = cavity[q];
        const Tri& tr = T(c);
        for (int k = 0; k < 3; ++k) {
          const int n = tr.nb[static_cast<std::size_t>(k)];
          if (n >= 0 && mark_[static_cast<std::size_t>(n)] == stamp_) continue;
          const Vec2& a = P(tr.v[static_cast<std::size_t>((k + 1) % 3)]);
          const Vec2& b = P(tr.v[static_cast<std::size_t>((k + 2) % 3)]);
          if (orient(a, b, p) <= eps_orient_) {
            mark_[static_cast<std::size_t>(c)] = 0;
            cavity.erase(cavity.begin() + static_cast<std::ptrdiff_t>(q));
            changed = true;
            break;
          }
        }
        if (changed) break;
      }
    }
  }

  void find_encroached(const Vec2& p, const std::vector<int>& cavity, int& et, int& ee) const {
    et = ee = -1;
    for (int c : cavity) {
      const Tri& tr = T(c);
      for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (tr.tag[ku] == 0) continue;
        const Vec2& a = P(tr.v[(ku + 1) % 3]);
        const Vec2& b = P(tr.v[(ku + 2) % 3]);
        if ((p - 0.5 * (a + b)).norm() < 0.5 * (b - a).norm()) {
          et = c;
          ee = k;
          return;
        }
      }
    }
  }

  int insert_at(const Vec2& p, const Location& loc) {
    std::vector<int> cavity, fresh;
    build_cavity(p, loc, cavity);
    return commit(p, loc, cavity, fresh);
  }

  void split_edge(int t, int k, std::vector<int>& fresh) {
    const Tri& tr = T(t);
    const Vec2 m = 0.5 * (P(tr.v[static_cast<std::size_t>((k + 1) % 3)]) + P(tr.v[static_cast<std::size_t>((k + 2) % 3)]));
    Location loc{Location::OnEdge, t, k, -1};
    std::vector<int> cavity;
    build_cavity(m, loc, cavity);
    commit(m, loc, cavity, fresh);
  }

  int commit(const Vec2& p, const Location& loc, const std::vector<int>& cavity,
             std::vector<int>& fresh) {
    int split_a = -1, split_b = -1, split_tag = 0;
    bool boundary_split = false;
    if (loc.kind == Location::OnEdge) {
      const Tri& tr = T(loc.tri);
      const auto ke = static_cast<std::size_t>(loc.edge);
      split_a = tr.v[(ke + 1) % 3];
      split_b = tr.v[(ke + 2) % 3];
      split_tag = tr.tag[ke];
      boundary_split = tr.nb[ke] < 0;
    }
    const int pv = add_vertex(p);
    if (split_tag > 0) vmark_[static_cast<std::size_t>(pv)] = {split_tag - 1, -1};

    struct BEdge {
      int a, b, outside, tag;
    };
    std::vector<BEdge> edges;
    for (int c : cavity) {
      const Tri& tr = T(c);
      for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const int n = tr.nb[ku];
        if (n >= 0 && mark_[static_cast<std::size_t>(n)] == stamp_) continue;
        const int a = tr.v[(ku + 1) % 3];
        const int b = tr.v[(ku + 2) % 3];
        if (boundary_split && c == loc.tri && k == loc.edge) continue;
        edges.push_back({a, b, n, tr.tag[ku]});
      }
    }
    // Reuse cavity slots, then append.
    std::vector<int> ids;
    ids.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (e < cavity.size()) {
        ids.push_back(cavity[e]);
      } else {
        tris_.emplace_back();
        mark_.push_back(0);
        ids.push_back(static_cast<int>(tris_.size()) - 1);
      }
    }
    for (std::size_t e = edges.size(); e < cavity.size(); ++e) {
      T(cavity[e]).alive = false;
      mark_[static_cast<std::size_t>(cavity[e])] = 0;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      Tri& nt = T(ids[e]);
      nt.alive = true;
      nt.v = {edges[e].a, edges[e].b, pv};
      nt.nb = {-1, -1, edges[e].outside};
      nt.tag = {0, 0, edges[e].tag};
      if (split_a >= 0) {
        if (edges[e].b == split_a || edges[e].b == split_b) nt.tag[0] = split_tag;
        if (edges[e].a == split_a || edges[e].a == split_b) nt.tag[1] = split_tag;
      }
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const int id = ids[e];
      // outside link
      if (edges[e].outside >= 0) {
        Tri& o = T(edges[e].outside);
        for (int k = 0; k < 3; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          const int oa = o.v[(ku + 1) % 3], ob = o.v[(ku + 2) % 3];
          if (oa == edges[e].b && ob == edges[e].a) o.nb[ku] = id;
        }
      }
      for (std::size_t f = 0; f < edges.size(); ++f) {
        if (edges[f].a == edges[e].b) T(id).nb[0] = ids[f];
        if (edges[f].b == edges[e].a) T(id).nb[1] = ids[f];
      }
      for (int v : T(id).v) vtri_[static_cast<std::size_t>(v)] = id;
      fresh.push_back(id);
    }
    for (std::size_t e = 0; e < edges.size(); ++e) mark_[static_cast<std::size_t>(ids[e])] = 0;
    return pv;
  }

  bool find_edge(int a, int b, int& t_out, int& k_out) const {
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      const Tri& tr = T(t);
      if (!tr.alive) continue;
      for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const int x = tr.v[(ku + 1) % 3], y = tr.v[(ku + 2) % 3];
        if ((x == a && y == b) || (x == b && y == a)) {
          t_out = t;
          k_out = k;
          return true;
        }
      }
    }
    return false;
  }

  void set_tag(int t, int k, int tag) {
    Tri& tr = T(t);
    tr.tag[static_cast<std::size_t>(k)] = tag;
    const int n = tr.nb[static_cast<std::size_t>(k)];
    if (n < 0) return;
    const int a = tr.v[static_cast<std::size_t>((k + 1) % 3)];
    const int b = tr.v[static_cast<std::size_t>((k + 2) % 3)];
    Tri& o = T(n);
    for (int j = 0; j < 3; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (o.v[(ju + 1) % 3] == b && o.v[(ju + 2) % 3] == a) o.tag[ju] = tag;
    }
  }

  void enforce_rec(int a, int b, int tag, int depth) {
    if (depth > 60) throw InternalError("triangulator: segment recovery did not converge");
    int t = -1, k = -1;
    if (find_edge(a, b, t, k)) {
      set_tag(t, k, tag);
      return;
    }
    const Vec2 m = 0.5 * (P(a) + P(b));
    const int vm = insert(m);
    enforce_rec(a, vm, tag, depth + 1);
    enforce_rec(vm, b, tag, depth + 1);
  }

  std::size_t max_nodes_;
  double scale_ = 1.0;
  double eps_orient_ = 0.0;
  std::vector<Vec2> pts_;
  std::vector<std::array<int, 2>> vmark_;
  std::vector<int> vtri_;
  std::vector<Tri> tris_;
  std::vector<int> mark_;
  int stamp_ = 0;
};

}  // namespace dfnopt::detail

#endif  // DFNOPT_TRIANGULATOR_HPP

// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_GEOMETRY_HPP
#define DFNOPT_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dfnopt/error.hpp"

namespace dfnopt {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using ScalarFunction = std::function<double(const Vec3&)>;

/// A scalar field on a fracture: either a constant or a named analytic
/// expression (optionally multiplied by a factor). The name is kept so that
/// networks serialize back to the text format unchanged.
class Field {
 public:
  Field() = default;

  static Field constant(double value) {
    Field f;
    f.constant_ = value;
    return f;
  }

  static Field expression(std::string name, ScalarFunction fn, double factor = 1.0) {
    Field f;
    f.name_ = std::move(name);
    f.fn_ = std::make_shared<ScalarFunction>(std::move(fn));
    f.factor_ = factor;
    return f;
  }

  double operator()(const Vec3& p) const {
    if (!fn_) return constant_;
    return factor_ * (*fn_)(p);
  }

  bool is_constant() const noexcept { return !fn_; }
  double constant_value() const noexcept { return constant_; }
  const std::string& name() const noexcept { return name_; }
  double factor() const noexcept { return factor_; }
  bool is_zero() const noexcept { return !fn_ && constant_ == 0.0; }

  Field scaled(double s) const {
    Field f = *this;
    if (fn_)
      f.factor_ *= s;
    else
      f.constant_ *= s;
    return f;
  }

 private:
  double constant_ = 0.0;
  std::string name_;
  std::shared_ptr<ScalarFunction> fn_;
  double factor_ = 1.0;
};

struct BoundaryCondition {
  enum class Kind { Dirichlet, Neumann };
  Kind kind = Kind::Neumann;
  Field value;  // head for Dirichlet, prescribed normal flux for Neumann

  static BoundaryCondition dirichlet(Field v = Field::constant(0.0)) { return {Kind::Dirichlet, std::move(v)}; }
  static BoundaryCondition neumann(Field v = Field::constant(0.0)) {
    return {Kind::Neumann, std::move(v)};
  }
  bool is_dirichlet() const noexcept { return kind == Kind::Dirichlet; }
};

/// Planar convex polygon in 3D. Edge k joins vertices k and k+1 (mod n).
struct Fracture {
  int id = 0;
  std::vector<Vec3> vertices;
  /// Transmissivity tensor in the local frame returned by local_frame().
  Eigen::Matrix2d transmissivity = Eigen::Matrix2d::Identity();
  std::vector<BoundaryCondition> edge_bcs;
  Field source = Field::constant(0.0);

  double diameter() const {
    double d = 0.0;
    for (std::size_t a = 0; a < vertices.size(); ++a)
      for (std::size_t b = a + 1; b < vertices.size(); ++b)
        d = std::max(d, (vertices[a] - vertices[b]).norm());
    return d;
  }

  bool has_dirichlet() const {
    return std::any_of(edge_bcs.begin(), edge_bcs.end(),
                       [](const BoundaryCondition& bc) { return bc.is_dirichlet(); });
  }
};

/// Orthonormal in-plane frame of a fracture.
struct LocalFrame {
  Vec3 origin = Vec3::Zero();
  std::array<Vec3, 2> basis{Vec3::UnitX(), Vec3::UnitY()};
  Vec3 normal = Vec3::UnitZ();

  Vec2 to_local(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {d.dot(basis[0]), d.dot(basis[1])};
  }
  Vec3 to_global(const Vec2& q) const { return origin + q.x() * basis[0] + q.y() * basis[1]; }
  double offset(const Vec3& p) const { return (p - origin).dot(normal); }
};

/// Intersection segment of two fractures.
struct Trace {
  int id = 0;
  std::array<Vec3, 2> endpoints{Vec3::Zero(), Vec3::Zero()};
  std::pair<int, int> fracture_pair{0, 1};  // first < second

  double length() const { return (endpoints[1] - endpoints[0]).norm(); }
  Vec3 point_at(double s) const {
    const double len = length();
    return endpoints[0] + (s / len) * (endpoints[1] - endpoints[0]);
  }
  bool touches(int fracture) const {
    return fracture_pair.first == fracture || fracture_pair.second == fracture;
  }
  int other(int fracture) const {
    return fracture == fracture_pair.first ? fracture_pair.second : fracture_pair.first;
  }
};

/// (-1)^chi with chi = 1 for the higher-indexed fracture of the trace.
inline double trace_sign(int fracture, const Trace& t) {
  return fracture == t.fracture_pair.second ? -1.0 : 1.0;
}

namespace detail {

inline Vec3 newell_normal(const std::vector<Vec3>& v) {
  Vec3 n = Vec3::Zero();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec3& a = v[k];
    const Vec3& b = v[(k + 1) % v.size()];
    n.x() += (a.y() - b.y()) * (a.z() + b.z());
    n.y() += (a.z() - b.z()) * (a.x() + b.x());
    n.z() += (a.x() - b.x()) * (a.y() + b.y());
  }
  return n;
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double polygon_area(const std::vector<Vec2>& p) {
  double a = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) a += cross2(p[k], p[(k + 1) % p.size()]);
  return 0.5 * a;
}

}  // namespace detail

/// Origin at the first vertex; first basis vector along the first
/// non-degenerate edge; normal from Newell's method (right-handed with the
/// vertex order).
inline LocalFrame local_frame(const Fracture& f) {
  if (f.vertices.size() < 3) throw GeometryError("polygon needs >= 3 vertices");
  const double diam = f.diameter();
  const Vec3 n = detail::newell_normal(f.vertices);
  if (diam <= 0.0 || n.norm() <= 1e-12 * diam * diam)
    throw GeometryError("fracture " + std::to_string(f.id) + ": degenerate polygon (zero area)");
  LocalFrame fr;
  fr.origin = f.vertices[0];
  fr.normal = n.normalized();
  Vec3 e0 = Vec3::Zero();
  for (std::size_t k = 1; k < f.vertices.size(); ++k) {
    const Vec3 d = f.vertices[k] - f.vertices[0];
    if (d.norm() > 1e-12 * diam) {
      e0 = d;
      break;
    }
  }
  e0 -= e0.dot(fr.normal) * fr.normal;
  fr.basis[0] = e0.normalized();
  fr.basis[1] = fr.normal.cross(fr.basis[0]).normalized();
  return fr;
}

/// Tolerance used for "lies in the fracture plane" checks.
inline double plane_tolerance(const Fracture& f) { return 1e-10 * f.diameter(); }

inline Vec2 map_to_local(const Fracture& f, const LocalFrame& fr, const Vec3& p) {
  if (std::abs(fr.offset(p)) > plane_tolerance(f))
    throw GeometryError("point lies off the plane of fracture " + std::to_string(f.id));
  return fr.to_local(p);
}

inline Vec2 map_to_local(const Fracture& f, const Vec3& p) {
  return map_to_local(f, local_frame(f), p);
}

/// Local 2D polygon, counter-clockwise with respect to the frame.
inline std::vector<Vec2> local_polygon(const Fracture& f, const LocalFrame& fr) {
  std::vector<Vec2> p;
  p.reserve(f.vertices.size());
  for (const auto& v : f.vertices) p.push_back(fr.to_local(v));
  return p;
}

/// Checks the fracture invariants; throws GeometryError on violation.
inline void validate_fracture(const Fracture& f) {
  const std::string who = "fracture " + std::to_string(f.id) + ": ";
  if (f.vertices.size() < 3) throw GeometryError(who + "polygon needs >= 3 vertices");
  const LocalFrame fr = local_frame(f);
  const double tol = plane_tolerance(f);
  for (const auto& v : f.vertices)
    if (std::abs(fr.offset(v)) > tol) throw GeometryError(who + "vertices are not coplanar");
  const auto poly = local_polygon(f, fr);
  const std::size_t n = poly.size();
  const double diam = f.diameter();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& a = poly[k];
    const Vec2& b = poly[(k + 1) % n];
    const Vec2& c = poly[(k + 2) % n];
    if ((b - a).norm() <= 1e-12 * diam) throw GeometryError(who + "repeated vertex");
    if (detail::cross2(b - a, c - b) <= 1e-12 * diam * diam)
      throw GeometryError(who + "polygon must be convex with no collinear vertices");
  }
  const Eigen::Matrix2d& K = f.transmissivity;
  if (std::abs(K(0, 1) - K(1, 0)) > 1e-14 * K.norm())
    throw GeometryError(who + "transmissivity is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(K);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw GeometryError(who + "transmissivity is not positive definite");
  if (f.edge_bcs.size() != n)
    throw GeometryError(who + "expected one boundary condition per edge");
}

namespace detail {

/// Parameter interval of the line o + t*u (in the local frame) inside the
/// convex CCW polygon. Returns nullopt when the line misses it.
inline std::optional<std::pair<double, double>> clip_line(const std::vector<Vec2>& poly,
                                                           const Vec2& o, const Vec2& u,
                                                           double eps) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& a = poly[k];
    const Vec2& b = poly[(k + 1) % poly.size()];
    const Vec2 e = b - a;
    const Vec2 inward(-e.y(), e.x());  // CCW polygon: left side is inside
    const Vec2 nin = inward.normalized();
    const double dist = nin.dot(o - a);
    const double rate = nin.dot(u);
    if (std::abs(rate) < 1e-14) {
      if (dist < -eps) return std::nullopt;
      continue;
    }
    const double t = -dist / rate;
    if (rate > 0)
      lo = std::max(lo, t);
    else
      hi = std::min(hi, t);
  }
  if (lo > hi) return std::nullopt;
  return std::make_pair(lo, hi);
}

/// Sutherland-Hodgman clip of convex `subject` by convex CCW `clip`.
inline std::vector<Vec2> clip_polygon(std::vector<Vec2> subject, const std::vector<Vec2>& clip) {
  for (std::size_t k = 0; k < clip.size() && !subject.empty(); ++k) {
    const Vec2& a = clip[k];
    const Vec2& b = clip[(k + 1) % clip.size()];
    auto inside = [&](const Vec2& p) { return cross2(b - a, p - a) >= 0.0; };
    std::vector<Vec2> out;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Vec2& p = subject[j];
      const Vec2& q = subject[(j + 1) % subject.size()];
      const bool pin = inside(p);
      const bool qin = inside(q);
      if (pin) out.push_back(p);
      if (pin != qin) {
        const double dp = cross2(b - a, p - a);
        const double dq = cross2(b - a, q - a);
        out.push_back(p + (dp / (dp - dq)) * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

}  // namespace detail

/// One trace per pair of fractures whose closed polygons meet along a segment
/// of positive length, ordered by (lower, higher) fracture index.
inline std::vector<Trace> compute_traces(const std::vector<Fracture>& fractures) {
  const std::size_t n = fractures.size();
  std::vector<LocalFrame> frames;
  std::vector<std::vector<Vec2>> polys;
  std::vector<double> diams;
  frames.reserve(n);
  for (const auto& f : fractures) {
    frames.push_back(local_frame(f));
    polys.push_back(local_polygon(f, frames.back()));
    if (detail::polygon_area(polys.back()) < 0) std::reverse(polys.back().begin(), polys.back().end());
    diams.push_back(f.diameter());
  }

  std::vector<Trace> traces;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dmin = std::min(diams[i], diams[j]);
      const double tol = 1e-10 * std::max(diams[i], diams[j]);
      const Vec3& ni = frames[i].normal;
      const Vec3& nj = frames[j].normal;
      const Vec3 u_raw = ni.cross(nj);
      if (u_raw.norm() < 1e-12) {
        // Parallel planes: only coplanar overlap matters.
        if (std::abs(frames[i].offset(fractures[j].vertices[0])) > tol) continue;
        std::vector<Vec2> pj;
        for (const auto& v : fractures[j].vertices) pj.push_back(frames[i].to_local(v));
        if (detail::polygon_area(pj) < 0) std::reverse(pj.begin(), pj.end());
        const auto overlap = detail::clip_polygon(pj, polys[i]);
        if (overlap.size() >= 3 && std::abs(detail::polygon_area(overlap)) > 1e-12 * dmin * dmin)
          throw UnsupportedGeometryError("fractures " + std::to_string(fractures[i].id) + " and " +
                                         std::to_string(fractures[j].id) +
                                         " overlap in a coplanar region");
        continue;
      }
      const Vec3 u = u_raw.normalized();
      const double di = ni.dot(frames[i].origin);
      const double dj = nj.dot(frames[j].origin);
      const Vec3 o = (di * nj.cross(u_raw) + dj * u_raw.cross(ni)) / u_raw.squaredNorm();

      auto interval = [&](std::size_t k) {
        const Vec2 o2 = frames[k].to_local(o);
        const Vec2 u2 = frames[k].to_local(o + u) - o2;
        return detail::clip_line(polys[k], o2, u2, 1e-12 * diams[k]);
      };
      const auto a = interval(i);
      if (!a) continue;
      const auto b = interval(j);
      if (!b) continue;
      const double t0 = std::max(a->first, b->first);
      const double t1 = std::min(a->second, b->second);
      if (t1 - t0 < 1e-8 * dmin) continue;  // empty or point contact
      Trace t;
      t.id = static_cast<int>(traces.size());
      t.endpoints = {o + t0 * u, o + t1 * u};
      t.fracture_pair = {static_cast<int>(i), static_cast<int>(j)};
      traces.push_back(t);
    }
  }
  return traces;
}

/// Fractures, their traces and the per-fracture trace incidence. Fracture
/// and trace ids equal their positions.
class FractureNetwork {
 public:
  FractureNetwork() = default;

  FractureNetwork(std::vector<Fracture> fractures, std::vector<Trace> traces)
      : fractures_(std::move(fractures)), traces_(std::move(traces)) {
    finalize();
  }

  /// Validates the fractures and computes their traces.
  static FractureNetwork build(std::vector<Fracture> fractures) {
    for (std::size_t k = 0; k < fractures.size(); ++k) {
      fractures[k].id = static_cast<int>(k);
      validate_fracture(fractures[k]);
    }
    auto traces = compute_traces(fractures);
    return FractureNetwork(std::move(fractures), std::move(traces));
  }

  const std::vector<Fracture>& fractures() const noexcept { return fractures_; }
  const std::vector<Trace>& traces() const noexcept { return traces_; }
  const Fracture& fracture(int i) const { return fractures_.at(static_cast<std::size_t>(i)); }
  const Trace& trace(int m) const { return traces_.at(static_cast<std::size_t>(m)); }
  const LocalFrame& frame(int i) const { return frames_.at(static_cast<std::size_t>(i)); }
  /// Trace indices on fracture i, ascending.
  const std::vector<int>& incidence(int i) const { return incidence_.at(static_cast<std::size_t>(i)); }
  std::size_t num_fractures() const noexcept { return fractures_.size(); }
  std::size_t num_traces() const noexcept { return traces_.size(); }

  bool has_dirichlet() const {
    return std::any_of(fractures_.begin(), fractures_.end(),
                       [](const Fracture& f) { return f.has_dirichlet(); });
  }

  /// Sum of all trace lengths.
  double total_trace_length() const {
    double l = 0.0;
    for (const auto& t : traces_) l += t.length();
    return l;
  }

 private:
  void finalize() {
    frames_.clear();
    incidence_.assign(fractures_.size(), {});
    for (std::size_t k = 0; k < fractures_.size(); ++k) {
      if (fractures_[k].id != static_cast<int>(k))
        throw GeometryError("fracture ids must equal their positions");
      if (fractures_[k].edge_bcs.empty())
        fractures_[k].edge_bcs.assign(fractures_[k].vertices.size(), BoundaryCondition::neumann());
      frames_.push_back(local_frame(fractures_[k]));
    }
    const int nf = static_cast<int>(fractures_.size());
    for (std::size_t m = 0; m < traces_.size(); ++m) {
      const Trace& t = traces_[m];
      if (t.id != static_cast<int>(m)) throw GeometryError("trace ids must equal their positions");
      const auto [lo, hi] = t.fracture_pair;
      if (lo < 0 || hi >= nf || lo >= hi)
        throw GeometryError("trace " + std::to_string(m) + " has an invalid fracture pair");
      if (t.length() <= 0.0) throw GeometryError("trace " + std::to_string(m) + " has zero length");
      incidence_[static_cast<std::size_t>(lo)].push_back(static_cast<int>(m));
      incidence_[static_cast<std::size_t>(hi)].push_back(static_cast<int>(m));
    }
    if (!fractures_.empty() && !has_dirichlet())
      throw GeometryError("network has no Dirichlet boundary");
  }

  std::vector<Fracture> fractures_;
  std::vector<Trace> traces_;
  std::vector<LocalFrame> frames_;
  std::vector<std::vector<int>> incidence_;
};

}  // namespace dfnopt

#endif  // DFNOPT_GEOMETRY_HPP

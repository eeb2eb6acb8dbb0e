#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dfnopt/dfn3.hpp"
#include "dfnopt/meshing.hpp"

using namespace dfnopt;

namespace {

Fracture planar(std::vector<Vec3> v) {
  Fracture f;
  f.edge_bcs.assign(v.size(), BoundaryCondition::dirichlet());
  f.vertices = std::move(v);
  return f;
}

// Parameter intervals [t0, t1] of segment a-b inside each triangle, found by
// clipping against the three edge half-planes of every triangle.
std::vector<std::pair<double, double>> brute_force_walk(const FractureMesh& mesh, const Vec2& a, const Vec2& b) {
  std::vector<std::pair<double, double>> out;
  const Vec2 d = b - a;
  for (const auto& tr : mesh.triangles) {
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 3; ++k) {
      const Vec2 p = mesh.nodes[static_cast<std::size_t>(tr[static_cast<std::size_t>(k)])];
      const Vec2 q = mesh.nodes[static_cast<std::size_t>(tr[static_cast<std::size_t>((k + 1) % 3)])];
      const Vec2 e = q - p;
      // inside: cross(e, x - p) >= 0 (counter-clockwise triangles)
      const double c0 = e.x() * (a - p).y() - e.y() * (a - p).x();
      const double c1 = e.x() * d.y() - e.y() * d.x();
      if (std::abs(c1) < 1e-300) {
        if (c0 < 0.0) hi = -1.0;
        continue;
      }
      const double t = -c0 / c1;
      if (c1 > 0.0)
        lo = std::max(lo, t);
      else
        hi = std::min(hi, t);
    }
    if (hi - lo > 1e-9) out.emplace_back(lo, hi);
  }
  std::sort(out.begin(), out.end());
  // A trace along a shared edge touches both neighbours over the same interval.
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& x, const auto& y) {
                          return std::abs(x.first - y.first) < 1e-12 && std::abs(x.second - y.second) < 1e-12;
                        }),
            out.end());
  return out;
}

FractureMesh mesh_of(const FractureNetwork& net, int i, double dh, MeshMode mode) {
  MeshOptions opt;
  opt.max_area = dh;
  opt.mode = mode;
  return triangulate_fracture(net, i, opt);
}

}  // namespace

TEST(Triangulate, UnitSquareCoarse) {
  const Fracture f = planar({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}});
  MeshOptions opt;
  opt.max_area = 0.5;
  const auto mesh = triangulate_fracture(f, local_frame(f), {}, opt);
  ASSERT_GE(mesh.triangles.size(), 2u);
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    EXPECT_GT(mesh.area(t), 0.0);
    EXPECT_LE(mesh.area(t), 0.5 + 1e-14);
    total += mesh.area(t);
  }
  EXPECT_NEAR(total, 1.0, 1e-13);
}

TEST(Triangulate, Dfn3F3CountBound) {
  const auto net = builtin_dfn3();
  const auto mesh = mesh_of(net, 2, 0.02, MeshMode::Nonconforming);
  EXPECT_GE(mesh.triangles.size(), 200u);
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    EXPECT_LE(mesh.area(t), 0.02 + 1e-14);
    total += mesh.area(t);
  }
  EXPECT_NEAR(total, 4.0, 1e-12);
}

TEST(Triangulate, DirichletClassification) {
  const auto net = builtin_dfn3();
  const auto mesh = mesh_of(net, 0, 0.05, MeshMode::Nonconforming);
  EXPECT_EQ(mesh.free_nodes.size() + mesh.dirichlet_nodes.size(), mesh.nodes.size());
  for (int v : mesh.dirichlet_nodes) {
    const auto& e = mesh.node_edges[static_cast<std::size_t>(v)];
    EXPECT_TRUE(e[0] >= 0 || e[1] >= 0);
    EXPECT_EQ(mesh.dof[static_cast<std::size_t>(v)], -1);
  }
  for (std::size_t k = 0; k < mesh.free_nodes.size(); ++k)
    EXPECT_EQ(mesh.dof[static_cast<std::size_t>(mesh.free_nodes[k])], static_cast<int>(k));
}

TEST(Triangulate, TraceConformingChains) {
  const auto net = builtin_dfn3();
  const auto mesh = mesh_of(net, 0, 0.01, MeshMode::TraceConforming);
  for (int m : net.incidence(0)) {
    const auto part = induced_trace_partition(mesh, net.frame(0), net.trace(m));
    ASSERT_GE(part.num_elements(), 2);
    for (double s : part.breakpoints) {
      const Vec2 p = part.point_at(s);
      double best = 1e300;
      for (const auto& n : mesh.nodes) best = std::min(best, (n - p).norm());
      EXPECT_LT(best, 1e-10) << "trace " << m << " breakpoint " << s << " is not a mesh node";
    }
  }
}

TEST(Triangulate, NonconformingIgnoresTraces) {
  const auto net = builtin_dfn3();
  const auto mesh = mesh_of(net, 0, 0.01, MeshMode::Nonconforming);
  const auto part = induced_trace_partition(mesh, net.frame(0), net.trace(0));
  int interior_on_node = 0;
  for (std::size_t k = 1; k + 1 < part.breakpoints.size(); ++k) {
    const Vec2 p = part.point_at(part.breakpoints[k]);
    for (const auto& n : mesh.nodes)
      if ((n - p).norm() < 1e-10) ++interior_on_node;
  }
  EXPECT_LT(interior_on_node, static_cast<int>(part.breakpoints.size()) - 2);
}

TEST(TracePartition, InsideOneTriangle) {
  const Fracture f = planar({{0, 0, 0}, {4, 0, 0}, {0, 4, 0}});
  const LocalFrame fr = local_frame(f);
  MeshOptions opt;
  opt.max_area = 100.0;
  const auto mesh = triangulate_fracture(f, fr, {}, opt);
  ASSERT_EQ(mesh.triangles.size(), 1u);
  Trace t;
  t.endpoints = {Vec3(0.5, 0.5, 0), Vec3(1.5, 1.0, 0)};
  const auto part = induced_trace_partition(mesh, fr, t);
  ASSERT_EQ(part.breakpoints.size(), 2u);
  EXPECT_EQ(part.breakpoints[0], 0.0);
  EXPECT_NEAR(part.breakpoints[1], t.length(), 1e-14);
}

TEST(TracePartition, CrossingOneEdge) {
  const Fracture f = planar({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}});
  const LocalFrame fr = local_frame(f);
  MeshOptions opt;
  opt.max_area = 100.0;
  const auto mesh = triangulate_fracture(f, fr, {}, opt);
  ASSERT_EQ(mesh.triangles.size(), 2u);
  // Segment across the middle crosses whichever diagonal was chosen once.
  Trace t;
  t.endpoints = {Vec3(0.1, 0.5, 0), Vec3(0.9, 0.5, 0)};
  const auto part = induced_trace_partition(mesh, fr, t);
  EXPECT_EQ(part.breakpoints.size(), 3u);
  EXPECT_EQ(part.num_elements(), 2);
}

TEST(TracePartition, BruteForceWalkDfn3) {
  const auto net = builtin_dfn3();
  for (double dh : {0.05, 0.01, 0.003}) {
    for (int i = 0; i < 3; ++i) {
      const auto mesh = mesh_of(net, i, dh, MeshMode::Nonconforming);
      for (int m : net.incidence(i)) {
        const auto part = induced_trace_partition(mesh, net.frame(i), net.trace(m));
        const auto walk = brute_force_walk(mesh, part.start, part.end);
        ASSERT_EQ(part.num_elements(), static_cast<int>(walk.size())) << "fracture " << i << " trace " << m;
        const double len = net.trace(m).length();
        for (std::size_t k = 0; k < walk.size(); ++k) {
          EXPECT_NEAR(part.breakpoints[k], walk[k].first * len, 1e-10);
          EXPECT_NEAR(part.breakpoints[k + 1], walk[k].second * len, 1e-10);
          const Vec2 mid = part.point_at(0.5 * (part.breakpoints[k] + part.breakpoints[k + 1]));
          const auto bc = mesh.barycentric(part.triangle[k], mid);
          for (double l : bc) EXPECT_GE(l, -1e-12);
        }
      }
    }
  }
}

TEST(TraceMesh, SizeRule) {
  EXPECT_EQ(trace_mesh_size(7, 1.0), 7);
  EXPECT_EQ(trace_mesh_size(10, 0.5), 5);
  EXPECT_EQ(trace_mesh_size(3, 0.1), 1);
  EXPECT_THROW(trace_mesh_size(3, 0.0), ConfigError);
  EXPECT_THROW(trace_mesh_size(3, 1.5), ConfigError);
}

TEST(TraceMesh, UsesLargerInducedCount) {
  TracePartition a, b;
  a.breakpoints = {0, 1, 2};
  a.triangle = {0, 1};
  b.breakpoints = {0, 0.5, 1, 1.5, 2};
  b.triangle = {0, 1, 2, 3};
  Trace t;
  t.endpoints = {Vec3::Zero(), Vec3(2, 0, 0)};
  const auto tm = build_trace_mesh(t, a, b, 0.5, TraceMeshKind::Psi);
  EXPECT_EQ(tm.num_elements(), 2);
  EXPECT_EQ(tm.dof_count(), 3);
  EXPECT_DOUBLE_EQ(tm.breakpoints[1], 1.0);
  const auto tl = build_trace_mesh(t, a, b, 0.5, TraceMeshKind::Lambda);
  EXPECT_EQ(tl.dof_count(), 2);
}

TEST(MergeBreakpoints, UnionWithTolerance) {
  const std::vector<double> a = {0.0, 0.5, 1.0};
  const std::vector<double> b = {0.0, 0.25, 0.5 + 1e-15, 1.0};
  EXPECT_EQ(merge_breakpoints({&a, &b}, 1e-12), (std::vector<double>{0.0, 0.25, 0.5, 1.0}));
}

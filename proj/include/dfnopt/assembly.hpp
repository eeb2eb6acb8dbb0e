// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_ASSEMBLY_HPP
#define DFNOPT_ASSEMBLY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"
#include "dfnopt/meshing.hpp"
#include "dfnopt/quadrature.hpp"

namespace dfnopt {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;
using Eigen::VectorXd;

/// Coupling weights. `alpha` multiplies the trace terms of the constraint
/// equations (the trace mass inside A and the psi coupling C). The cost
/// functional's cross term uses `functional_alpha`; by default it equals
/// alpha, so both share the same matrix C.
struct CouplingParams {
  double alpha = 1.0;
  double functional_alpha = std::numeric_limits<double>::quiet_NaN();

  double cost_alpha() const { return std::isnan(functional_alpha) ? alpha : functional_alpha; }
};

/// Quadrature point on a trace inside one element of a fracture mesh.
struct TracePoint {
  double s;       // arc length
  double weight;  // includes the sub-segment length
  int triangle;
  std::array<double, 3> bary;
};

namespace detail {

/// 3-point Gauss quadrature on the common refinement of `part` and the
/// extra breakpoint list. Calls fn(point) for every quadrature point.
template <typename Fn>
void for_each_trace_point(const FractureMesh& mesh, const TracePartition& part,
                          const std::vector<double>& extra, Fn&& fn) {
  const double len = part.length();
  const auto bps = merge_breakpoints({&part.breakpoints, &extra}, 1e-13 * len);
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    const double s0 = bps[k], s1 = bps[k + 1];
    const double h = s1 - s0;
    if (h <= 0.0) continue;
    const int tri = part.triangle[static_cast<std::size_t>(part.piece_at(0.5 * (s0 + s1)))];
    for (std::size_t q = 0; q < 3; ++q) {
      const double s = s0 + quad::gauss3.x[q] * h;
      fn(TracePoint{s, quad::gauss3.w[q] * h, tri, mesh.barycentric(tri, part.point_at(s))});
    }
  }
}

inline SparseMatrix from_triplets(int rows, int cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Keeps the rows listed in `keep` (new row r = old row keep[r]).
inline SparseMatrix select_rows(const SparseMatrix& m, const std::vector<int>& old_to_new, int new_rows) {
  Triplets t;
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      const int r = old_to_new[static_cast<std::size_t>(it.row())];
      if (r >= 0) t.emplace_back(r, it.col(), it.value());
    }
  return from_triplets(new_rows, static_cast<int>(m.cols()), t);
}

inline SparseMatrix select_block(const SparseMatrix& m, const std::vector<int>& row_map, int nr,
                                 const std::vector<int>& col_map, int nc) {
  Triplets t;
  for (int c = 0; c < m.outerSize(); ++c) {
    const int cn = col_map[static_cast<std::size_t>(c)];
    if (cn < 0) continue;
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      const int r = row_map[static_cast<std::size_t>(it.row())];
      if (r >= 0) t.emplace_back(r, cn, it.value());
    }
  }
  return from_triplets(nr, nc, t);
}

}  // namespace detail

/// B_i^m on all mesh nodes: entry (k, l) = sign * int_{lambda element l} phi_k.
inline SparseMatrix assemble_coupling_lambda(const FractureMesh& mesh, const TracePartition& part,
                                             const TraceMesh& lambda_mesh, double sign) {
  Triplets t;
  detail::for_each_trace_point(mesh, part, lambda_mesh.breakpoints, [&](const TracePoint& p) {
    const int l = lambda_mesh.element_at(p.s);
    const auto& tri = mesh.triangles[static_cast<std::size_t>(p.triangle)];
    for (std::size_t a = 0; a < 3; ++a) t.emplace_back(tri[a], l, sign * p.weight * p.bary[a]);
  });
  return detail::from_triplets(mesh.num_nodes(), lambda_mesh.dof_count(), t);
}

/// C_i^m on all mesh nodes: entry (k, l) = alpha * int phi_k theta_l.
inline SparseMatrix assemble_coupling_psi(const FractureMesh& mesh, const TracePartition& part,
                                          const TraceMesh& psi_mesh, double alpha) {
  Triplets t;
  detail::for_each_trace_point(mesh, part, psi_mesh.breakpoints, [&](const TracePoint& p) {
    const int e = psi_mesh.element_at(p.s);
    const double s0 = psi_mesh.breakpoints[static_cast<std::size_t>(e)];
    const double s1 = psi_mesh.breakpoints[static_cast<std::size_t>(e) + 1];
    const double xi = (p.s - s0) / (s1 - s0);
    const auto& tri = mesh.triangles[static_cast<std::size_t>(p.triangle)];
    for (std::size_t a = 0; a < 3; ++a) {
      t.emplace_back(tri[a], e, alpha * p.weight * p.bary[a] * (1.0 - xi));
      t.emplace_back(tri[a], e + 1, alpha * p.weight * p.bary[a] * xi);
    }
  });
  return detail::from_triplets(mesh.num_nodes(), psi_mesh.dof_count(), t);
}

/// 1D P1 mass matrix on a psi trace mesh.
inline Eigen::MatrixXd assemble_gram_psi(const TraceMesh& psi_mesh) {
  const int n = psi_mesh.dof_count();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < psi_mesh.num_elements(); ++e) {
    const double h = psi_mesh.breakpoints[static_cast<std::size_t>(e) + 1] -
                     psi_mesh.breakpoints[static_cast<std::size_t>(e)];
    g(e, e) += h / 3.0;
    g(e + 1, e + 1) += h / 3.0;
    g(e, e + 1) += h / 6.0;
    g(e + 1, e) += h / 6.0;
  }
  return g;
}

/// G_i^{h,m} on all mesh nodes: int_{S_m} phi_k phi_l.
inline SparseMatrix assemble_gram_h_trace(const FractureMesh& mesh, const TracePartition& part) {
  Triplets t;
  detail::for_each_trace_point(mesh, part, {}, [&](const TracePoint& p) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(p.triangle)];
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) t.emplace_back(tri[a], tri[b], p.weight * p.bary[a] * p.bary[b]);
  });
  return detail::from_triplets(mesh.num_nodes(), mesh.num_nodes(), t);
}

/// G_i^h = sum over the given partitions of G_i^{h,m}.
inline SparseMatrix assemble_gram_h(const FractureMesh& mesh, const std::vector<TracePartition>& parts) {
  SparseMatrix g(mesh.num_nodes(), mesh.num_nodes());
  for (const auto& p : parts) g += assemble_gram_h_trace(mesh, p);
  return g;
}

/// Element stiffness for P1 on triangle t with tensor K.
inline Eigen::Matrix3d element_stiffness(const FractureMesh& mesh, int t, const Eigen::Matrix2d& K) {
  const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
  const Vec2& a = mesh.nodes[static_cast<std::size_t>(tr[0])];
  const Vec2& b = mesh.nodes[static_cast<std::size_t>(tr[1])];
  const Vec2& c = mesh.nodes[static_cast<std::size_t>(tr[2])];
  const double area2 = detail::cross2(b - a, c - a);
  Eigen::Matrix<double, 2, 3> grad;
  grad.col(0) = Vec2(b.y() - c.y(), c.x() - b.x()) / area2;
  grad.col(1) = Vec2(c.y() - a.y(), a.x() - c.x()) / area2;
  grad.col(2) = Vec2(a.y() - b.y(), b.x() - a.x()) / area2;
  return 0.5 * area2 * grad.transpose() * K * grad;
}

/// Per-(fracture, trace) coupling data. Matrices without the `_full` suffix
/// are restricted to the free (non-Dirichlet) rows.
struct CouplingBlock {
  int trace_id = 0;
  double sign = 1.0;
  TracePartition partition;
  SparseMatrix B_full, M_full, Gh_full;  // M = alpha-free int phi theta
  SparseMatrix B, M;
};

/// Discrete constraint data of one fracture.
struct LocalSystem {
  int fracture_id = 0;
  FractureMesh mesh;
  std::vector<CouplingBlock> couplings;  // ascending trace id
  SparseMatrix A_full, A;                // stiffness + alpha * trace mass
  SparseMatrix Gh_full, Gh;
  VectorXd q_full;  // load + Neumann terms on all nodes (no lifting)
  VectorXd q;       // free rows, Dirichlet lifting applied
  VectorXd dirichlet_values;  // on all nodes; zero at free nodes
  bool potentially_singular = false;

  int num_dofs() const noexcept { return mesh.num_dofs(); }

  const CouplingBlock& coupling(int trace_id) const {
    for (const auto& c : couplings)
      if (c.trace_id == trace_id) return c;
    throw InternalError("fracture " + std::to_string(fracture_id) + " has no trace " + std::to_string(trace_id));
  }

  /// Full nodal vector from free values plus Dirichlet data.
  VectorXd expand(const VectorXd& free_values) const {
    VectorXd full = dirichlet_values;
    for (int k = 0; k < mesh.num_dofs(); ++k)
      full(mesh.free_nodes[static_cast<std::size_t>(k)]) = free_values(k);
    return full;
  }
};

/// Trace geometry and control meshes handed to assemble_local.
struct TraceData {
  const Trace* trace;
  TracePartition partition;
  const TraceMesh* lambda_mesh;
  const TraceMesh* psi_mesh;
};

inline LocalSystem assemble_local(const Fracture& f, const LocalFrame& frame, FractureMesh mesh,
                                  const std::vector<TraceData>& traces, const CouplingParams& params) {
  if (params.alpha < 0.0) throw ConfigError("alpha must be non-negative");
  LocalSystem ls;
  ls.fracture_id = f.id;
  const int nn = mesh.num_nodes();
  const int nd = mesh.num_dofs();

  // Stiffness and load.
  Triplets kt;
  VectorXd load = VectorXd::Zero(nn);
  const auto& rule = quad::dunavant5();
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
    const Eigen::Matrix3d ke = element_stiffness(mesh, t, f.transmissivity);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) kt.emplace_back(tr[a], tr[b], ke(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    if (!f.source.is_zero()) {
      const double area = mesh.area(t);
      for (std::size_t q = 0; q < rule.w.size(); ++q) {
        Vec2 x = Vec2::Zero();
        for (std::size_t a = 0; a < 3; ++a) x += rule.bary[q][a] * mesh.nodes[static_cast<std::size_t>(tr[a])];
        const double val = f.source(frame.to_global(x));
        for (std::size_t a = 0; a < 3; ++a) load(tr[a]) += area * rule.w[q] * val * rule.bary[q][a];
      }
    }
  }
  SparseMatrix stiff = detail::from_triplets(nn, nn, kt);

  // Neumann terms on boundary mesh edges.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tr : mesh.triangles)
    for (std::size_t k = 0; k < 3; ++k) {
      const int a = tr[k], b = tr[(k + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  for (const auto& [e, count] : edge_count) {
    if (count != 1) continue;
    for (int pe : mesh.node_edges[static_cast<std::size_t>(e.first)]) {
      if (pe < 0 || !mesh.on_edge(e.second, pe)) continue;
      const auto& bc = f.edge_bcs[static_cast<std::size_t>(pe)];
      if (bc.is_dirichlet() || bc.value.is_zero()) break;
      const Vec2& pa = mesh.nodes[static_cast<std::size_t>(e.first)];
      const Vec2& pb = mesh.nodes[static_cast<std::size_t>(e.second)];
      const double len = (pb - pa).norm();
      for (std::size_t q = 0; q < 3; ++q) {
        const double xi = quad::gauss3.x[q];
        const double g = bc.value(frame.to_global(pa + xi * (pb - pa)));
        load(e.first) += len * quad::gauss3.w[q] * g * (1.0 - xi);
        load(e.second) += len * quad::gauss3.w[q] * g * xi;
      }
      break;
    }
  }

  // Dirichlet data.
  ls.dirichlet_values = VectorXd::Zero(nn);
  for (int v : mesh.dirichlet_nodes) {
    const auto& marks = mesh.node_edges[static_cast<std::size_t>(v)];
    for (int pe : marks) {
      if (pe >= 0 && f.edge_bcs[static_cast<std::size_t>(pe)].is_dirichlet()) {
        ls.dirichlet_values(v) = f.edge_bcs[static_cast<std::size_t>(pe)].value(frame.to_global(mesh.nodes[static_cast<std::size_t>(v)]));
        break;
      }
    }
  }

  // Trace couplings.
  SparseMatrix gh(nn, nn);
  for (const auto& td : traces) {
    CouplingBlock cb;
    cb.trace_id = td.trace->id;
    cb.sign = trace_sign(f.id, *td.trace);
    cb.partition = td.partition;
    cb.B_full = assemble_coupling_lambda(mesh, td.partition, *td.lambda_mesh, cb.sign);
    cb.M_full = assemble_coupling_psi(mesh, td.partition, *td.psi_mesh, 1.0);
    cb.Gh_full = assemble_gram_h_trace(mesh, td.partition);
    gh += cb.Gh_full;
    ls.couplings.push_back(std::move(cb));
  }
  std::sort(ls.couplings.begin(), ls.couplings.end(),
            [](const CouplingBlock& a, const CouplingBlock& b) { return a.trace_id < b.trace_id; });

  ls.Gh_full = gh;
  ls.A_full = stiff + params.alpha * gh;
  ls.q_full = load;

  // Restrict to free rows; lift Dirichlet values.
  std::vector<int> dir_map(static_cast<std::size_t>(nn), -1);
  for (std::size_t k = 0; k < mesh.dirichlet_nodes.size(); ++k)
    dir_map[static_cast<std::size_t>(mesh.dirichlet_nodes[k])] = static_cast<int>(k);
  ls.A = detail::select_block(ls.A_full, mesh.dof, nd, mesh.dof, nd);
  ls.Gh = detail::select_block(ls.Gh_full, mesh.dof, nd, mesh.dof, nd);
  const SparseMatrix a_fd = detail::select_block(ls.A_full, mesh.dof, nd, dir_map,
                                                 static_cast<int>(mesh.dirichlet_nodes.size()));
  VectorXd gd(static_cast<Eigen::Index>(mesh.dirichlet_nodes.size()));
  for (std::size_t k = 0; k < mesh.dirichlet_nodes.size(); ++k)
    gd(static_cast<Eigen::Index>(k)) = ls.dirichlet_values(mesh.dirichlet_nodes[k]);
  ls.q = VectorXd(nd);
  for (int k = 0; k < nd; ++k) ls.q(k) = load(mesh.free_nodes[static_cast<std::size_t>(k)]);
  if (gd.size() > 0) ls.q -= a_fd * gd;
  for (auto& cb : ls.couplings) {
    cb.B = detail::select_rows(cb.B_full, mesh.dof, nd);
    cb.M = detail::select_rows(cb.M_full, mesh.dof, nd);
  }
  ls.potentially_singular = mesh.dirichlet_nodes.empty() && (params.alpha == 0.0 || traces.empty());
  ls.mesh = std::move(mesh);
  return ls;
}

/// Block structure of the whole network: A = diag(A_i), stacked couplings
/// and the DOF offsets tying blocks to fractures and traces.
struct GlobalSystem {
  std::vector<LocalSystem> locals;
  std::vector<TraceMesh> lambda_meshes;
  std::vector<TraceMesh> psi_meshes;
  std::vector<Eigen::MatrixXd> gram_psi;  // G^{psi,m}, not doubled
  std::vector<std::pair<int, int>> trace_pairs;
  std::vector<int> h_offset, lambda_offset, psi_offset;  // size n+1
  CouplingParams params;

  int num_h() const { return h_offset.back(); }
  int num_lambda() const { return lambda_offset.back(); }
  int num_psi() const { return psi_offset.back(); }
  int num_controls() const { return num_lambda() + num_psi(); }
  int num_fractures() const { return static_cast<int>(locals.size()); }
  int num_traces() const { return static_cast<int>(lambda_meshes.size()); }
  double alpha() const { return params.alpha; }
  double cost_alpha() const { return params.cost_alpha(); }

  Eigen::Index lambda_begin(int m) const { return lambda_offset[static_cast<std::size_t>(m)]; }
  Eigen::Index lambda_size(int m) const { return lambda_offset[static_cast<std::size_t>(m) + 1] - lambda_offset[static_cast<std::size_t>(m)]; }
  Eigen::Index psi_begin(int m) const { return psi_offset[static_cast<std::size_t>(m)]; }
  Eigen::Index psi_size(int m) const { return psi_offset[static_cast<std::size_t>(m) + 1] - psi_offset[static_cast<std::size_t>(m)]; }
  Eigen::Index h_begin(int i) const { return h_offset[static_cast<std::size_t>(i)]; }
  Eigen::Index h_size(int i) const { return h_offset[static_cast<std::size_t>(i) + 1] - h_offset[static_cast<std::size_t>(i)]; }

  // Global assembled forms (used by the direct solver and by tests).
  SparseMatrix A() const {
    Triplets t;
    for (int i = 0; i < num_fractures(); ++i) append(t, locals[static_cast<std::size_t>(i)].A, h_begin(i), h_begin(i));
    return detail::from_triplets(num_h(), num_h(), t);
  }
  SparseMatrix Gh() const {
    Triplets t;
    for (int i = 0; i < num_fractures(); ++i) append(t, locals[static_cast<std::size_t>(i)].Gh, h_begin(i), h_begin(i));
    return detail::from_triplets(num_h(), num_h(), t);
  }
  SparseMatrix B() const {
    Triplets t;
    for (int i = 0; i < num_fractures(); ++i)
      for (const auto& cb : locals[static_cast<std::size_t>(i)].couplings) append(t, cb.B, h_begin(i), lambda_begin(cb.trace_id));
    return detail::from_triplets(num_h(), num_lambda(), t);
  }
  /// Constraint coupling (alpha * M).
  SparseMatrix C() const { return coupling_psi(alpha()); }
  /// Cost-functional cross term (cost_alpha * M).
  SparseMatrix Cj() const { return coupling_psi(cost_alpha()); }
  SparseMatrix Gpsi() const {
    Triplets t;
    for (int m = 0; m < num_traces(); ++m) {
      const auto& g = gram_psi[static_cast<std::size_t>(m)];
      for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.cols(); ++c)
          if (g(r, c) != 0.0) t.emplace_back(psi_begin(m) + r, psi_begin(m) + c, 2.0 * g(r, c));
    }
    return detail::from_triplets(num_psi(), num_psi(), t);
  }
  VectorXd q() const {
    VectorXd v(num_h());
    for (int i = 0; i < num_fractures(); ++i) v.segment(h_begin(i), h_size(i)) = locals[static_cast<std::size_t>(i)].q;
    return v;
  }

  /// Residual A h - B lambda - C psi - q.
  VectorXd constraint_residual(const VectorXd& h, const VectorXd& lambda, const VectorXd& psi) const {
    return A() * h - B() * lambda - C() * psi - q();
  }

 private:
  SparseMatrix coupling_psi(double a) const {
    Triplets t;
    for (int i = 0; i < num_fractures(); ++i)
      for (const auto& cb : locals[static_cast<std::size_t>(i)].couplings) append(t, cb.M, h_begin(i), psi_begin(cb.trace_id), a);
    return detail::from_triplets(num_h(), num_psi(), t);
  }
  static void append(Triplets& t, const SparseMatrix& m, Eigen::Index r0, Eigen::Index c0, double s = 1.0) {
    for (int c = 0; c < m.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(m, c); it; ++it)
        t.emplace_back(static_cast<int>(r0 + it.row()), static_cast<int>(c0 + it.col()), s * it.value());
  }
};

/// Places local systems and trace meshes into the global block layout.
inline GlobalSystem assemble_global(std::vector<LocalSystem> locals, const FractureNetwork& net,
                                    std::vector<TraceMesh> lambda_meshes, std::vector<TraceMesh> psi_meshes,
                                    const CouplingParams& params) {
  const int nf = static_cast<int>(net.num_fractures());
  const int nt = static_cast<int>(net.num_traces());
  if (static_cast<int>(locals.size()) != nf || static_cast<int>(lambda_meshes.size()) != nt ||
      static_cast<int>(psi_meshes.size()) != nt)
    throw InternalError("assemble_global: block counts do not match the network");
  GlobalSystem gs;
  gs.params = params;
  gs.h_offset.assign(1, 0);
  for (int i = 0; i < nf; ++i) {
    const auto& ls = locals[static_cast<std::size_t>(i)];
    if (ls.fracture_id != i) throw InternalError("assemble_global: local systems out of order");
    std::vector<int> expected = net.incidence(i);
    if (ls.couplings.size() != expected.size())
      throw InternalError("assemble_global: fracture " + std::to_string(i) + " coupling count mismatch");
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const auto& cb = ls.couplings[k];
      const int m = expected[k];
      if (cb.trace_id != m || cb.B.cols() != lambda_meshes[static_cast<std::size_t>(m)].dof_count() ||
          cb.M.cols() != psi_meshes[static_cast<std::size_t>(m)].dof_count())
        throw InternalError("assemble_global: index map inconsistency on fracture " + std::to_string(i));
    }
    gs.h_offset.push_back(gs.h_offset.back() + ls.num_dofs());
  }
  gs.lambda_offset.assign(1, 0);
  gs.psi_offset.assign(1, 0);
  for (int m = 0; m < nt; ++m) {
    gs.lambda_offset.push_back(gs.lambda_offset.back() + lambda_meshes[static_cast<std::size_t>(m)].dof_count());
    gs.psi_offset.push_back(gs.psi_offset.back() + psi_meshes[static_cast<std::size_t>(m)].dof_count());
    gs.gram_psi.push_back(assemble_gram_psi(psi_meshes[static_cast<std::size_t>(m)]));
    gs.trace_pairs.push_back(net.trace(m).fracture_pair);
  }
  gs.locals = std::move(locals);
  gs.lambda_meshes = std::move(lambda_meshes);
  gs.psi_meshes = std::move(psi_meshes);
  return gs;
}

/// Discretization parameters for a whole network.
struct DiscretizationParams {
  MeshOptions mesh;
  double delta_lambda = 0.5;
  double delta_psi = 0.3;
  CouplingParams coupling;
};

/// Meshes every fracture, builds induced partitions and trace meshes, and
/// assembles the global system.
inline GlobalSystem discretize(const FractureNetwork& net, const DiscretizationParams& p) {
  const int nf = static_cast<int>(net.num_fractures());
  const int nt = static_cast<int>(net.num_traces());
  std::vector<FractureMesh> meshes;
  meshes.reserve(static_cast<std::size_t>(nf));
  for (int i = 0; i < nf; ++i) meshes.push_back(triangulate_fracture(net, i, p.mesh));

  std::vector<std::array<TracePartition, 2>> parts(static_cast<std::size_t>(nt));
  std::vector<TraceMesh> lm, pm;
  for (int m = 0; m < nt; ++m) {
    const auto& t = net.trace(m);
    const auto [lo, hi] = t.fracture_pair;
    parts[static_cast<std::size_t>(m)][0] = induced_trace_partition(meshes[static_cast<std::size_t>(lo)], net.frame(lo), t);
    parts[static_cast<std::size_t>(m)][1] = induced_trace_partition(meshes[static_cast<std::size_t>(hi)], net.frame(hi), t);
    lm.push_back(build_trace_mesh(t, parts[static_cast<std::size_t>(m)][0], parts[static_cast<std::size_t>(m)][1], p.delta_lambda, TraceMeshKind::Lambda));
    pm.push_back(build_trace_mesh(t, parts[static_cast<std::size_t>(m)][0], parts[static_cast<std::size_t>(m)][1], p.delta_psi, TraceMeshKind::Psi));
  }
  std::vector<LocalSystem> locals;
  for (int i = 0; i < nf; ++i) {
    std::vector<TraceData> td;
    for (int m : net.incidence(i)) {
      const auto& t = net.trace(m);
      td.push_back({&t, parts[static_cast<std::size_t>(m)][t.fracture_pair.first == i ? 0 : 1], &lm[static_cast<std::size_t>(m)], &pm[static_cast<std::size_t>(m)]});
    }
    locals.push_back(assemble_local(net.fracture(i), net.frame(i), std::move(meshes[static_cast<std::size_t>(i)]), td, p.coupling));
  }
  return assemble_global(std::move(locals), net, std::move(lm), std::move(pm), p.coupling);
}

}  // namespace dfnopt

#endif  // DFNOPT_ASSEMBLY_HPP

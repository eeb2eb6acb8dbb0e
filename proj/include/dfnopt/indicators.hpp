// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_INDICATORS_HPP
#define DFNOPT_INDICATORS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "dfnopt/assembly.hpp"
#include "dfnopt/dfn3.hpp"
#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"
#include "dfnopt/optimizer.hpp"
#include "dfnopt/quadrature.hpp"

namespace dfnopt {

/// Full nodal heads per fracture plus the controls.
struct DiscreteSolution {
  std::vector<VectorXd> heads;
  VectorXd lambda;
  VectorXd psi;
};

inline DiscreteSolution make_solution(const ReducedProblem& rp, const VectorXd& w) {
  const auto c = ControlState::split(rp.system(), w);
  return {recover_head(rp, w), c.lambda, c.psi};
}

inline DiscreteSolution make_solution(const GlobalSystem& gs, const KktSolution& k) {
  DiscreteSolution s;
  for (int i = 0; i < gs.num_fractures(); ++i)
    s.heads.push_back(gs.locals[static_cast<std::size_t>(i)].expand(k.h.segment(gs.h_begin(i), gs.h_size(i))));
  s.lambda = k.lambda;
  s.psi = k.psi;
  return s;
}

struct IndicatorReport {
  double delta_S_h = 0.0;
  bool delta_S_absolute = false;
  double delta_inout = std::numeric_limits<double>::quiet_NaN();
  double phi_in = std::numeric_limits<double>::quiet_NaN();
  double phi_out = std::numeric_limits<double>::quiet_NaN();
  double E_h_L2 = std::numeric_limits<double>::quiet_NaN();
  double E_h_H1 = std::numeric_limits<double>::quiet_NaN();
  double E_lambda_L2 = std::numeric_limits<double>::quiet_NaN();
  double J_value = 0.0;
  double mismatch = 0.0;
};

namespace detail {

inline double eval_p1(const FractureMesh& mesh, const VectorXd& h, int tri, const std::array<double, 3>& bary) {
  const auto& t = mesh.triangles[static_cast<std::size_t>(tri)];
  return bary[0] * h(t[0]) + bary[1] * h(t[1]) + bary[2] * h(t[2]);
}

inline double eval_on_trace(const LocalSystem& ls, const TracePartition& part, const VectorXd& h, double s) {
  const int tri = part.triangle[static_cast<std::size_t>(part.piece_at(s))];
  return eval_p1(ls.mesh, h, tri, ls.mesh.barycentric(tri, part.point_at(s)));
}

inline double eval_psi(const TraceMesh& tm, const VectorXd& psi, Eigen::Index offset, double s) {
  const int e = tm.element_at(s);
  const double s0 = tm.breakpoints[static_cast<std::size_t>(e)], s1 = tm.breakpoints[static_cast<std::size_t>(e) + 1];
  const double xi = std::clamp((s - s0) / (s1 - s0), 0.0, 1.0);
  return (1.0 - xi) * psi(offset + e) + xi * psi(offset + e + 1);
}

/// Integrates fn(s) over the common refinement of the given breakpoint lists.
template <typename Fn>
double integrate_trace(std::initializer_list<const std::vector<double>*> lists, double len, Fn&& fn) {
  const auto bps = merge_breakpoints(lists, 1e-13 * len);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    const double s0 = bps[k], h = bps[k + 1] - bps[k];
    if (h <= 0.0) continue;
    for (std::size_t q = 0; q < 5; ++q) acc += quad::gauss5.w[q] * h * fn(s0 + quad::gauss5.x[q] * h);
  }
  return acc;
}

}  // namespace detail

/// sqrt(sum_m |h_i - h_j|^2_{L2(S_m)}) / (h_max * l_tot).
inline double continuity_indicator(const GlobalSystem& gs, const std::vector<VectorXd>& heads,
                                   bool* absolute = nullptr) {
  double h_max = 0.0;
  for (const auto& h : heads)
    if (h.size() > 0) h_max = std::max(h_max, h.cwiseAbs().maxCoeff());
  double num = 0.0, l_tot = 0.0;
  for (int m = 0; m < gs.num_traces(); ++m) {
    const auto [i, j] = gs.trace_pairs[static_cast<std::size_t>(m)];
    const auto& li = gs.locals[static_cast<std::size_t>(i)];
    const auto& lj = gs.locals[static_cast<std::size_t>(j)];
    const auto& pi = li.coupling(m).partition;
    const auto& pj = lj.coupling(m).partition;
    const double len = pi.length();
    l_tot += len;
    num += detail::integrate_trace({&pi.breakpoints, &pj.breakpoints}, len, [&](double s) {
      const double d = detail::eval_on_trace(li, pi, heads[static_cast<std::size_t>(i)], s) -
                       detail::eval_on_trace(lj, pj, heads[static_cast<std::size_t>(j)], s);
      return d * d;
    });
  }
  if (absolute) *absolute = h_max == 0.0;
  if (l_tot == 0.0) return 0.0;
  const double denom = h_max > 0.0 ? h_max * l_tot : 1.0;
  return std::sqrt(num) / denom;
}

/// sum_m sum_{i on S_m} |h_i - psi_m|^2_{L2(S_m)} by quadrature.
inline double trace_mismatch(const GlobalSystem& gs, const DiscreteSolution& sol) {
  double acc = 0.0;
  for (int m = 0; m < gs.num_traces(); ++m) {
    const auto& tm = gs.psi_meshes[static_cast<std::size_t>(m)];
    for (int i : {gs.trace_pairs[static_cast<std::size_t>(m)].first, gs.trace_pairs[static_cast<std::size_t>(m)].second}) {
      const auto& ls = gs.locals[static_cast<std::size_t>(i)];
      const auto& part = ls.coupling(m).partition;
      acc += detail::integrate_trace({&part.breakpoints, &tm.breakpoints}, part.length(), [&](double s) {
        const double d = detail::eval_on_trace(ls, part, sol.heads[static_cast<std::size_t>(i)], s) -
                         detail::eval_psi(tm, sol.psi, gs.psi_begin(m), s);
        return d * d;
      });
    }
  }
  return acc;
}

/// Polygon edges with Dirichlet data split into inflow (higher head) and
/// outflow (lower head) sets by the midpoint of the prescribed range.
struct BoundaryEdgeSets {
  std::vector<std::pair<int, int>> inflow;   // (fracture, edge)
  std::vector<std::pair<int, int>> outflow;
};

inline BoundaryEdgeSets classify_boundary_edges(const FractureNetwork& net) {
  std::vector<std::tuple<int, int, double>> vals;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& f : net.fractures())
    for (std::size_t e = 0; e < f.edge_bcs.size(); ++e) {
      if (!f.edge_bcs[e].is_dirichlet()) continue;
      const Vec3 mid = 0.5 * (f.vertices[e] + f.vertices[(e + 1) % f.vertices.size()]);
      const double v = f.edge_bcs[e].value(mid);
      vals.emplace_back(f.id, static_cast<int>(e), v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  BoundaryEdgeSets sets;
  const double cut = 0.5 * (lo + hi);
  for (const auto& [i, e, v] : vals) (v > cut ? sets.inflow : sets.outflow).emplace_back(i, e);
  return sets;
}

struct FluxBalance {
  double phi_in = 0.0;
  double phi_out = 0.0;
  double mismatch = 0.0;
};

/// Dirichlet boundary fluxes from the residual of the unreduced equations.
/// Residual entries at Dirichlet nodes are the inflow through that node.
inline std::vector<VectorXd> boundary_flux_residual(const GlobalSystem& gs, const DiscreteSolution& sol) {
  std::vector<VectorXd> res;
  for (const auto& ls : gs.locals) {
    VectorXd r = ls.A_full * sol.heads[static_cast<std::size_t>(ls.fracture_id)] - ls.q_full;
    for (const auto& cb : ls.couplings) {
      r -= cb.B_full * sol.lambda.segment(gs.lambda_begin(cb.trace_id), gs.lambda_size(cb.trace_id));
      r -= gs.alpha() * (cb.M_full * sol.psi.segment(gs.psi_begin(cb.trace_id), gs.psi_size(cb.trace_id)));
    }
    res.push_back(std::move(r));
  }
  return res;
}

inline FluxBalance flux_mismatch(const GlobalSystem& gs, const DiscreteSolution& sol, const BoundaryEdgeSets& sets) {
  const auto res = boundary_flux_residual(gs, sol);
  auto total = [&](const std::vector<std::pair<int, int>>& edges) {
    double acc = 0.0;
    for (int i = 0; i < gs.num_fractures(); ++i) {
      const auto& mesh = gs.locals[static_cast<std::size_t>(i)].mesh;
      for (int v : mesh.dirichlet_nodes) {
        bool hit = false;
        for (const auto& [fi, e] : edges)
          if (fi == i && mesh.on_edge(v, e)) hit = true;
        if (hit) acc += res[static_cast<std::size_t>(i)](v);
      }
    }
    return acc;
  };
  FluxBalance fb;
  fb.phi_in = total(sets.inflow);
  fb.phi_out = -total(sets.outflow);
  if (!(fb.phi_in != 0.0)) throw UnsupportedOperationError("inflow is zero; flux mismatch undefined");
  fb.mismatch = std::abs(fb.phi_in - fb.phi_out) / std::abs(fb.phi_in);
  return fb;
}

struct ExactErrors {
  double E_h_L2 = 0.0;
  double E_h_H1 = 0.0;
  double E_lambda_L2 = 0.0;
};

/// Relative L2 / H1 head errors and relative L2 flux-jump error.
inline ExactErrors errors_vs_exact(const GlobalSystem& gs, const FractureNetwork& net, const DiscreteSolution& sol,
                                   const ExactSolution* exact) {
  if (!exact) throw UnsupportedOperationError("no exact solution registered for this network");
  if (static_cast<int>(exact->head.size()) != gs.num_fractures() ||
      static_cast<int>(exact->lambda.size()) != gs.num_traces())
    throw UnsupportedOperationError("exact solution does not match the network");
  const auto& rule = quad::dunavant5();
  double e0 = 0.0, n0 = 0.0, e1 = 0.0, n1 = 0.0;
  for (int i = 0; i < gs.num_fractures(); ++i) {
    const auto& mesh = gs.locals[static_cast<std::size_t>(i)].mesh;
    const auto& fr = net.frame(i);
    const VectorXd& h = sol.heads[static_cast<std::size_t>(i)];
    const auto& H = exact->head[static_cast<std::size_t>(i)];
    const auto& G = exact->gradient[static_cast<std::size_t>(i)];
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
      const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
      const Vec2& a = mesh.nodes[static_cast<std::size_t>(tr[0])];
      const Vec2& b = mesh.nodes[static_cast<std::size_t>(tr[1])];
      const Vec2& c = mesh.nodes[static_cast<std::size_t>(tr[2])];
      const double area2 = detail::cross2(b - a, c - a);
      const Vec2 g2 = (h(tr[0]) * Vec2(b.y() - c.y(), c.x() - b.x()) + h(tr[1]) * Vec2(c.y() - a.y(), a.x() - c.x()) +
                       h(tr[2]) * Vec2(a.y() - b.y(), b.x() - a.x())) / area2;
      const Vec3 gh = g2.x() * fr.basis[0] + g2.y() * fr.basis[1];
      for (std::size_t q = 0; q < rule.w.size(); ++q) {
        const Vec2 x = rule.bary[q][0] * a + rule.bary[q][1] * b + rule.bary[q][2] * c;
        const Vec3 X = fr.to_global(x);
        const double w = 0.5 * area2 * rule.w[q];
        const double hv = rule.bary[q][0] * h(tr[0]) + rule.bary[q][1] * h(tr[1]) + rule.bary[q][2] * h(tr[2]);
        const double Hv = H(X);
        const Vec3 Gv = G(X);
        e0 += w * (hv - Hv) * (hv - Hv);
        n0 += w * Hv * Hv;
        e1 += w * (gh - Gv).squaredNorm();
        n1 += w * Gv.squaredNorm();
      }
    }
  }
  double el = 0.0, nl = 0.0;
  for (int m = 0; m < gs.num_traces(); ++m) {
    const auto& tm = gs.lambda_meshes[static_cast<std::size_t>(m)];
    const auto& trace = net.trace(m);
    const auto& L = exact->lambda[static_cast<std::size_t>(m)];
    for (int e = 0; e < tm.num_elements(); ++e) {
      const double s0 = tm.breakpoints[static_cast<std::size_t>(e)], s1 = tm.breakpoints[static_cast<std::size_t>(e) + 1];
      const double lv = sol.lambda(gs.lambda_begin(m) + e);
      constexpr int sub = 4;
      for (int k = 0; k < sub; ++k) {
        const double a0 = s0 + (s1 - s0) * k / sub, hh = (s1 - s0) / sub;
        for (std::size_t q = 0; q < 5; ++q) {
          const double Lv = L(trace.point_at(a0 + quad::gauss5.x[q] * hh));
          const double w = quad::gauss5.w[q] * hh;
          el += w * (lv - Lv) * (lv - Lv);
          nl += w * Lv * Lv;
        }
      }
    }
  }
  ExactErrors out;
  out.E_h_L2 = std::sqrt(e0 / n0);
  out.E_h_H1 = std::sqrt((e0 + e1) / (n0 + n1));
  out.E_lambda_L2 = nl > 0.0 ? std::sqrt(el / nl) : std::sqrt(el);
  return out;
}

/// J* through the quadratic form w G_hat w + 2 d w + const.
inline double functional_value(const ReducedProblem& rp, const VectorXd& w) {
  const ReducedRhs r = assemble_reduced_rhs(rp);
  return w.dot(rp.apply(w)) + 2.0 * r.d.dot(w) + r.constant;
}

/// All indicators for controls w. When the problem was rescaled by k, pass
/// flux_scale = k so flux errors are measured on the original problem.
inline IndicatorReport compute_indicators(const ReducedProblem& rp, const FractureNetwork& net, const VectorXd& w,
                                          const ExactSolution* exact = nullptr, double flux_scale = 1.0) {
  const auto& gs = rp.system();
  const DiscreteSolution sol = make_solution(rp, w);
  IndicatorReport rep;
  rep.delta_S_h = continuity_indicator(gs, sol.heads, &rep.delta_S_absolute);
  const auto sets = classify_boundary_edges(net);
  if (!sets.inflow.empty() && !sets.outflow.empty()) {
    try {
      const auto fb = flux_mismatch(gs, sol, sets);
      rep.phi_in = fb.phi_in;
      rep.phi_out = fb.phi_out;
      rep.delta_inout = fb.mismatch;
    } catch (const UnsupportedOperationError&) {
    }
  }
  if (exact) {
    DiscreteSolution unscaled = sol;
    unscaled.lambda /= flux_scale;
    const auto e = errors_vs_exact(gs, net, unscaled, exact);
    rep.E_h_L2 = e.E_h_L2;
    rep.E_h_H1 = e.E_h_H1;
    rep.E_lambda_L2 = e.E_lambda_L2;
  }
  rep.J_value = rp.functional(w);
  rep.mismatch = trace_mismatch(gs, sol);
  return rep;
}

}  // namespace dfnopt

#endif  // DFNOPT_INDICATORS_HPP

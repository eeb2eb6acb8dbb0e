// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_OPTIMIZER_HPP
#define DFNOPT_OPTIMIZER_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "dfnopt/assembly.hpp"
#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"

namespace dfnopt {

enum class Preconditioner { None, Full, Diagonal };

inline std::string to_string(Preconditioner p) {
  switch (p) {
    case Preconditioner::Full: return "pf";
    case Preconditioner::Diagonal: return "pd";
    default: return "none";
  }
}

inline Preconditioner parse_preconditioner(const std::string& s) {
  if (s == "none") return Preconditioner::None;
  if (s == "pf") return Preconditioner::Full;
  if (s == "pd") return Preconditioner::Diagonal;
  throw ConfigError("unknown preconditioner '" + s + "' (expected none, pf or pd)");
}

/// Controls w = [lambda; psi].
struct ControlState {
  VectorXd lambda;
  VectorXd psi;

  VectorXd w() const {
    VectorXd v(lambda.size() + psi.size());
    v << lambda, psi;
    return v;
  }
  static ControlState split(const GlobalSystem& gs, const VectorXd& w) {
    if (w.size() != gs.num_controls()) throw InternalError("control vector has wrong size");
    return {w.head(gs.num_lambda()), w.tail(gs.num_psi())};
  }
};

/// Per-fracture heads and adjoints on free DOFs.
struct AdjointPair {
  std::vector<VectorXd> h;
  std::vector<VectorXd> p;
};

struct KktSolution {
  VectorXd h, lambda, psi, p;
  double relative_residual = 0.0;

  ControlState control() const { return {lambda, psi}; }
};

struct SolveReport {
  bool converged = false;
  bool indefinite = false;
  int iterations = 0;
  std::vector<double> residual_history;        // unpreconditioned
  std::vector<double> precond_residual_history;  // sqrt(r.z)
  std::vector<double> functional_history;
  double functional_value = 0.0;
  double wall_time = 0.0;
  Preconditioner preconditioner = Preconditioner::None;
  double scaling = 1.0;
  double r0_lambda_norm = 0.0;
  double r0_psi_norm = 0.0;
  int restarts = 0;
  int inner_cap_hits = 0;
  int regularized_blocks = 0;
  std::vector<std::string> warnings;
};

/// Factorized local systems plus the matrix-free reduced operator
/// G_hat w + d and the functional J*(w) = w G_hat w + 2 d w + const.
class ReducedProblem {
 public:
  explicit ReducedProblem(const GlobalSystem& gs) : gs_(&gs) {
    const int nf = gs.num_fractures();
    for (int i = 0; i < nf; ++i) solvers_.push_back(std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>());
    gh_lift_.resize(static_cast<std::size_t>(nf));
    cd_lift_.resize(static_cast<std::size_t>(nf));
    for (int i = 0; i < nf; ++i) {
      const auto& ls = gs.locals[static_cast<std::size_t>(i)];
      auto& s = *solvers_[static_cast<std::size_t>(i)];
      if (ls.num_dofs() > 0) {
        s.compute(ls.A);
        if (s.info() != Eigen::Success || (s.vectorD().array() <= 0.0).any())
          throw LinearAlgebraError(i, "factorization of the local matrix failed");
      }
      const VectorXd g = ls.dirichlet_values;
      const VectorXd ghg = ls.Gh_full * g;
      VectorXd gh(ls.num_dofs());
      for (int k = 0; k < ls.num_dofs(); ++k) gh(k) = ghg(ls.mesh.free_nodes[static_cast<std::size_t>(k)]);
      gh_lift_[static_cast<std::size_t>(i)] = gh;
      for (const auto& cb : ls.couplings)
        cd_lift_[static_cast<std::size_t>(i)].push_back(gs.cost_alpha() * (cb.M_full.transpose() * g));
    }
  }

  const GlobalSystem& system() const noexcept { return *gs_; }
  int size() const { return gs_->num_controls(); }

  template <typename Rhs>
  typename Rhs::PlainObject solve_local(int i, const Rhs& rhs) const {
    if (rhs.size() == 0) return rhs;
    const auto& s = *solvers_[static_cast<std::size_t>(i)];
    typename Rhs::PlainObject x = s.solve(rhs);
    if (s.info() != Eigen::Success || !x.allFinite())
      throw LinearAlgebraError(i, "local solve failed");
    return x;
  }

  /// Heads (free DOFs) for controls w; `affine` adds q.
  std::vector<VectorXd> heads(const VectorXd& w, bool affine = true) const {
    std::vector<VectorXd> h(static_cast<std::size_t>(gs_->num_fractures()));
    for (int i = 0; i < gs_->num_fractures(); ++i) h[static_cast<std::size_t>(i)] = solve_local(i, local_rhs(i, w, affine));
    return h;
  }

  AdjointPair adjoint(const VectorXd& w, bool affine = true) const {
    AdjointPair ap;
    ap.h = heads(w, affine);
    ap.p.resize(ap.h.size());
    const double aj = gs_->cost_alpha();
    for (int i = 0; i < gs_->num_fractures(); ++i) {
      const auto& ls = gs_->locals[static_cast<std::size_t>(i)];
      VectorXd rhs = ls.Gh * ap.h[static_cast<std::size_t>(i)];
      if (affine) rhs += gh_lift_[static_cast<std::size_t>(i)];
      for (const auto& cb : ls.couplings) rhs -= aj * (cb.M * psi_block(w, cb.trace_id));
      ap.p[static_cast<std::size_t>(i)] = solve_local(i, rhs);
    }
    return ap;
  }

  /// G_hat w + d when affine, G_hat w otherwise.
  VectorXd gradient(const VectorXd& w, bool affine = true) const {
    check(w);
    const AdjointPair ap = adjoint(w, affine);
    VectorXd g = VectorXd::Zero(size());
    const double ac = gs_->alpha(), aj = gs_->cost_alpha();
    const Eigen::Index nl = gs_->num_lambda();
    for (int i = 0; i < gs_->num_fractures(); ++i) {
      const auto& ls = gs_->locals[static_cast<std::size_t>(i)];
      const VectorXd& h = ap.h[static_cast<std::size_t>(i)];
      const VectorXd& p = ap.p[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < ls.couplings.size(); ++k) {
        const auto& cb = ls.couplings[k];
        const int m = cb.trace_id;
        g.segment(gs_->lambda_begin(m), gs_->lambda_size(m)) += cb.B.transpose() * p;
        auto gp = g.segment(nl + gs_->psi_begin(m), gs_->psi_size(m));
        gp += ac * (cb.M.transpose() * p) - aj * (cb.M.transpose() * h);
        if (affine) gp -= cd_lift_[static_cast<std::size_t>(i)][k];
      }
    }
    for (int m = 0; m < gs_->num_traces(); ++m)
      g.segment(nl + gs_->psi_begin(m), gs_->psi_size(m)) += 2.0 * gs_->gram_psi[static_cast<std::size_t>(m)] * psi_block(w, m);
    return g;
  }

  VectorXd apply(const VectorXd& w) const { return gradient(w, false); }
  VectorXd rhs() const { return gradient(VectorXd::Zero(size()), true); }

  /// Cost functional evaluated directly from the full nodal heads.
  double functional(const VectorXd& w) const {
    check(w);
    const auto h = heads(w, true);
    const double aj = gs_->cost_alpha();
    double j = 0.0;
    for (int i = 0; i < gs_->num_fractures(); ++i) {
      const auto& ls = gs_->locals[static_cast<std::size_t>(i)];
      const VectorXd hf = ls.expand(h[static_cast<std::size_t>(i)]);
      j += hf.dot(ls.Gh_full * hf);
      for (const auto& cb : ls.couplings) j -= 2.0 * aj * hf.dot(cb.M_full * psi_block(w, cb.trace_id));
    }
    for (int m = 0; m < gs_->num_traces(); ++m) {
      const VectorXd ps = psi_block(w, m);
      j += 2.0 * ps.dot(gs_->gram_psi[static_cast<std::size_t>(m)] * ps);
    }
    return j;
  }

  double constant() const { return functional(VectorXd::Zero(size())); }

  /// D v = B^T A^-1 Gh A^-1 B v on the lambda block.
  VectorXd apply_D(const VectorXd& lambda) const {
    VectorXd out = VectorXd::Zero(gs_->num_lambda());
    for (int i = 0; i < gs_->num_fractures(); ++i) {
      const auto& ls = gs_->locals[static_cast<std::size_t>(i)];
      VectorXd rhs = VectorXd::Zero(ls.num_dofs());
      bool any = false;
      for (const auto& cb : ls.couplings) {
        const auto seg = lambda.segment(gs_->lambda_begin(cb.trace_id), gs_->lambda_size(cb.trace_id));
        if (seg.isZero(0.0)) continue;
        rhs += cb.B * seg;
        any = true;
      }
      if (!any) continue;
      const VectorXd p = solve_local(i, ls.Gh * solve_local(i, rhs));
      for (const auto& cb : ls.couplings)
        out.segment(gs_->lambda_begin(cb.trace_id), gs_->lambda_size(cb.trace_id)) += cb.B.transpose() * p;
    }
    return out;
  }

  /// Constant lifting terms of the functional (Dirichlet data seen by traces).
  const VectorXd& gh_lift(int i) const { return gh_lift_[static_cast<std::size_t>(i)]; }
  const VectorXd& cd_lift(int i, std::size_t k) const { return cd_lift_[static_cast<std::size_t>(i)][k]; }

 private:
  void check(const VectorXd& w) const {
    if (w.size() != size()) throw InternalError("control vector has wrong size");
  }
  VectorXd psi_block(const VectorXd& w, int m) const {
    return w.segment(gs_->num_lambda() + gs_->psi_begin(m), gs_->psi_size(m));
  }
  VectorXd local_rhs(int i, const VectorXd& w, bool affine) const {
    check(w);
    const auto& ls = gs_->locals[static_cast<std::size_t>(i)];
    VectorXd rhs = affine ? ls.q : VectorXd::Zero(ls.num_dofs());
    for (const auto& cb : ls.couplings) {
      rhs += cb.B * w.segment(gs_->lambda_begin(cb.trace_id), gs_->lambda_size(cb.trace_id));
      rhs += gs_->alpha() * (cb.M * psi_block(w, cb.trace_id));
    }
    return rhs;
  }

  const GlobalSystem* gs_;
  std::vector<std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> solvers_;
  std::vector<VectorXd> gh_lift_;
  std::vector<std::vector<VectorXd>> cd_lift_;
};

inline VectorXd apply_Ghat(const ReducedProblem& rp, const VectorXd& w) { return rp.apply(w); }

struct ReducedRhs {
  VectorXd d;
  double constant = 0.0;
};

inline ReducedRhs assemble_reduced_rhs(const ReducedProblem& rp) { return {rp.rhs(), rp.constant()}; }

/// Per-fracture full nodal heads for controls w.
inline std::vector<VectorXd> recover_head(const ReducedProblem& rp, const VectorXd& w) {
  auto h = rp.heads(w, true);
  for (int i = 0; i < rp.system().num_fractures(); ++i)
    h[static_cast<std::size_t>(i)] = rp.system().locals[static_cast<std::size_t>(i)].expand(h[static_cast<std::size_t>(i)]);
  return h;
}

/// Exact line-search step along dw from w.
inline double sd_stepsize(const ReducedProblem& rp, const VectorXd& w, const VectorXd& dw) {
  const double curv = dw.dot(rp.apply(dw));
  if (!(curv > 0.0)) throw LinearAlgebraError(-1, "non-positive curvature along the search direction");
  return -rp.gradient(w, true).dot(dw) / curv;
}

/// Monolithic saddle-point solve of the optimality system, unknowns
/// [h; lambda; psi; -p].
inline KktSolution solve_kkt_direct(const GlobalSystem& gs) {
  const int nh = gs.num_h(), nl = gs.num_lambda(), np = gs.num_psi();
  const int n = 2 * nh + nl + np;
  const int oh = 0, ol = nh, op = nh + nl, om = nh + nl + np;
  Triplets t;
  auto put = [&t](const SparseMatrix& m, int r0, int c0, double s, bool transpose) {
    for (int c = 0; c < m.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
        const int r = static_cast<int>(it.row()), cc = static_cast<int>(it.col());
        if (transpose)
          t.emplace_back(r0 + cc, c0 + r, s * it.value());
        else
          t.emplace_back(r0 + r, c0 + cc, s * it.value());
      }
  };
  const SparseMatrix A = gs.A(), Gh = gs.Gh(), B = gs.B(), C = gs.C(), Cj = gs.Cj(), Gp = gs.Gpsi();
  put(Gh, oh, oh, 1.0, false);
  put(Cj, oh, op, -1.0, false);
  put(A, oh, om, 1.0, true);
  put(B, ol, om, -1.0, true);
  put(Cj, op, oh, -1.0, true);
  put(Gp, op, op, 1.0, false);
  put(C, op, om, -1.0, true);
  put(A, om, oh, 1.0, false);
  put(B, om, ol, -1.0, false);
  put(C, om, op, -1.0, false);
  const SparseMatrix K = detail::from_triplets(n, n, t);

  VectorXd rhs = VectorXd::Zero(n);
  for (int i = 0; i < gs.num_fractures(); ++i) {
    const auto& ls = gs.locals[static_cast<std::size_t>(i)];
    const VectorXd g = ls.dirichlet_values;
    const VectorXd ghg = ls.Gh_full * g;
    for (int k = 0; k < ls.num_dofs(); ++k)
      rhs(oh + gs.h_begin(i) + k) = -ghg(ls.mesh.free_nodes[static_cast<std::size_t>(k)]);
    for (const auto& cb : ls.couplings)
      rhs.segment(op + gs.psi_begin(cb.trace_id), gs.psi_size(cb.trace_id)) += gs.cost_alpha() * (cb.M_full.transpose() * g);
  }
  rhs.segment(om, nh) = gs.q();

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success)
    throw LinearAlgebraError(-1, "optimality system factorization failed: " + lu.lastErrorMessage());
  VectorXd x = lu.solve(rhs);
  VectorXd res = rhs - K * x;
  x += lu.solve(res);
  res = rhs - K * x;
  if (!x.allFinite()) throw LinearAlgebraError(-1, "optimality system solve produced non-finite values");

  KktSolution sol;
  sol.h = x.segment(oh, nh);
  sol.lambda = x.segment(ol, nl);
  sol.psi = x.segment(op, np);
  sol.p = -x.segment(om, nh);
  const double rn = rhs.norm();
  sol.relative_residual = rn > 0.0 ? res.norm() / rn : res.norm();
  return sol;
}

/// Block-diagonal preconditioner: one dense block of D per trace plus the
/// psi Gram blocks.
class DiagonalPreconditioner {
 public:
  explicit DiagonalPreconditioner(const ReducedProblem& rp) : gs_(&rp.system()) {
    const auto& gs = rp.system();
    for (int m = 0; m < gs.num_traces(); ++m) {
      const Eigen::Index nm = gs.lambda_size(m);
      Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(nm, nm);
      // D_mm = sum_i X_i^T Gh_i X_i with X_i = A_i^-1 B_i^m.
      for (int i : {gs.trace_pairs[static_cast<std::size_t>(m)].first, gs.trace_pairs[static_cast<std::size_t>(m)].second}) {
        const auto& ls = gs.locals[static_cast<std::size_t>(i)];
        if (ls.num_dofs() == 0) continue;
        const Eigen::MatrixXd X = rp.solve_local(i, Eigen::MatrixXd(ls.coupling(m).B));
        blk.noalias() += X.transpose() * (ls.Gh * X);
      }
      blk = 0.5 * (blk + blk.transpose()).eval();
      blocks_.push_back(blk);
      Eigen::LLT<Eigen::MatrixXd> llt(blk);
      if (llt.info() != Eigen::Success) {
        const double eps = 1e-12 * blk.trace() / static_cast<double>(nm);
        llt.compute(blk + eps * Eigen::MatrixXd::Identity(nm, nm));
        ++regularized_;
        if (llt.info() != Eigen::Success) throw LinearAlgebraError(-1, "singular block on trace " + std::to_string(m));
      }
      lambda_llt_.push_back(std::move(llt));
      psi_llt_.emplace_back(2.0 * gs.gram_psi[static_cast<std::size_t>(m)]);
    }
  }

  VectorXd apply(const VectorXd& r) const {
    const auto& gs = *gs_;
    VectorXd z(r.size());
    const Eigen::Index nl = gs.num_lambda();
    for (int m = 0; m < gs.num_traces(); ++m) {
      z.segment(gs.lambda_begin(m), gs.lambda_size(m)) =
          lambda_llt_[static_cast<std::size_t>(m)].solve(r.segment(gs.lambda_begin(m), gs.lambda_size(m)));
      z.segment(nl + gs.psi_begin(m), gs.psi_size(m)) =
          psi_llt_[static_cast<std::size_t>(m)].solve(r.segment(nl + gs.psi_begin(m), gs.psi_size(m)));
    }
    return z;
  }

  /// Block solves on the lambda part only.
  VectorXd apply_lambda(const VectorXd& r) const {
    const auto& gs = *gs_;
    VectorXd z(r.size());
    for (int m = 0; m < gs.num_traces(); ++m)
      z.segment(gs.lambda_begin(m), gs.lambda_size(m)) =
          lambda_llt_[static_cast<std::size_t>(m)].solve(r.segment(gs.lambda_begin(m), gs.lambda_size(m)));
    return z;
  }

  const Eigen::MatrixXd& block(int m) const { return blocks_[static_cast<std::size_t>(m)]; }
  int regularized_blocks() const noexcept { return regularized_; }

 private:
  const GlobalSystem* gs_;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> lambda_llt_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> psi_llt_;
  int regularized_ = 0;
};

inline DiagonalPreconditioner build_precond_Pd(const ReducedProblem& rp) { return DiagonalPreconditioner(rp); }

struct InnerSolveStats {
  int iterations = 0;
  bool cap_reached = false;
};

/// Full preconditioner: D z_lambda = r_lambda by inner CG, G_psi z_psi = r_psi
/// directly. When `blocks` is given the inner CG is preconditioned with its
/// per-trace diagonal blocks of D.
inline VectorXd apply_precond_Pf(const ReducedProblem& rp, const VectorXd& r, InnerSolveStats* stats = nullptr,
                                 double inner_tol = 1e-8, const DiagonalPreconditioner* blocks = nullptr) {
  const auto& gs = rp.system();
  const Eigen::Index nl = gs.num_lambda();
  VectorXd z = VectorXd::Zero(r.size());
  for (int m = 0; m < gs.num_traces(); ++m) {
    Eigen::LLT<Eigen::MatrixXd> llt(2.0 * gs.gram_psi[static_cast<std::size_t>(m)]);
    z.segment(nl + gs.psi_begin(m), gs.psi_size(m)) = llt.solve(r.segment(nl + gs.psi_begin(m), gs.psi_size(m)));
  }
  const VectorXd b = r.head(nl);
  const double bn = b.norm();
  InnerSolveStats st;
  if (bn > 0.0) {
    auto prec = [blocks](const VectorXd& v) { return blocks ? blocks->apply_lambda(v) : v; };
    VectorXd x = VectorXd::Zero(nl);
    VectorXd res = b;
    VectorXd y = prec(res);
    VectorXd dir = y;
    double ry = res.dot(y);
    const int cap = static_cast<int>(10 * nl);
    while (res.norm() > inner_tol * bn) {
      if (st.iterations >= cap) {
        st.cap_reached = true;
        break;
      }
      const VectorXd ad = rp.apply_D(dir);
      const double curv = dir.dot(ad);
      if (!(curv > 0.0)) {
        st.cap_reached = true;
        break;
      }
      const double a = ry / curv;
      x += a * dir;
      res -= a * ad;
      y = prec(res);
      const double ry_new = res.dot(y);
      dir = y + (ry_new / ry) * dir;
      ry = ry_new;
      ++st.iterations;
    }
    z.head(nl) = x;
  }
  if (stats) *stats = st;
  return z;
}

struct PcgOptions {
  Preconditioner preconditioner = Preconditioner::None;
  double tol = 1e-6;
  int maxit = 10000;
  int max_restarts = 5;
};

/// Preconditioned conjugate gradient on G_hat w + d = 0. The stopping test
/// uses the unpreconditioned residual relative to |d| (or |r0| when d = 0).
inline ControlState pcg_solve(const ReducedProblem& rp, const PcgOptions& opt, SolveReport& report,
                              const VectorXd* w0 = nullptr) {
  if (!(opt.tol > 0.0)) throw ConfigError("tol must be positive");
  const auto start = std::chrono::steady_clock::now();
  const auto& gs = rp.system();
  report = SolveReport{};
  report.preconditioner = opt.preconditioner;

  std::function<VectorXd(const VectorXd&)> precond;
  std::unique_ptr<DiagonalPreconditioner> pd;
  switch (opt.preconditioner) {
    case Preconditioner::None: precond = [](const VectorXd& r) { return r; }; break;
    case Preconditioner::Diagonal:
      pd = std::make_unique<DiagonalPreconditioner>(rp);
      report.regularized_blocks = pd->regularized_blocks();
      precond = [&pd](const VectorXd& r) { return pd->apply(r); };
      break;
    case Preconditioner::Full:
      pd = std::make_unique<DiagonalPreconditioner>(rp);
      report.regularized_blocks = pd->regularized_blocks();
      precond = [&rp, &report, &pd](const VectorXd& r) {
        InnerSolveStats st;
        VectorXd z = apply_precond_Pf(rp, r, &st, 1e-8, pd.get());
        if (st.cap_reached) ++report.inner_cap_hits;
        return z;
      };
      break;
  }

  const ReducedRhs rr = assemble_reduced_rhs(rp);
  VectorXd w = w0 ? *w0 : VectorXd::Zero(rp.size());
  if (w.size() != rp.size()) throw ConfigError("initial control has wrong size");
  VectorXd gw = w.isZero(0.0) ? VectorXd::Zero(rp.size()) : rp.apply(w);
  VectorXd r = gw + rr.d;
  double J = w.dot(gw) + 2.0 * rr.d.dot(w) + rr.constant;
  const Eigen::Index nl = gs.num_lambda();
  report.r0_lambda_norm = r.head(nl).norm();
  report.r0_psi_norm = r.tail(gs.num_psi()).norm();
  const double ref = rr.d.norm() > 0.0 ? rr.d.norm() : r.norm();
  const double target = opt.tol * ref;
  report.residual_history.push_back(r.norm());
  report.functional_history.push_back(J);

  auto finish = [&](bool ok) {
    report.converged = ok;
    report.functional_value = J;
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return ControlState::split(gs, w);
  };
  if (r.norm() <= target) return finish(true);

  VectorXd z = precond(r);
  double rz = r.dot(z);
  report.precond_residual_history.push_back(std::sqrt(std::max(rz, 0.0)));
  VectorXd dw = -z;
  while (report.iterations < opt.maxit) {
    const VectorXd gd = rp.apply(dw);
    const double curv = dw.dot(gd);
    if (!(curv > 0.0)) {
      report.indefinite = true;
      report.warnings.push_back("non-positive curvature at iteration " + std::to_string(report.iterations));
      return finish(false);
    }
    const double zeta = rz / curv;
    J += 2.0 * zeta * dw.dot(r) + zeta * zeta * curv;
    w += zeta * dw;
    r += zeta * gd;
    ++report.iterations;
    report.residual_history.push_back(r.norm());
    report.functional_history.push_back(J);
    if (r.norm() <= target) {
      const VectorXd rt = rp.gradient(w, true);
      if (rt.norm() <= target) {
        r = rt;
        report.residual_history.back() = r.norm();
        return finish(true);
      }
      if (report.restarts >= opt.max_restarts) {
        report.warnings.push_back("true residual stagnates above tolerance");
        r = rt;
        report.residual_history.back() = r.norm();
        return finish(false);
      }
      ++report.restarts;
      r = rt;
      report.residual_history.back() = r.norm();
      z = precond(r);
      rz = r.dot(z);
      dw = -z;
      continue;
    }
    z = precond(r);
    const double rz_new = r.dot(z);
    report.precond_residual_history.push_back(std::sqrt(std::max(rz_new, 0.0)));
    dw = -z + (rz_new / rz) * dw;
    rz = rz_new;
  }
  report.warnings.push_back("iteration limit reached");
  return finish(false);
}

/// Same network with every transmissivity multiplied by k. Sources and
/// Neumann data are multiplied too so heads are unchanged; the coupling
/// weight alpha must be multiplied by k as well (see scaled_coupling).
inline FractureNetwork rescale_problem(const FractureNetwork& net, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("scaling factor must be positive");
  std::vector<Fracture> fr = net.fractures();
  for (auto& f : fr) {
    f.transmissivity *= k;
    f.source = f.source.scaled(k);
    for (auto& bc : f.edge_bcs)
      if (!bc.is_dirichlet()) bc.value = bc.value.scaled(k);
  }
  return FractureNetwork(std::move(fr), net.traces());
}

inline CouplingParams scaled_coupling(const CouplingParams& base, double k) {
  CouplingParams p;
  p.alpha = base.alpha * k;
  p.functional_alpha = base.cost_alpha();
  return p;
}

/// Power of ten balancing head and flux magnitudes: head scale dh over the
/// flux scale K dh / L.
inline double estimate_scaling_factor(double head_drop, double extent, double k_ref) {
  if (!(k_ref > 0.0) || !(extent > 0.0) || !(head_drop > 0.0))
    throw ConfigError("scaling estimate needs positive head drop, extent and transmissivity");
  const double flux = k_ref * head_drop / extent;
  return std::pow(10.0, std::round(std::log10(head_drop / flux)));
}

}  // namespace dfnopt

#endif  // DFNOPT_OPTIMIZER_HPP

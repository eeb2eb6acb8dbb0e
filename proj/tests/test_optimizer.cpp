#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "dfnopt/dfn3.hpp"
#include "dfnopt/io.hpp"
#include "dfnopt/optimizer.hpp"

using namespace dfnopt;
using dfnopt::testing::dense_reduced;

namespace {

GlobalSystem system_of(const FractureNetwork& net, double dh, double dl = 0.5, double dp = 0.3,
                       CouplingParams cp = CouplingParams{}) {
  DiscretizationParams p;
  p.mesh.max_area = dh;
  p.delta_lambda = dl;
  p.delta_psi = dp;
  p.coupling = cp;
  return discretize(net, p);
}

FractureNetwork homogeneous_dfn3() {
  auto f = dfn3::fractures();
  for (auto& fr : f) {
    fr.edge_bcs.assign(fr.vertices.size(), BoundaryCondition::dirichlet(Field::constant(0.0)));
    fr.source = Field::constant(0.0);
  }
  return FractureNetwork::build(std::move(f));
}

VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> n01;
  VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = n01(rng);
  return v;
}

double rel(const VectorXd& a, const VectorXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST(KktDirect, BlockRowResiduals) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  const KktSolution k = solve_kkt_direct(gs);
  EXPECT_LT(k.relative_residual, 1e-10);

  const VectorXd& h = k.h;
  const VectorXd& p = k.p;
  VectorXd gh(gs.num_h()), cd = VectorXd::Zero(gs.num_psi());
  for (int i = 0; i < gs.num_fractures(); ++i) {
    gh.segment(gs.h_begin(i), gs.h_size(i)) = rp.gh_lift(i);
    const auto& ls = gs.locals[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < ls.couplings.size(); ++c)
      cd.segment(gs.psi_begin(ls.couplings[c].trace_id), gs.psi_size(ls.couplings[c].trace_id)) += rp.cd_lift(i, c);
  }
  const SparseMatrix A = gs.A(), Gh = gs.Gh(), B = gs.B(), C = gs.C(), Cj = gs.Cj(), Gp = gs.Gpsi();
  const VectorXd r1 = Gh * h + gh - Cj * k.psi - A * p;
  const VectorXd r2 = B.transpose() * p;
  const VectorXd r3 = Gp * k.psi + C.transpose() * p - Cj.transpose() * h - cd;
  const VectorXd r4 = A * h - B * k.lambda - C * k.psi - gs.q();
  EXPECT_LT(r1.norm(), 1e-10 * (gh.norm() + 1.0));
  EXPECT_LT(r2.norm(), 1e-10 * (gh.norm() + 1.0));
  EXPECT_LT(r3.norm(), 1e-10 * (cd.norm() + 1.0));
  EXPECT_LT(r4.norm(), 1e-10 * gs.q().norm());
}

TEST(KktDirect, HomogeneousProblemGivesZero) {
  const auto gs = system_of(homogeneous_dfn3(), 0.05);
  const KktSolution k = solve_kkt_direct(gs);
  EXPECT_EQ(k.h.norm(), 0.0);
  EXPECT_EQ(k.lambda.norm(), 0.0);
  EXPECT_EQ(k.psi.norm(), 0.0);
}

TEST(KktDirect, AgreesWithPcg) {
  const auto gs = system_of(builtin_dfn3(), 0.05);
  const ReducedProblem rp(gs);
  const KktSolution k = solve_kkt_direct(gs);
  PcgOptions opt;
  opt.tol = 1e-12;
  SolveReport rep;
  const auto c = pcg_solve(rp, opt, rep);
  ASSERT_TRUE(rep.converged);
  EXPECT_LT(rel(c.w(), k.control().w()), 1e-6);
}

TEST(ApplyGhat, ZeroAndDenseOracle) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  ASSERT_LE(gs.num_h() + gs.num_controls(), 500);
  const ReducedProblem rp(gs);
  EXPECT_EQ(apply_Ghat(rp, VectorXd::Zero(rp.size())).norm(), 0.0);
  const auto dr = dense_reduced(gs);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const VectorXd w = random_vector(rng, rp.size());
    EXPECT_LT(rel(apply_Ghat(rp, w), dr.G * w), 1e-10);
  }
}

TEST(ApplyGhat, Symmetry) {
  const auto gs = system_of(builtin_dfn3(), 0.03, 0.7, 0.4);
  const ReducedProblem rp(gs);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    const VectorXd a = random_vector(rng, rp.size()), b = random_vector(rng, rp.size());
    const double x = rp.apply(a).dot(b), y = a.dot(rp.apply(b));
    EXPECT_NEAR(x, y, 1e-10 * std::abs(x));
  }
}

TEST(ReducedRhs, DenseOracle) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  const auto dr = dense_reduced(gs);
  const ReducedRhs r = assemble_reduced_rhs(rp);
  EXPECT_LT(rel(r.d, dr.d), 1e-10);
  EXPECT_NEAR(r.constant, dr.constant, 1e-10 * dr.constant);
}

TEST(ReducedRhs, HomogeneousIsZero) {
  const auto gs = system_of(homogeneous_dfn3(), 0.05);
  const ReducedProblem rp(gs);
  const ReducedRhs r = assemble_reduced_rhs(rp);
  EXPECT_EQ(r.d.norm(), 0.0);
  EXPECT_EQ(r.constant, 0.0);
}

TEST(ReducedRhs, FunctionalIsQuadratic) {
  const auto gs = system_of(builtin_dfn3(), 0.03);
  const ReducedProblem rp(gs);
  const auto dr = dense_reduced(gs);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    const VectorXd w = random_vector(rng, rp.size());
    const double j = rp.functional(w);
    EXPECT_NEAR(j, dr.functional(w), 1e-10 * j);
  }
}

TEST(NullSpace, ReducedHessianIsPositiveDefinite) {
  const auto gs = system_of(builtin_dfn3(), 0.05);
  const Eigen::MatrixXd K = dfnopt::testing::constraint_matrix(gs);
  const Eigen::MatrixXd Z = Eigen::FullPivLU<Eigen::MatrixXd>(K).kernel();
  ASSERT_EQ(Z.cols(), gs.num_controls());
  const Eigen::MatrixXd H = Z.transpose() * dfnopt::testing::full_hessian(gs) * Z;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Gradient, CentralDifferences) {
  const auto gs = system_of(builtin_dfn3(), 0.05);
  const ReducedProblem rp(gs);
  std::mt19937_64 rng(9);
  const VectorXd w = random_vector(rng, rp.size());
  const VectorXd g = 2.0 * rp.gradient(w, true);
  const double eps = 1e-4;
  VectorXd fd(rp.size());
  for (int k = 0; k < rp.size(); ++k) {
    VectorXd e = VectorXd::Zero(rp.size());
    e(k) = eps;
    fd(k) = (rp.functional(w + e) - rp.functional(w - e)) / (2.0 * eps);
  }
  EXPECT_LT(rel(g, fd), 1e-6);
}

TEST(Pcg, ExactStartConvergesImmediately) {
  const auto gs = system_of(builtin_dfn3(), 0.03);
  const ReducedProblem rp(gs);
  const VectorXd w0 = solve_kkt_direct(gs).control().w();
  PcgOptions opt;
  opt.tol = 1e-8;
  SolveReport rep;
  const auto c = pcg_solve(rp, opt, rep, &w0);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0);
  EXPECT_EQ(c.w(), w0);
}

TEST(Pcg, MatchesKktWithoutPreconditioner) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  PcgOptions opt;
  opt.tol = 1e-10;
  SolveReport rep;
  const auto c = pcg_solve(rp, opt, rep);
  ASSERT_TRUE(rep.converged);
  EXPECT_LT(rel(c.w(), solve_kkt_direct(gs).control().w()), 1e-6);
  // Incremental functional tracks the direct evaluation.
  EXPECT_NEAR(rep.functional_value, rp.functional(c.w()), 1e-9 * rp.constant());
  EXPECT_EQ(rep.residual_history.size(), static_cast<std::size_t>(rep.iterations) + 1);
}

TEST(Pcg, PreconditionersAgree) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  const VectorXd ref = solve_kkt_direct(gs).control().w();
  for (auto pc : {Preconditioner::Diagonal, Preconditioner::Full}) {
    PcgOptions opt;
    opt.tol = 1e-10;
    opt.preconditioner = pc;
    SolveReport rep;
    const auto c = pcg_solve(rp, opt, rep);
    EXPECT_TRUE(rep.converged) << to_string(pc);
    EXPECT_LT(rel(c.w(), ref), 1e-6) << to_string(pc);
    EXPECT_EQ(rep.preconditioner, pc);
  }
}

TEST(Pcg, OrderingOnTenFractureSample) {
  const auto net = load_network(std::string(DFNOPT_DATA_DIR) + "/dfn10.dfn");
  const auto gs = system_of(net, 0.006);
  const ReducedProblem rp(gs);
  int it[3];
  for (auto pc : {Preconditioner::None, Preconditioner::Full, Preconditioner::Diagonal}) {
    PcgOptions opt;
    opt.preconditioner = pc;
    SolveReport rep;
    (void)pcg_solve(rp, opt, rep);
    EXPECT_TRUE(rep.converged);
    it[static_cast<int>(pc)] = rep.iterations;
  }
  EXPECT_LT(it[1], it[2]);
  EXPECT_LT(it[2], it[0]);
}

TEST(Pcg, RejectsBadOptions) {
  const auto gs = system_of(builtin_dfn3(), 0.05);
  const ReducedProblem rp(gs);
  PcgOptions opt;
  opt.tol = 0.0;
  SolveReport rep;
  EXPECT_THROW(pcg_solve(rp, opt, rep), ConfigError);
  opt.tol = 1e-6;
  const VectorXd bad = VectorXd::Zero(3);
  EXPECT_THROW(pcg_solve(rp, opt, rep, &bad), ConfigError);
}

TEST(Pcg, IterationLimitReported) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  PcgOptions opt;
  opt.tol = 1e-12;
  opt.maxit = 3;
  SolveReport rep;
  (void)pcg_solve(rp, opt, rep);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 3);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(PrecondPd, SingleDofBlock) {
  const auto gs = system_of(builtin_dfn3(), 0.05, 0.01, 0.3);
  const ReducedProblem rp(gs);
  const auto pd = build_precond_Pd(rp);
  for (int m = 0; m < gs.num_traces(); ++m) {
    ASSERT_EQ(gs.lambda_size(m), 1);
    VectorXd e = VectorXd::Zero(gs.num_lambda());
    e(gs.lambda_begin(m)) = 1.0;
    const double v = e.dot(rp.apply_D(e));
    EXPECT_GT(v, 0.0);
    EXPECT_NEAR(pd.block(m)(0, 0), v, 1e-12 * v);
  }
}

TEST(PrecondPd, BlockDiagonalAndDenseBlocks) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  const auto pd = build_precond_Pd(rp);
  const auto dr = dense_reduced(gs);
  for (int m = 0; m < gs.num_traces(); ++m) {
    const auto b = gs.lambda_begin(m), n = gs.lambda_size(m);
    const Eigen::MatrixXd ref = dr.G.block(b, b, n, n);
    EXPECT_LT((pd.block(m) - ref).norm(), 1e-10 * ref.norm());
  }
  std::mt19937_64 rng(12);
  VectorXd r = VectorXd::Zero(rp.size());
  r.segment(gs.lambda_begin(1), gs.lambda_size(1)) = random_vector(rng, gs.lambda_size(1));
  const VectorXd z = pd.apply(r);
  VectorXd outside = z;
  outside.segment(gs.lambda_begin(1), gs.lambda_size(1)).setZero();
  EXPECT_EQ(outside.norm(), 0.0);
  EXPECT_GT(z.norm(), 0.0);
  EXPECT_EQ(pd.regularized_blocks(), 0);
}

TEST(PrecondPf, LinearityAndDecoupling) {
  const auto gs = system_of(builtin_dfn3(), 0.03);
  const ReducedProblem rp(gs);
  EXPECT_EQ(apply_precond_Pf(rp, VectorXd::Zero(rp.size())).norm(), 0.0);
  std::mt19937_64 rng(13);
  VectorXd r = random_vector(rng, rp.size());
  r.head(gs.num_lambda()).setZero();
  const VectorXd z = apply_precond_Pf(rp, r);
  EXPECT_EQ(z.head(gs.num_lambda()).norm(), 0.0);
  const Eigen::MatrixXd gp(gs.Gpsi());
  const VectorXd zp = gp.ldlt().solve(r.tail(gs.num_psi()));
  EXPECT_LT(rel(z.tail(gs.num_psi()), zp), 1e-12);
}

TEST(PrecondPf, DenseOracle) {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  const auto dr = dense_reduced(gs);
  const Eigen::Index nl = gs.num_lambda(), np = gs.num_psi();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(nl + np, nl + np);
  P.topLeftCorner(nl, nl) = dr.G.topLeftCorner(nl, nl);
  P.bottomRightCorner(np, np) = Eigen::MatrixXd(gs.Gpsi());
  std::mt19937_64 rng(14);
  const VectorXd r = random_vector(rng, rp.size());
  const VectorXd ref = P.ldlt().solve(r);
  InnerSolveStats st;
  EXPECT_LT(rel(apply_precond_Pf(rp, r, &st), ref), 1e-7);
  EXPECT_FALSE(st.cap_reached);
  const auto pd = build_precond_Pd(rp);
  InnerSolveStats st2;
  EXPECT_LT(rel(apply_precond_Pf(rp, r, &st2, 1e-8, &pd), ref), 1e-7);
  EXPECT_LE(st2.iterations, st.iterations);
}

TEST(SdStepsize, EigenvectorStep) {
  const auto gs = system_of(builtin_dfn3(), 0.05);
  const ReducedProblem rp(gs);
  const auto dr = dense_reduced(gs);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dr.G);
  std::mt19937_64 rng(15);
  const VectorXd w = random_vector(rng, rp.size());
  const VectorXd r = rp.gradient(w, true);
  for (int k : {0, static_cast<int>(rp.size()) / 2, static_cast<int>(rp.size()) - 1}) {
    const VectorXd v = es.eigenvectors().col(k);
    const double mu = es.eigenvalues()(k);
    const double zeta = sd_stepsize(rp, w, v);
    EXPECT_NEAR(zeta, -r.dot(v) / (mu * v.squaredNorm()), 1e-8 * std::abs(zeta));
  }
  const VectorXd dw = -r;
  const double zeta = sd_stepsize(rp, w, dw);
  const VectorXd w1 = w + zeta * dw;
  EXPECT_NEAR(rp.gradient(w1, true).dot(dw), 0.0, 1e-10 * r.squaredNorm());
  const double j = rp.functional(w1);
  EXPECT_LE(j, rp.functional(w + (zeta + 1e-3 * std::abs(zeta)) * dw));
  EXPECT_LE(j, rp.functional(w + (zeta - 1e-3 * std::abs(zeta)) * dw));
}

TEST(RecoverHead, MatchesKktAndSatisfiesConstraint) {
  const auto gs = system_of(builtin_dfn3(), 0.03);
  const ReducedProblem rp(gs);
  const KktSolution k = solve_kkt_direct(gs);
  const auto heads = recover_head(rp, k.control().w());
  const auto free = rp.heads(k.control().w());
  VectorXd h(gs.num_h());
  for (int i = 0; i < gs.num_fractures(); ++i) {
    const VectorXd ref = gs.locals[static_cast<std::size_t>(i)].expand(k.h.segment(gs.h_begin(i), gs.h_size(i)));
    EXPECT_LT(rel(heads[static_cast<std::size_t>(i)], ref), 1e-9);
    h.segment(gs.h_begin(i), gs.h_size(i)) = free[static_cast<std::size_t>(i)];
  }
  EXPECT_LT(gs.constraint_residual(h, k.lambda, k.psi).norm(), 1e-10 * gs.q().norm());
}

TEST(RecoverHead, HomogeneousZero) {
  const auto gs = system_of(homogeneous_dfn3(), 0.05);
  const ReducedProblem rp(gs);
  for (const auto& h : recover_head(rp, VectorXd::Zero(rp.size()))) EXPECT_EQ(h.norm(), 0.0);
}

TEST(Rescale, IdentityAndErrors) {
  const auto net = builtin_dfn3();
  const auto same = rescale_problem(net, 1.0);
  for (std::size_t i = 0; i < net.num_fractures(); ++i) {
    EXPECT_EQ(same.fractures()[i].transmissivity, net.fractures()[i].transmissivity);
    EXPECT_EQ(same.fractures()[i].vertices, net.fractures()[i].vertices);
  }
  EXPECT_THROW(rescale_problem(net, 0.0), ConfigError);
  EXPECT_THROW(rescale_problem(net, -2.0), ConfigError);
}

TEST(Rescale, HeadsInvariantFluxesScaled) {
  const auto net = builtin_dfn3();
  const double k = 1e3;
  const auto gs0 = system_of(net, 0.03);
  const auto gs1 = system_of(rescale_problem(net, k), 0.03, 0.5, 0.3, scaled_coupling(CouplingParams{}, k));
  const auto s0 = solve_kkt_direct(gs0);
  const auto s1 = solve_kkt_direct(gs1);
  EXPECT_LT(rel(s1.h, s0.h), 1e-8);
  EXPECT_LT(rel(s1.lambda, k * s0.lambda), 1e-8);
  EXPECT_LT(rel(s1.psi, s0.psi), 1e-8);
}

TEST(ScalingEstimate, PaperCases) {
  EXPECT_DOUBLE_EQ(estimate_scaling_factor(1.0, 1000.0, 1e-7), 1e10);
  // Paper: about 1e7 for K = 1e-5.
  EXPECT_LE(std::abs(std::log10(estimate_scaling_factor(1.0, 1000.0, 1e-5)) - 7.0), 1.0);
  EXPECT_DOUBLE_EQ(estimate_scaling_factor(1.0, 1.0, 1.0), 1.0);
  EXPECT_THROW(estimate_scaling_factor(1.0, 1.0, 0.0), ConfigError);
}

TEST(Preconditioner, Names) {
  EXPECT_EQ(parse_preconditioner("pd"), Preconditioner::Diagonal);
  EXPECT_EQ(parse_preconditioner("pf"), Preconditioner::Full);
  EXPECT_EQ(parse_preconditioner("none"), Preconditioner::None);
  EXPECT_THROW(parse_preconditioner("ilu"), ConfigError);
}

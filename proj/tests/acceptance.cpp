#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dense_oracle.hpp"
#include "dfnopt/pipeline.hpp"

using namespace dfnopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

GlobalSystem system_of(const FractureNetwork& net, double dh, MeshMode mode = MeshMode::Nonconforming,
                       CouplingParams cp = CouplingParams{}) {
  DiscretizationParams p;
  p.mesh.max_area = dh;
  p.mesh.mode = mode;
  p.delta_lambda = 0.5;
  p.delta_psi = 0.3;
  p.coupling = cp;
  return discretize(net, p);
}

SolveReport solve(const ReducedProblem& rp, Preconditioner pc, double tol, VectorXd* w = nullptr) {
  PcgOptions opt;
  opt.preconditioner = pc;
  opt.tol = tol;
  opt.maxit = 50000;
  SolveReport rep;
  const auto c = pcg_solve(rp, opt, rep);
  if (w) *w = c.w();
  return rep;
}

double rel(const VectorXd& a, const VectorXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> n01;
  VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = n01(rng);
  return v;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
  }
  return sxy / sxx;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(3);
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
  return os.str();
}

std::string join(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
  return os.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

const std::string data_dir = DFNOPT_DATA_DIR;

// DFN10 meshes for the preconditioner and conservation studies.
const std::vector<double> dfn10_levels = {0.006, 0.0015, 0.000375, 0.00009375};

Outcome solver_equivalence() {
  const auto t0 = Clock::now();
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  const VectorXd ref = solve_kkt_direct(gs).control().w();
  VectorXd w;
  const auto rep = solve(rp, Preconditioner::None, 1e-10, &w);
  const double e = rel(w, ref), t = seconds_since(t0);
  return {rep.converged && e <= 1e-6 && t < 10.0,
          "rel diff " + fmt(e) + ", " + std::to_string(rep.iterations) + " it, " + fmt(t) + " s"};
}

Outcome matrix_free_oracle() {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const int dofs = gs.num_h() + gs.num_controls();
  const ReducedProblem rp(gs);
  const auto dr = testing::dense_reduced(gs);
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const VectorXd w = random_vector(rng, rp.size());
    worst = std::max(worst, rel(apply_Ghat(rp, w), dr.G * w));
  }
  const double ed = rel(assemble_reduced_rhs(rp).d, dr.d);
  return {dofs <= 500 && worst <= 1e-10 && ed <= 1e-10,
          std::to_string(dofs) + " dofs, Ghat rel " + fmt(worst) + ", d rel " + fmt(ed)};
}

Outcome null_space_spd() {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const Eigen::MatrixXd K = testing::constraint_matrix(gs);
  const Eigen::MatrixXd Z = Eigen::FullPivLU<Eigen::MatrixXd>(K).kernel();
  const Eigen::MatrixXd H = Z.transpose() * testing::full_hessian(gs) * Z;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
  const double lo = es.eigenvalues().minCoeff();
  return {Z.cols() == gs.num_controls() && lo > 0.0,
          "dim " + std::to_string(Z.cols()) + ", min eig " + fmt(lo) + ", max eig " + fmt(es.eigenvalues().maxCoeff())};
}

Outcome dfn3_convergence() {
  const auto t0 = Clock::now();
  const auto net = builtin_dfn3();
  const auto ex = dfn3_exact(net);
  std::vector<double> dh;
  for (int l = 0; l <= 4; ++l) dh.push_back(0.02 * std::pow(8e-5 / 0.02, l / 4.0));
  std::vector<double> hs;
  for (double a : dh) hs.push_back(std::sqrt(a));

  auto errors = [&](MeshMode mode, std::vector<double>& l2, std::vector<double>& h1, std::vector<double>& fl) {
    for (double a : dh) {
      const auto gs = system_of(net, a, mode);
      const ReducedProblem rp(gs);
      VectorXd w;
      solve(rp, Preconditioner::Diagonal, 1e-10, &w);
      const auto e = errors_vs_exact(gs, net, make_solution(rp, w), &ex);
      l2.push_back(e.E_h_L2);
      h1.push_back(e.E_h_H1);
      fl.push_back(e.E_lambda_L2);
    }
  };
  std::vector<double> cl2, ch1, cfl, nl2, nh1, nfl;
  errors(MeshMode::TraceConforming, cl2, ch1, cfl);
  errors(MeshMode::Nonconforming, nl2, nh1, nfl);
  const double sl2 = slope(hs, cl2), sh1 = slope(hs, ch1), t = seconds_since(t0);
  const bool conf = sl2 >= 1.8 && sh1 >= 0.9;
  const bool nonc = strictly_decreasing(nl2) && strictly_decreasing(nh1) && strictly_decreasing(nfl);
  return {conf && nonc && t < 300.0,
          "conforming orders L2 " + fmt(sl2) + " H1 " + fmt(sh1) + "; nonconforming L2 [" + join(nl2) + "] H1 [" +
              join(nh1) + "] Elambda [" + join(nfl) + "]; " + fmt(t) + " s"};
}

struct Dfn10Level {
  int none = 0, pd = 0, pf = 0;
  double delta_inout = 0.0, delta_s = 0.0;
};

const std::vector<Dfn10Level>& dfn10_study() {
  static const std::vector<Dfn10Level> levels = [] {
    const auto net = load_network(data_dir + "/dfn10.dfn");
    std::vector<Dfn10Level> out;
    for (double dh : dfn10_levels) {
      const auto gs = system_of(net, dh);
      const ReducedProblem rp(gs);
      Dfn10Level lv;
      lv.none = solve(rp, Preconditioner::None, 1e-6).iterations;
      lv.pd = solve(rp, Preconditioner::Diagonal, 1e-6).iterations;
      lv.pf = solve(rp, Preconditioner::Full, 1e-6).iterations;
      VectorXd w;
      solve(rp, Preconditioner::Diagonal, 1e-10, &w);
      const auto ind = compute_indicators(rp, net, w);
      lv.delta_inout = ind.delta_inout;
      lv.delta_s = ind.delta_S_h;
      out.push_back(lv);
    }
    return out;
  }();
  return levels;
}

Outcome preconditioner_ordering() {
  const auto& lv = dfn10_study();
  bool order = true;
  std::vector<int> none, pd, pf;
  for (const auto& l : lv) {
    order = order && l.pf < l.pd && l.pd < l.none;
    none.push_back(l.none);
    pd.push_back(l.pd);
    pf.push_back(l.pf);
  }
  const double factor = static_cast<double>(lv.back().none) / lv.back().pd;
  const double growth = static_cast<double>(lv.back().pf) / lv.front().pf - 1.0;
  return {order && factor >= 2.0 && growth <= 0.5,
          "none [" + join(none) + "] pd [" + join(pd) + "] pf [" + join(pf) + "], none/pd " + fmt(factor) +
              ", pf growth " + fmt(100.0 * growth) + "%"};
}

Outcome conservation() {
  const auto& lv = dfn10_study();
  std::vector<double> dio, ds;
  for (const auto& l : lv) {
    dio.push_back(l.delta_inout);
    ds.push_back(l.delta_s);
  }
  return {strictly_decreasing(dio) && strictly_decreasing(ds), "delta_inout [" + join(dio) + "] delta_S [" + join(ds) + "]"};
}

Outcome scaling_study() {
  GeneratorParams g;
  g.count = 100;
  g.k_fixed = 1e-7;
  g.head_drop = 1.0;
  g.box_max = Vec3::Constant(1000.0);
  g.seed = 1;
  const auto net = generate_network(g);
  const NetworkScales s = network_scales(net);
  const CouplingParams base{s.transmissivity / s.extent, 1.0};
  const std::vector<double> ks = {1e7, 1e8, 1e9, 1e10, 1e11, 1e12};
  auto system_at = [&](double k) {
    return system_of(rescale_problem(net, k), 16000.0, MeshMode::TraceConforming, scaled_coupling(base, k));
  };
  std::vector<double> ratio;
  for (double k : ks) {
    const GlobalSystem gs = system_at(k);
    const ReducedProblem rp(gs);
    const VectorXd d = assemble_reduced_rhs(rp).d;
    const int nl = gs.num_lambda();
    ratio.push_back(d.head(nl).norm() / d.tail(rp.size() - nl).norm());
  }
  bool crosses = false;
  std::size_t balanced = 0;
  for (std::size_t k = 0; k < ks.size(); ++k) {
    if (k > 0 && (ratio[k] - 1.0) * (ratio[k - 1] - 1.0) <= 0.0) crosses = true;
    if (std::abs(std::log(ratio[k])) < std::abs(std::log(ratio[balanced]))) balanced = k;
  }
  // Unpreconditioned counts; a capped count is a lower bound.
  const int cap = 20000;
  auto iterations = [&](double k) {
    const GlobalSystem gs = system_at(k);
    const ReducedProblem rp(gs);
    PcgOptions opt;
    opt.tol = 1e-6;
    opt.maxit = cap;
    SolveReport rep;
    pcg_solve(rp, opt, rep);
    return std::make_pair(rep.iterations, rep.converged);
  };
  const auto lo = iterations(ks.front()), mid = iterations(ks[balanced]), hi = iterations(ks.back());
  const bool minimum = mid.second && mid.first <= lo.first && mid.first <= hi.first;
  auto show = [](const std::pair<int, bool>& r) { return std::to_string(r.first) + (r.second ? "" : "+"); };
  return {crosses && minimum,
          std::to_string(net.num_fractures()) + " fractures, r0 ratio [" + join(ratio) + "], balanced K " +
              fmt(ks[balanced]) + ", iterations " + show(lo) + " / " + show(mid) + " / " + show(hi)};
}

Outcome gradient_check() {
  const auto gs = system_of(builtin_dfn3(), 0.05);
  const ReducedProblem rp(gs);
  std::mt19937_64 rng(108);
  double worst = 0.0;
  const double eps = 1e-4;
  for (int t = 0; t < 5; ++t) {
    const VectorXd w = random_vector(rng, rp.size());
    const VectorXd g = 2.0 * rp.gradient(w, true);
    VectorXd fd(rp.size());
    for (int k = 0; k < rp.size(); ++k) {
      VectorXd e = VectorXd::Zero(rp.size());
      e(k) = eps;
      fd(k) = (rp.functional(w + e) - rp.functional(w - e)) / (2.0 * eps);
    }
    worst = std::max(worst, rel(g, fd));
  }
  return {worst <= 1e-6, std::to_string(rp.size()) + " controls, worst rel " + fmt(worst)};
}

Outcome functional_consistency() {
  const auto gs = system_of(builtin_dfn3(), 0.02);
  const ReducedProblem rp(gs);
  std::mt19937_64 rng(109);
  std::vector<VectorXd> points{solve_kkt_direct(gs).control().w()};
  for (int t = 0; t < 4; ++t) points.push_back(random_vector(rng, rp.size()));
  double worst = 0.0;
  for (const auto& w : points) {
    const double j = rp.functional(w);
    const double q = trace_mismatch(gs, make_solution(rp, w));
    worst = std::max(worst, std::abs(j - q) / std::abs(q));
  }
  return {gs.alpha() == 1.0 && worst <= 1e-10, "worst rel " + fmt(worst)};
}

Outcome generator_statistics() {
  GeneratorParams p;
  p.log10_mean = -5.0;
  p.log10_variance = 1.0 / 3.0;
  p.seed = 110;
  const auto v = sample_log10_transmissivity(p, 10000);
  double m = 0, s = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) s += (x - m) * (x - m);
  s /= static_cast<double>(v.size() - 1);
  return {std::abs(m + 5.0) <= 0.02 && std::abs(s - 1.0 / 3.0) <= 0.02, "mean " + fmt(m) + ", variance " + fmt(s)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver equivalence", solver_equivalence},
      {"matrix-free oracle", matrix_free_oracle},
      {"null-space SPD", null_space_spd},
      {"DFN3 convergence", dfn3_convergence},
      {"preconditioner ordering", preconditioner_ordering},
      {"conservation", conservation},
      {"scaling study", scaling_study},
      {"gradient check", gradient_check},
      {"functional consistency", functional_consistency},
      {"generator statistics", generator_statistics},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << k + 1 << " " << criteria[k].first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

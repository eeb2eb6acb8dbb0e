// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_PIPELINE_HPP
#define DFNOPT_PIPELINE_HPP

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dfnopt/assembly.hpp"
#include "dfnopt/dfn3.hpp"
#include "dfnopt/error.hpp"
#include "dfnopt/generator.hpp"
#include "dfnopt/indicators.hpp"
#include "dfnopt/io.hpp"
#include "dfnopt/meshing.hpp"
#include "dfnopt/optimizer.hpp"
#include "dfnopt/vtk.hpp"

namespace dfnopt {

enum class SolverKind { Kkt, Pcg };

struct RunConfig {
  std::string network = "builtin:dfn3";  // builtin:dfn3 | generate | <path>
  GeneratorParams generator;
  double delta_h = 0.02;
  double delta_lambda = 0.5;
  double delta_psi = 0.3;
  double alpha = 1.0;
  MeshMode mode = MeshMode::Nonconforming;
  SolverKind solver = SolverKind::Pcg;
  Preconditioner precond = Preconditioner::Diagonal;
  double tol = 1e-6;
  int maxit = 10000;
  std::string scaling = "off";  // off | auto | <factor>
  std::string out;              // empty: no files written

  void validate() const {
    if (!(delta_h > 0.0)) throw ConfigError("dh must be positive");
    if (!(delta_lambda > 0.0) || delta_lambda > 1.0) throw ConfigError("dl must lie in (0, 1]");
    if (!(delta_psi > 0.0) || delta_psi > 1.0) throw ConfigError("dp must lie in (0, 1]");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (maxit < 0) throw ConfigError("maxit must be non-negative");
  }
};

inline MeshMode parse_mode(const std::string& s) {
  if (s == "nonconforming") return MeshMode::Nonconforming;
  if (s == "trace_conforming") return MeshMode::TraceConforming;
  throw ConfigError("unknown mode '" + s + "' (expected nonconforming or trace_conforming)");
}

inline std::string to_string(MeshMode m) {
  return m == MeshMode::TraceConforming ? "trace_conforming" : "nonconforming";
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "kkt") return SolverKind::Kkt;
  if (s == "pcg") return SolverKind::Pcg;
  throw ConfigError("unknown solver '" + s + "' (expected kkt or pcg)");
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t n = 0;
    const double d = std::stod(v, &n);
    if (n != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t n = 0;
    const long long d = std::stoll(v, &n);
    if (n != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
}

}  // namespace detail

/// Applies `key = value` settings (same names as the CLI flags).
inline void apply_config(RunConfig& c, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "network") c.network = v;
    else if (k == "dh") c.delta_h = detail::to_double(k, v);
    else if (k == "dl") c.delta_lambda = detail::to_double(k, v);
    else if (k == "dp") c.delta_psi = detail::to_double(k, v);
    else if (k == "alpha") c.alpha = detail::to_double(k, v);
    else if (k == "mode") c.mode = parse_mode(v);
    else if (k == "solver") c.solver = parse_solver(v);
    else if (k == "precond") c.precond = parse_preconditioner(v);
    else if (k == "tol") c.tol = detail::to_double(k, v);
    else if (k == "maxit") c.maxit = static_cast<int>(detail::to_int(k, v));
    else if (k == "scaling") c.scaling = v;
    else if (k == "out") c.out = v;
    else if (k == "seed") c.generator.seed = static_cast<std::uint64_t>(detail::to_int(k, v));
    else if (k == "count") c.generator.count = static_cast<int>(detail::to_int(k, v));
    else if (k == "k") c.generator.k_fixed = detail::to_double(k, v);
    else if (k == "lognormal") c.generator.transmissivity = v == "true" || v == "1" ? GeneratorParams::Transmissivity::LogNormal : GeneratorParams::Transmissivity::Fixed;
    else if (k == "log10_mean") c.generator.log10_mean = detail::to_double(k, v);
    else if (k == "log10_variance") c.generator.log10_variance = detail::to_double(k, v);
    else if (k == "extent") c.generator.box_max = c.generator.box_min + Vec3::Constant(detail::to_double(k, v));
    else if (k == "radius_min") c.generator.radius_min = detail::to_double(k, v);
    else if (k == "radius_max") c.generator.radius_max = detail::to_double(k, v);
    else if (k == "head_drop") c.generator.head_drop = detail::to_double(k, v);
    else throw ConfigError("unknown config key '" + k + "'");
  }
}

struct LoadedNetwork {
  FractureNetwork network;
  std::optional<ExactSolution> exact;
};

inline LoadedNetwork load_network_source(const RunConfig& c) {
  if (c.network == "builtin:dfn3") {
    LoadedNetwork ln{builtin_dfn3(), std::nullopt};
    ln.exact = dfn3_exact(ln.network);
    return ln;
  }
  if (c.network == "generate") return {generate_network(c.generator), std::nullopt};
  if (c.network.rfind("builtin:", 0) == 0) throw ConfigError("unknown builtin network '" + c.network + "'");
  return {load_network(c.network), std::nullopt};
}

/// Head drop, extent and geometric-mean transmissivity of a network.
struct NetworkScales {
  double head_drop = 0.0;
  double extent = 0.0;
  double transmissivity = 0.0;
};

inline NetworkScales network_scales(const FractureNetwork& net) {
  NetworkScales s;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, logk = 0.0;
  Vec3 bmin = Vec3::Constant(lo), bmax = Vec3::Constant(-lo);
  for (const auto& f : net.fractures()) {
    for (const auto& v : f.vertices) {
      bmin = bmin.cwiseMin(v);
      bmax = bmax.cwiseMax(v);
    }
    for (std::size_t e = 0; e < f.edge_bcs.size(); ++e) {
      if (!f.edge_bcs[e].is_dirichlet()) continue;
      const double v = f.edge_bcs[e].value(0.5 * (f.vertices[e] + f.vertices[(e + 1) % f.vertices.size()]));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    logk += std::log10(0.5 * f.transmissivity.trace());
  }
  s.head_drop = hi - lo;
  s.extent = (bmax - bmin).maxCoeff();
  s.transmissivity = std::pow(10.0, logk / static_cast<double>(net.num_fractures()));
  return s;
}

inline double resolve_scaling(const RunConfig& c, const FractureNetwork& net) {
  if (c.scaling == "off" || c.scaling.empty()) return 1.0;
  if (c.scaling == "auto") {
    const NetworkScales s = network_scales(net);
    if (!(s.head_drop > 0.0)) return 1.0;
    return estimate_scaling_factor(s.head_drop, s.extent, s.transmissivity);
  }
  const double k = detail::to_double("scaling", c.scaling);
  if (!(k > 0.0)) throw ConfigError("scaling factor must be positive");
  return k;
}

struct RunResult {
  SolveReport solve;
  IndicatorReport indicators;
  double scaling = 1.0;
  int num_h = 0;
  int num_lambda = 0;
  int num_psi = 0;
  int num_fractures = 0;
  int num_traces = 0;
  double kkt_relative_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> files;
};

/// Discretizes, solves and evaluates one configuration; writes VTK and CSV
/// artifacts when c.out is set.
inline RunResult run(const RunConfig& c, const LoadedNetwork& ln) {
  c.validate();
  RunResult res;
  res.scaling = resolve_scaling(c, ln.network);
  const FractureNetwork net = res.scaling == 1.0 ? ln.network : rescale_problem(ln.network, res.scaling);
  DiscretizationParams dp;
  dp.mesh.max_area = c.delta_h;
  dp.mesh.mode = c.mode;
  dp.delta_lambda = c.delta_lambda;
  dp.delta_psi = c.delta_psi;
  dp.coupling = scaled_coupling(CouplingParams{c.alpha}, res.scaling);
  const GlobalSystem gs = discretize(net, dp);
  res.num_h = gs.num_h();
  res.num_lambda = gs.num_lambda();
  res.num_psi = gs.num_psi();
  res.num_fractures = gs.num_fractures();
  res.num_traces = gs.num_traces();
  const ReducedProblem rp(gs);

  VectorXd w;
  if (c.solver == SolverKind::Kkt) {
    const auto t0 = std::chrono::steady_clock::now();
    const KktSolution k = solve_kkt_direct(gs);
    w = k.control().w();
    res.kkt_relative_residual = k.relative_residual;
    res.solve.converged = k.relative_residual <= 1e-10;
    res.solve.residual_history.push_back(rp.gradient(w, true).norm());
    res.solve.functional_value = rp.functional(w);
    res.solve.functional_history.push_back(res.solve.functional_value);
    res.solve.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } else {
    PcgOptions opt;
    opt.preconditioner = c.precond;
    opt.tol = c.tol;
    opt.maxit = c.maxit;
    w = pcg_solve(rp, opt, res.solve).w();
  }
  res.solve.scaling = res.scaling;
  res.indicators = compute_indicators(rp, net, w, ln.exact ? &*ln.exact : nullptr, res.scaling);

  if (!c.out.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(c.out);
    const auto heads = recover_head(rp, w);
    std::vector<std::string> names;
    for (int i = 0; i < gs.num_fractures(); ++i) {
      const std::string name = "fracture_" + std::to_string(i) + ".vtk";
      std::ostringstream os;
      write_vtk(os, gs.locals[static_cast<std::size_t>(i)].mesh, net.frame(i), heads[static_cast<std::size_t>(i)]);
      write_file((fs::path(c.out) / name).string(), os.str());
      names.push_back(name);
    }
    write_file((fs::path(c.out) / "network.vtm").string(), vtm_index(names));
    std::ostringstream rh;
    rh << "iteration,residual,functional\n";
    for (std::size_t k = 0; k < res.solve.residual_history.size(); ++k)
      rh << k << ',' << csv_number(res.solve.residual_history[k]) << ','
         << csv_number(k < res.solve.functional_history.size() ? res.solve.functional_history[k]
                                                               : std::numeric_limits<double>::quiet_NaN())
         << '\n';
    write_file((fs::path(c.out) / "residuals.csv").string(), rh.str());
    const auto& ir = res.indicators;
    std::ostringstream ic;
    ic << "converged,iterations,scaling,delta_S_h,delta_inout,phi_in,phi_out,E_h_L2,E_h_H1,E_lambda_L2,J\n";
    ic << (res.solve.converged ? 1 : 0) << ',' << res.solve.iterations << ',' << csv_number(res.scaling) << ','
       << csv_number(ir.delta_S_h) << ',' << csv_number(ir.delta_inout) << ',' << csv_number(ir.phi_in) << ','
       << csv_number(ir.phi_out) << ',' << csv_number(ir.E_h_L2) << ',' << csv_number(ir.E_h_H1) << ','
       << csv_number(ir.E_lambda_L2) << ',' << csv_number(ir.J_value) << '\n';
    write_file((fs::path(c.out) / "indicators.csv").string(), ic.str());
    res.files = names;
    res.files.insert(res.files.end(), {"network.vtm", "residuals.csv", "indicators.csv"});
  }
  return res;
}

inline RunResult run(const RunConfig& c) { return run(c, load_network_source(c)); }

/// One CSV row per parameter combination; failed cells become NaN rows.
struct SweepGrid {
  std::vector<double> delta_h;
  std::vector<double> delta_lambda;
  std::vector<double> delta_psi;
};

inline std::string sweep_header() {
  return "dh,dl,dp,nh,nlambda,npsi,converged,iterations,delta_S_h,delta_inout,E_h_L2,E_h_H1,E_lambda_L2,J\n";
}

inline std::string sweep(const RunConfig& base, const SweepGrid& grid) {
  const LoadedNetwork ln = load_network_source(base);
  const auto dhs = grid.delta_h.empty() ? std::vector<double>{base.delta_h} : grid.delta_h;
  const auto dls = grid.delta_lambda.empty() ? std::vector<double>{base.delta_lambda} : grid.delta_lambda;
  const auto dps = grid.delta_psi.empty() ? std::vector<double>{base.delta_psi} : grid.delta_psi;
  std::ostringstream os;
  os << sweep_header();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double dh : dhs)
    for (double dl : dls)
      for (double dp : dps) {
        RunConfig c = base;
        c.delta_h = dh;
        c.delta_lambda = dl;
        c.delta_psi = dp;
        c.out.clear();
        os << csv_number(dh) << ',' << csv_number(dl) << ',' << csv_number(dp) << ',';
        try {
          const RunResult r = run(c, ln);
          const auto& ir = r.indicators;
          os << r.num_h << ',' << r.num_lambda << ',' << r.num_psi << ',' << (r.solve.converged ? 1 : 0) << ','
             << r.solve.iterations << ',' << csv_number(ir.delta_S_h) << ',' << csv_number(ir.delta_inout) << ','
             << csv_number(ir.E_h_L2) << ',' << csv_number(ir.E_h_H1) << ',' << csv_number(ir.E_lambda_L2) << ','
             << csv_number(ir.J_value) << '\n';
        } catch (const Error&) {
          os << "nan,nan,nan,0,nan";
          for (int k = 0; k < 6; ++k) os << ',' << csv_number(nan);
          os << '\n';
        }
      }
  return os.str();
}

}  // namespace dfnopt

#endif  // DFNOPT_PIPELINE_HPP

// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dfnopt/pipeline.hpp"

namespace {

using namespace dfnopt;

struct Flags {
  std::string config;
  std::string network;
  std::string dh, dl, dp, alpha, solver, precond, tol, maxit, scaling, mode, seed, out;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "key = value config file (flags override it)");
  app->add_option("--network", f.network, "builtin:dfn3, generate, or a .dfn file");
  app->add_option("--dh", f.dh, "maximum triangle area");
  app->add_option("--dl", f.dl, "lambda mesh ratio in (0,1]");
  app->add_option("--dp", f.dp, "psi mesh ratio in (0,1]");
  app->add_option("--alpha", f.alpha, "coupling weight (>= 0)");
  app->add_option("--solver", f.solver, "kkt | pcg");
  app->add_option("--precond", f.precond, "none | pf | pd");
  app->add_option("--tol", f.tol, "relative residual tolerance");
  app->add_option("--maxit", f.maxit, "iteration limit");
  app->add_option("--scaling", f.scaling, "off | auto | <factor>");
  app->add_option("--mode", f.mode, "nonconforming | trace_conforming");
  app->add_option("--seed", f.seed, "generator seed");
  app->add_option("--out", f.out, "output directory");
}

RunConfig build_config(const Flags& f) {
  RunConfig c;
  std::map<std::string, std::string> kv;
  if (!f.config.empty()) kv = parse_config(read_file(f.config));
  auto set = [&kv](const char* k, const std::string& v) {
    if (!v.empty()) kv[k] = v;
  };
  set("network", f.network);
  set("dh", f.dh);
  set("dl", f.dl);
  set("dp", f.dp);
  set("alpha", f.alpha);
  set("solver", f.solver);
  set("precond", f.precond);
  set("tol", f.tol);
  set("maxit", f.maxit);
  set("scaling", f.scaling);
  set("mode", f.mode);
  set("seed", f.seed);
  set("out", f.out);
  apply_config(c, kv);
  c.validate();
  return c;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) v.push_back(detail::to_double("list", item));
  return v;
}

void print_result(const RunResult& r) {
  const auto& s = r.solve;
  const auto& i = r.indicators;
  std::printf("fractures %d  traces %d  N_H %d  N_lambda %d  N_psi %d\n", r.num_fractures, r.num_traces, r.num_h,
              r.num_lambda, r.num_psi);
  std::printf("scaling %g  converged %s  iterations %d  time %.3fs\n", r.scaling, s.converged ? "yes" : "no",
              s.iterations, s.wall_time);
  std::printf("J %.6e  delta_S_h %.6e  delta_inout %.6e\n", i.J_value, i.delta_S_h, i.delta_inout);
  if (!std::isnan(i.E_h_L2))
    std::printf("E_h_L2 %.6e  E_h_H1 %.6e  E_lambda_L2 %.6e\n", i.E_h_L2, i.E_h_H1, i.E_lambda_L2);
  for (const auto& w : s.warnings) std::printf("warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimization-based DFN flow solver"};
  app.require_subcommand(1);

  Flags run_flags, sweep_flags;
  auto* run_cmd = app.add_subcommand("run", "solve one configuration");
  add_common(run_cmd, run_flags);

  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep to CSV");
  add_common(sweep_cmd, sweep_flags);
  std::string dh_list, dl_list, dp_list, csv_path;
  sweep_cmd->add_option("--dh-list", dh_list, "comma-separated dh values");
  sweep_cmd->add_option("--dl-list", dl_list, "comma-separated dl values");
  sweep_cmd->add_option("--dp-list", dp_list, "comma-separated dp values");
  sweep_cmd->add_option("--csv", csv_path, "output CSV (default stdout)");

  auto* gen_cmd = app.add_subcommand("generate", "write a random network");
  GeneratorParams gp;
  std::string gen_out;
  double extent = 1000.0;
  bool lognormal = false;
  gen_cmd->add_option("--count", gp.count, "number of fractures")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gp.seed, "random seed");
  gen_cmd->add_option("--extent", extent, "edge length of the cubic domain");
  gen_cmd->add_option("--radius-min", gp.radius_min, "smallest fracture radius");
  gen_cmd->add_option("--radius-max", gp.radius_max, "largest fracture radius");
  gen_cmd->add_option("--k", gp.k_fixed, "fixed transmissivity");
  gen_cmd->add_flag("--lognormal", lognormal, "log-normal transmissivity");
  gen_cmd->add_option("--log10-mean", gp.log10_mean, "mean of log10 K");
  gen_cmd->add_option("--log10-variance", gp.log10_variance, "variance of log10 K");
  gen_cmd->add_option("--kappa", gp.fisher_kappa, "Fisher orientation concentration");
  gen_cmd->add_option("--head-drop", gp.head_drop, "head difference between the x faces");
  gen_cmd->add_option("--out", gen_out, "output .dfn file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const RunConfig c = build_config(run_flags);
      const RunResult r = run(c);
      print_result(r);
      return r.solve.converged ? 0 : 2;
    }
    if (*sweep_cmd) {
      const RunConfig c = build_config(sweep_flags);
      const std::string csv = sweep(c, {parse_list(dh_list), parse_list(dl_list), parse_list(dp_list)});
      if (csv_path.empty())
        std::cout << csv;
      else
        write_file(csv_path, csv);
      return 0;
    }
    if (*gen_cmd) {
      gp.box_max = gp.box_min + Vec3::Constant(extent);
      if (lognormal) gp.transmissivity = GeneratorParams::Transmissivity::LogNormal;
      const std::string text = serialize_network(generate_network(gp));
      if (gen_out.empty())
        std::cout << text;
      else
        write_file(gen_out, text);
      return 0;
    }
  } catch (const dfnopt::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

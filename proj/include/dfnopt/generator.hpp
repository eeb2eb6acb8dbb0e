// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_GENERATOR_HPP
#define DFNOPT_GENERATOR_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"

namespace dfnopt {

struct GeneratorParams {
  int count = 100;
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Constant(1000.0);
  double radius_min = 150.0;
  double radius_max = 400.0;
  int polygon_vertices = 6;
  /// Fisher concentration around mean_normal; 0 gives uniform orientations.
  double fisher_kappa = 0.0;
  Vec3 mean_normal = Vec3::UnitZ();
  enum class Transmissivity { Fixed, LogNormal };
  Transmissivity transmissivity = Transmissivity::Fixed;
  double k_fixed = 1e-7;
  double log10_mean = -5.0;
  double log10_variance = 1.0 / 3.0;
  double head_drop = 1.0;
  std::uint64_t seed = 1;
  int max_retries = 20;
};

namespace detail {

inline Vec3 sample_fisher(std::mt19937_64& rng, double kappa, const Vec3& mean) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double phi = 2.0 * std::numbers::pi * u(rng);
  double w;
  if (kappa <= 0.0) {
    w = 2.0 * u(rng) - 1.0;
  } else {
    const double r = u(rng);
    w = 1.0 + std::log(r + (1.0 - r) * std::exp(-2.0 * kappa)) / kappa;
  }
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  const Vec3 m = mean.normalized();
  const Vec3 a = std::abs(m.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = m.cross(a).normalized();
  const Vec3 e2 = m.cross(e1);
  return (w * m + s * std::cos(phi) * e1 + s * std::sin(phi) * e2).normalized();
}

/// Clips a convex planar polygon against the half-space n.x <= d.
inline std::vector<Vec3> clip_halfspace(const std::vector<Vec3>& poly, const Vec3& n, double d) {
  std::vector<Vec3> out;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec3& p = poly[k];
    const Vec3& q = poly[(k + 1) % poly.size()];
    const double fp = n.dot(p) - d, fq = n.dot(q) - d;
    if (fp <= 0.0) out.push_back(p);
    if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) out.push_back(p + (fp / (fp - fq)) * (q - p));
  }
  return out;
}

/// Removes consecutive vertices closer than tol.
inline std::vector<Vec3> dedupe(const std::vector<Vec3>& poly, double tol) {
  std::vector<Vec3> out;
  for (const auto& p : poly)
    if (out.empty() || (p - out.back()).norm() > tol) out.push_back(p);
  while (out.size() > 1 && (out.front() - out.back()).norm() <= tol) out.pop_back();
  return out;
}

}  // namespace detail

/// Draws n values of log10(K) from the configured normal law.
inline std::vector<double> sample_log10_transmissivity(const GeneratorParams& p, std::size_t n) {
  if (p.log10_variance < 0.0) throw ConfigError("variance must be non-negative");
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> g(p.log10_mean, std::sqrt(p.log10_variance));
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

/// Random network clipped to the box. Edges on the box faces x = min and
/// x = max carry Dirichlet heads head_drop and 0; all other edges are
/// no-flow. Returns the largest connected component touching both faces.
inline FractureNetwork generate_network(const GeneratorParams& p) {
  if (p.count < 1) throw ConfigError("fracture count must be at least 1");
  if (p.log10_variance < 0.0) throw ConfigError("variance must be non-negative");
  if (!(p.radius_min > 0.0) || p.radius_max < p.radius_min) throw ConfigError("invalid radius range");
  if (p.polygon_vertices < 3) throw ConfigError("polygons need at least 3 vertices");
  const Vec3 ext = p.box_max - p.box_min;
  if ((ext.array() <= 0.0).any()) throw ConfigError("empty domain box");
  const double tol = 1e-9 * ext.norm();

  for (int attempt = 0; attempt <= p.max_retries; ++attempt) {
    std::mt19937_64 rng(p.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> logk(p.log10_mean, std::sqrt(p.log10_variance));
    std::vector<Fracture> frs;
    for (int k = 0; k < p.count; ++k) {
      const Vec3 c = p.box_min + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(ext);
      const double r = p.radius_min + (p.radius_max - p.radius_min) * u(rng);
      const Vec3 n = detail::sample_fisher(rng, p.fisher_kappa, p.mean_normal);
      const double rot = 2.0 * std::numbers::pi * u(rng);
      const double kval = p.transmissivity == GeneratorParams::Transmissivity::LogNormal ? std::pow(10.0, logk(rng)) : p.k_fixed;
      const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      const Vec3 e1 = n.cross(a).normalized(), e2 = n.cross(e1);
      std::vector<Vec3> poly;
      for (int v = 0; v < p.polygon_vertices; ++v) {
        const double t = rot + 2.0 * std::numbers::pi * v / p.polygon_vertices;
        poly.push_back(c + r * (std::cos(t) * e1 + std::sin(t) * e2));
      }
      for (int d = 0; d < 3; ++d) {
        poly = detail::clip_halfspace(poly, Vec3::Unit(d), p.box_max(d));
        poly = detail::clip_halfspace(poly, -Vec3::Unit(d), -p.box_min(d));
        if (poly.size() < 3) break;
      }
      poly = detail::dedupe(poly, 1e-6 * r);
      if (poly.size() < 3) continue;
      Fracture f;
      f.vertices = poly;
      f.transmissivity = kval * Eigen::Matrix2d::Identity();
      f.edge_bcs.assign(poly.size(), BoundaryCondition::neumann());
      for (std::size_t e = 0; e < poly.size(); ++e) {
        const Vec3& a0 = poly[e];
        const Vec3& a1 = poly[(e + 1) % poly.size()];
        if (std::abs(a0.x() - p.box_min.x()) < tol && std::abs(a1.x() - p.box_min.x()) < tol)
          f.edge_bcs[e] = BoundaryCondition::dirichlet(Field::constant(p.head_drop));
        else if (std::abs(a0.x() - p.box_max.x()) < tol && std::abs(a1.x() - p.box_max.x()) < tol)
          f.edge_bcs[e] = BoundaryCondition::dirichlet(Field::constant(0.0));
      }
      f.id = static_cast<int>(frs.size());
      try {
        validate_fracture(f);
        // Reject fractures coplanar-overlapping an existing one.
        for (const auto& g : frs) {
          std::vector<Fracture> pair{g, f};
          pair[0].id = 0;
          pair[1].id = 1;
          (void)compute_traces(pair);
        }
      } catch (const GeometryError&) {
        continue;
      }
      frs.push_back(std::move(f));
    }
    if (frs.empty()) continue;

    const auto traces = compute_traces(frs);
    std::vector<int> parent(frs.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]); };
    for (const auto& t : traces) parent[static_cast<std::size_t>(find(t.fracture_pair.first))] = find(t.fracture_pair.second);
    std::vector<int> size(frs.size(), 0), in(frs.size(), 0), out(frs.size(), 0);
    for (std::size_t k = 0; k < frs.size(); ++k) {
      const int root = find(static_cast<int>(k));
      ++size[static_cast<std::size_t>(root)];
      for (const auto& bc : frs[k].edge_bcs) {
        if (!bc.is_dirichlet()) continue;
        if (bc.value.constant_value() > 0.0 || p.head_drop == 0.0)
          in[static_cast<std::size_t>(root)] = 1;
        else
          out[static_cast<std::size_t>(root)] = 1;
      }
    }
    int best = -1;
    for (std::size_t k = 0; k < frs.size(); ++k)
      if (in[k] && out[k] && (best < 0 || size[k] > size[static_cast<std::size_t>(best)])) best = static_cast<int>(k);
    if (best < 0) continue;
    std::vector<Fracture> keep;
    for (std::size_t k = 0; k < frs.size(); ++k)
      if (find(static_cast<int>(k)) == best) {
        keep.push_back(frs[k]);
        keep.back().id = static_cast<int>(keep.size()) - 1;
      }
    return FractureNetwork::build(std::move(keep));
  }
  throw GenerationError("no connected component spanning the box after " + std::to_string(p.max_retries + 1) +
                        " attempts");
}

}  // namespace dfnopt

#endif  // DFNOPT_GENERATOR_HPP

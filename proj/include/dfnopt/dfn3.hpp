// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_DFN3_HPP
#define DFNOPT_DFN3_HPP

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"

namespace dfnopt {

using VectorFunction = std::function<Vec3(const Vec3&)>;

/// Analytic head, its gradient per fracture and the flux jump per trace.
/// Trace jumps are given with the sign of the lower-indexed fracture.
struct ExactSolution {
  std::vector<ScalarFunction> head;
  std::vector<VectorFunction> gradient;
  std::vector<ScalarFunction> lambda;
};

namespace dfn3 {

inline constexpr double pi = std::numbers::pi;

inline double h1(const Vec3& p) {
  const double x = p.x(), y = p.y();
  return 0.1 * (-x - 0.5) * (8.0 * x * y * (x * x + y * y) * std::atan2(y, x) + x * x * x);
}
inline double h2(const Vec3& p) {
  const double x = p.x(), z = p.z();
  return 0.1 * (-x - 0.5) * x * x * x - 0.8 * pi * (-x - 0.5) * x * x * x * std::abs(z);
}
inline double h3(const Vec3& p) {
  const double y = p.y(), z = p.z();
  return (y - 1.0) * y * (y + 1.0) * (z - 1.0) * z;
}

inline Vec3 grad1(const Vec3& p) {
  const double x = p.x(), y = p.y(), t = std::atan2(y, x);
  const double r2 = x * x + y * y;
  const double gx = -x * x * x / 10.0 - 4.0 * x * y * r2 * t / 5.0 -
                    (2.0 * x + 1.0) * (16.0 * x * x * y * t + 3.0 * x * x - 8.0 * x * y * y + 8.0 * y * r2 * t) / 20.0;
  const double gy = -2.0 * x * (2.0 * x + 1.0) * (x * y + 2.0 * y * y * t + r2 * t) / 5.0;
  return {gx, gy, 0.0};
}
inline Vec3 grad2(const Vec3& p) {
  const double x = p.x(), z = p.z(), az = std::abs(z);
  const double gx = x * x * (64.0 * pi * x * az - 8.0 * x + 24.0 * pi * az - 3.0) / 20.0;
  const double sz = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
  const double gz = 2.0 * pi * x * x * x * (2.0 * x + 1.0) * sz / 5.0;
  return {gx, 0.0, gz};
}
inline Vec3 grad3(const Vec3& p) {
  const double y = p.y(), z = p.z();
  return {0.0, z * (3.0 * y * y * z - 3.0 * y * y - z + 1.0), (y * y * y - y) * (2.0 * z - 1.0)};
}

/// -laplace(h_i).
inline double q1(const Vec3& p) {
  const double x = p.x(), y = p.y(), t = std::atan2(y, x);
  return 8.0 * x * x * x / 5.0 + 72.0 * x * x * y * t / 5.0 + 2.0 * x * x - 16.0 * x * y * y / 5.0 +
         24.0 * x * y * t / 5.0 + 3.0 * x / 10.0 + 8.0 * y * y * y * t / 5.0 - 4.0 * y * y / 5.0;
}
inline double q2(const Vec3& p) {
  const double x = p.x(), az = std::abs(p.z());
  return x * (-48.0 * pi * x * az + 12.0 * x - 24.0 * pi * (2.0 * x + 1.0) * az + 3.0) / 10.0;
}
inline double q3(const Vec3& p) {
  const double y = p.y(), z = p.z();
  return 2.0 * y * (-y * y - 3.0 * z * z + 3.0 * z + 1.0);
}

/// Flux jump on the trace y = z = 0.
inline double lambda1(const Vec3& p) {
  const double x = p.x();
  return -1.6 * pi * (-x - 0.5) * x * x * x;
}

inline std::vector<Fracture> fractures() {
  auto dir = [](const char* name, ScalarFunction fn) {
    return BoundaryCondition::dirichlet(Field::expression(name, std::move(fn)));
  };
  std::vector<Fracture> f(3);
  f[0].vertices = {{-1.0, -1.0, 0.0}, {0.5, -1.0, 0.0}, {0.5, 1.0, 0.0}, {-1.0, 1.0, 0.0}};
  f[0].edge_bcs.assign(4, dir("dfn3_h1", h1));
  f[0].source = Field::expression("dfn3_q1", q1);
  f[1].vertices = {{-1.0, 0.0, -1.0}, {0.0, 0.0, -1.0}, {0.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}};
  f[1].edge_bcs.assign(4, dir("dfn3_h2", h2));
  f[1].source = Field::expression("dfn3_q2", q2);
  f[2].vertices = {{-0.5, -1.0, -1.0}, {-0.5, 1.0, -1.0}, {-0.5, 1.0, 1.0}, {-0.5, -1.0, 1.0}};
  f[2].edge_bcs.assign(4, dir("dfn3_h3", h3));
  f[2].source = Field::expression("dfn3_q3", q3);
  return f;
}

}  // namespace dfn3

/// Named scalar expressions usable from network files.
inline const std::map<std::string, ScalarFunction>& expression_registry() {
  static const std::map<std::string, ScalarFunction> reg = {
      {"dfn3_h1", dfn3::h1}, {"dfn3_h2", dfn3::h2}, {"dfn3_h3", dfn3::h3},
      {"dfn3_q1", dfn3::q1}, {"dfn3_q2", dfn3::q2}, {"dfn3_q3", dfn3::q3},
  };
  return reg;
}

inline Field lookup_expression(const std::string& name, double factor = 1.0) {
  const auto& reg = expression_registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw ConfigError("unknown expression '" + name + "'");
  return Field::expression(name, it->second, factor);
}

/// Three-fracture benchmark with a known solution.
inline FractureNetwork builtin_dfn3() { return FractureNetwork::build(dfn3::fractures()); }

/// Exact solution of builtin_dfn3 (trace order as computed by the network).
inline ExactSolution dfn3_exact(const FractureNetwork& net) {
  ExactSolution ex;
  ex.head = {dfn3::h1, dfn3::h2, dfn3::h3};
  ex.gradient = {dfn3::grad1, dfn3::grad2, dfn3::grad3};
  for (const auto& t : net.traces()) {
    if (t.fracture_pair == std::pair<int, int>{0, 1})
      ex.lambda.emplace_back(dfn3::lambda1);
    else
      ex.lambda.emplace_back([](const Vec3&) { return 0.0; });
  }
  return ex;
}

}  // namespace dfnopt

#endif  // DFNOPT_DFN3_HPP

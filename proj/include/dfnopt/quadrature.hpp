// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_QUADRATURE_HPP
#define DFNOPT_QUADRATURE_HPP

#include <array>
#include <cmath>

namespace dfnopt::quad {

/// Gauss-Legendre points on [0, 1].
struct Gauss1D {
  std::array<double, 3> x;
  std::array<double, 3> w;
};

inline constexpr Gauss1D gauss3{
    {0.5 - 0.38729833462074168852, 0.5, 0.5 + 0.38729833462074168852},
    {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};

struct Gauss1D5 {
  std::array<double, 5> x;
  std::array<double, 5> w;
};

inline constexpr Gauss1D5 gauss5{
    {0.5 - 0.45308992296933199640, 0.5 - 0.26923465505284154552, 0.5, 0.5 + 0.26923465505284154552,
     0.5 + 0.45308992296933199640},
    {0.11846344252809454376, 0.23931433524968323402, 0.28444444444444444444, 0.23931433524968323402,
     0.11846344252809454376}};

/// Degree-5 rule on the reference triangle (Dunavant, 7 points). Weights sum
/// to 1; multiply by the triangle area.
struct TriRule {
  std::array<std::array<double, 3>, 7> bary;
  std::array<double, 7> w;
};

inline const TriRule& dunavant5() {
  static const TriRule rule = [] {
    TriRule r{};
    const double a1 = 0.059715871789770, b1 = 0.470142064105115;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456;
    const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
    r.bary[0] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    r.w[0] = w0;
    r.bary[1] = {a1, b1, b1};
    r.bary[2] = {b1, a1, b1};
    r.bary[3] = {b1, b1, a1};
    r.bary[4] = {a2, b2, b2};
    r.bary[5] = {b2, a2, b2};
    r.bary[6] = {b2, b2, a2};
    for (int k = 1; k <= 3; ++k) r.w[static_cast<std::size_t>(k)] = w1;
    for (int k = 4; k <= 6; ++k) r.w[static_cast<std::size_t>(k)] = w2;
    return r;
  }();
  return rule;
}

}  // namespace dfnopt::quad

#endif  // DFNOPT_QUADRATURE_HPP

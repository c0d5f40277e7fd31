#pragma once

#include <stdexcept>
#include <tuple>
#include <vector>

#include "plcrit/gauss.hpp"

namespace plcrit {

/// Quadrature rule on the reference N-simplex. Points are stored in
/// barycentric coordinates, (N+1) entries per point; weights sum to the
/// reference-simplex volume 1/N!. All weights are positive: the discrete
/// Holder inequalities used by the audits require a positive rule.
struct QuadratureRule {
  int dimension = 0;
  int degree = 0;
  std::vector<double> barycentric;
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
  const double* point(int q) const { return barycentric.data() + q * (dimension + 1); }
};

namespace detail {

inline QuadratureRule triangle_rule() {
  // Two fully symmetric orbits, polynomial degree 4, 6 points.
  constexpr double a1 = 0.108103018168070, b1 = 0.445948490915965;
  constexpr double w1 = 0.223381589678011;
  constexpr double a2 = 0.816847572980459, b2 = 0.091576213509771;
  constexpr double w2 = 0.109951743655322;
  QuadratureRule rule;
  rule.dimension = 2;
  rule.degree = 4;
  for (auto [a, b, w] : {std::tuple{a1, b1, w1}, std::tuple{a2, b2, w2}}) {
    const double orbit[3][3] = {{a, b, b}, {b, a, b}, {b, b, a}};
    for (const auto& pt : orbit) {
      rule.barycentric.insert(rule.barycentric.end(), {pt[0], pt[1], pt[2]});
      rule.weights.push_back(w / 2.0);
    }
  }
  return rule;
}

inline QuadratureRule tetrahedron_rule() {
  // Degree 5, 14 points, all weights positive.
  const double pts[14][3] = {
      {0.0927352503108910, 0.0927352503108910, 0.0927352503108910},
      {0.7217942490673265, 0.0927352503108910, 0.0927352503108910},
      {0.0927352503108910, 0.7217942490673265, 0.0927352503108910},
      {0.0927352503108910, 0.0927352503108910, 0.7217942490673265},
      {0.3108859192633005, 0.3108859192633005, 0.3108859192633005},
      {0.0673422422100980, 0.3108859192633005, 0.3108859192633005},
      {0.3108859192633005, 0.0673422422100980, 0.3108859192633005},
      {0.3108859192633005, 0.3108859192633005, 0.0673422422100980},
      {0.4544962958743505, 0.4544962958743505, 0.0455037041256495},
      {0.4544962958743505, 0.0455037041256495, 0.4544962958743505},
      {0.0455037041256495, 0.4544962958743505, 0.4544962958743505},
      {0.4544962958743505, 0.0455037041256495, 0.0455037041256495},
      {0.0455037041256495, 0.4544962958743505, 0.0455037041256495},
      {0.0455037041256495, 0.0455037041256495, 0.4544962958743505}};
  const double wts[14] = {0.0734930431163618, 0.0734930431163618, 0.0734930431163618,
                          0.0734930431163618, 0.1126879257180158, 0.1126879257180158,
                          0.1126879257180158, 0.1126879257180158, 0.0425460207770813,
                          0.0425460207770813, 0.0425460207770813, 0.0425460207770813,
                          0.0425460207770813, 0.0425460207770813};
  QuadratureRule rule;
  rule.dimension = 3;
  rule.degree = 5;
  for (int q = 0; q < 14; ++q) {
    const double x = pts[q][0], y = pts[q][1], z = pts[q][2];
    rule.barycentric.insert(rule.barycentric.end(), {1.0 - x - y - z, x, y, z});
    rule.weights.push_back(wts[q] / 6.0);
  }
  return rule;
}

/// Collapsed tensor-product rule on the 4-simplex: the sequential map
///   x_k = xi_k * (1 - x_1 - ... - x_{k-1})
/// turns the simplex into the unit cube with Jacobian
/// (1-xi_1)^3 (1-xi_2)^2 (1-xi_3). With n Gauss points per axis the rule is
/// exact for total degree d whenever d + 3 <= 2n - 1; n = 4 gives degree 4.
inline QuadratureRule pentatope_rule() {
  constexpr int n = 4;
  std::vector<double> nodes, weights;
  gauss_legendre(n, nodes, weights);
  std::vector<double> xi(n), wx(n);
  for (int i = 0; i < n; ++i) {
    xi[i] = 0.5 * (nodes[i] + 1.0);
    wx[i] = 0.5 * weights[i];
  }
  QuadratureRule rule;
  rule.dimension = 4;
  rule.degree = 4;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i3 = 0; i3 < n; ++i3) {
          const double x1 = xi[i0];
          const double x2 = xi[i1] * (1.0 - x1);
          const double x3 = xi[i2] * (1.0 - x1 - x2);
          const double x4 = xi[i3] * (1.0 - x1 - x2 - x3);
          const double jac = (1.0 - x1) * (1.0 - x1 - x2) * (1.0 - x1 - x2 - x3);
          rule.barycentric.insert(rule.barycentric.end(),
                                  {1.0 - x1 - x2 - x3 - x4, x1, x2, x3, x4});
          rule.weights.push_back(wx[i0] * wx[i1] * wx[i2] * wx[i3] * jac);
        }
  return rule;
}

}  // namespace detail

/// Volume-integral rule on the reference N-simplex, N in {2, 3, 4}, with
/// polynomial exactness degree >= 4 and positive weights.
inline QuadratureRule simplex_rule(int dimension) {
  switch (dimension) {
    case 2:
      return detail::triangle_rule();
    case 3:
      return detail::tetrahedron_rule();
    case 4:
      return detail::pentatope_rule();
    default:
      throw std::invalid_argument("simplex_rule: supported dimensions are 2, 3, 4");
  }
}

}  // namespace plcrit

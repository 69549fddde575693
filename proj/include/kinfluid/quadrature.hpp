#pragma once

#include <array>
#include <vector>

#include "kinfluid/util.hpp"

namespace kf {

struct Rule1D {
  std::vector<double> x, w;
};

Rule1D gauss_legendre(int m);                       // on [-1, 1]
Rule1D gauss_legendre(int m, double a, double b);   // on [a, b]
Rule1D gauss_hermite_prob(int m);                   // weight exp(-x^2/2)/sqrt(2 pi), sums to 1

// Collision-integral rule attached to one output velocity v.
// Directions omega use a polar frame around v-hat: t = cos(angle) = 1 - w^2 with
// Gauss-Legendre panels in w (so both the forward cap and the equatorial band are
// resolved for large |v|), a trapezoid in the azimuth, and Gauss-Legendre in
// r = |v - x| on [max(0, c - r_half), c + r_half], c = v.omega.
struct CollisionRuleOptions {
  int w_panels = 6;
  int w_points = 6;
  int n_phi = 24;
  int n_r = 32;
  double r_half = 10.0;
  int points_per_row() const { return w_panels * w_points * n_phi * n_r; }
};

struct CollisionPoint {
  double r, c, weight;  // weight includes dOmega dr (no kernel factors)
  Vec3 omega;
};

void collision_points(const Vec3& v, const CollisionRuleOptions& o, std::vector<CollisionPoint>& out);

// octahedral group acting on vectors: (S x)_a = sign[a] * x[perm[a]]
struct OctaElement {
  std::array<int, 3> perm;
  std::array<int, 3> sign;
  Vec3 apply(const Vec3& x) const {
    return {sign[0] * x[perm[0]], sign[1] * x[perm[1]], sign[2] * x[perm[2]]};
  }
};
const std::vector<OctaElement>& octahedral_group();

}  // namespace kf

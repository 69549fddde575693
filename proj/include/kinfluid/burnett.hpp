#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "kinfluid/collision_operator.hpp"
#include "kinfluid/velocity_basis.hpp"

namespace kf {

using Tensor2 = std::array<std::array<Eigen::VectorXd, 3>, 3>;
using Tensor1 = std::array<Eigen::VectorXd, 3>;

struct BurnettTensors {
  Tensor2 A;      // (v_i v_j - |v|^2 delta_ij / 3) sqrt(mu)
  Tensor1 B;      // (|v|^2 - 5) / 2 v_j sqrt(mu)
  Tensor2 LinvA;  // empty until solve_inverses
  Tensor1 LinvB;
  bool solved = false;
};

BurnettTensors build_burnett(const VelocityGrid& g);
// fills L^{-1} A_ij (all nine entries solved independently) and L^{-1} B_j
void solve_inverses(const CollisionOperator& op, BurnettTensors& bt);

struct TransportCoefficients {
  double mu_star = 0;
  double kappa_star = 0;
};
TransportCoefficients transport_coefficients(const CollisionOperator& op, const BurnettTensors& bt);

// rank-4 tables indexed [((i*3 + j)*3 + k)*3 + l]
struct IsotropyReport {
  TransportCoefficients coeffs;
  std::vector<double> AA;   // <A_ij, L^-1 A_kl>
  std::vector<double> BB;   // <B_i, L^-1 B_j>, 9 entries
  std::vector<double> AtB;  // <A_ij, v_k L^-1 B_l> - <A_ik, v_j L^-1 B_l>
  std::vector<double> AB;   // <L^-1 A_ij, v_k L^-1 B_l>
  double ab_scalar = 0;     // (1/10) sum_ij <L^-1 A_ij, v_i L^-1 B_j>
  double dev_AA = 0, dev_BB = 0, dev_AtB = 0, dev_AB = 0;  // max |table - pattern|, relative
  double ab_scalar_spread = 0;  // max relative spread of the AB scalar over on-pattern tuples
  double symmetry_LinvA = 0;    // max ||L^-1 A_ij - L^-1 A_ji|| / ||L^-1 A_ij||
  double max_dev() const;
};
IsotropyReport verify_isotropy(const CollisionOperator& op, const BurnettTensors& bt);

struct BridgeReport {
  std::vector<double> lhs, rhs;  // indexed [((i*3 + j)*3 + k)*3 + l]
  double dev = 0;                // max |lhs - rhs| / mu*
};
// <M_{v_i} L^-1 A_kl, L^-1 B_j> + <v_i A_kl, L^-1 B_j> against <A_ij, L^-1 A_kl>,
// with M_{v_i} g = Gamma(v_i sqrt(mu), g) + Gamma(g, v_i sqrt(mu))
BridgeReport verify_gamma_bridge(const CollisionOperator& op, const BurnettTensors& bt);

// super-Burnett contractions (times sqrt(mu)) for a velocity u:
// 0: P1:u^3, 1: P2:u^4, 2: P3:u^5, 3: the theta-coupled rank-2 tensor : u^2, 4: the rank-3 one : u^3
double super_burnett_poly(int which, const Vec3& u, const Vec3& v);
Eigen::VectorXd super_burnett(const VelocityGrid& g, int which, const Vec3& u);

struct SuperBurnettReport {
  double max_relative = 0;  // max ||P C|| / ||C||
  double max_absolute = 0;  // max ||P C||
  int samples = 0;
};
SuperBurnettReport verify_super_burnett(const VelocityGrid& g, int samples = 20, unsigned seed = 1, double umax = 0.3);

// CSV of the bracket tables: table,i,j,k,l,value,pattern
std::string bracket_tables_csv(const IsotropyReport& rep);

}  // namespace kf

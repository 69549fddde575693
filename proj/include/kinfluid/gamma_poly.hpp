#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kinfluid/collision_operator.hpp"
#include "kinfluid/quadrature.hpp"
#include "kinfluid/velocity_basis.hpp"

namespace kf {

// t(v) sqrt(mu(v)) with t(v) = a(|v|^2) m(v) and m one of
// 1 (rank 0), v_i (rank 1), v_i v_j - delta_ij |v|^2 / 3 (rank 2)
struct PolyTemplate {
  std::vector<double> radial{1.0};  // a(s) = sum_k radial[k] s^k
  int rank = 0;
  int i = 0, j = 0;

  static PolyTemplate scalar(std::vector<double> a);
  static PolyTemplate vector(int i, std::vector<double> a = {1.0});
  static PolyTemplate traceless(int i, int j, std::vector<double> a = {1.0});

  double poly(const Vec3& v) const;  // t(v)
  double operator()(const Vec3& v) const { return poly(v) * sqrt_maxwellian(v); }
  // E[t(c omega + Z)] for Z standard normal in the plane orthogonal to omega
  double plane_mean(double c, const Vec3& omega) const;
};

// Gamma(T_k, S_j) for sqrt(mu)-polynomial arguments, by direct quadrature of the
// hard-sphere collision integral at every grid node. The Gaussian factor carried
// by T_k is integrated exactly over the plane of the second post-collision
// velocity; the remaining three-dimensional integral uses the collision rule.
class GammaTable {
 public:
  GammaTable(const VelocityGrid& g, std::vector<PolyTemplate> T, std::vector<PolyTemplate> S,
             const CollisionRuleOptions& rule = {});

  int rows() const { return int(T_.size()); }
  int cols() const { return int(S_.size()); }
  Eigen::VectorXd gamma(int k, int j) const;      // Gamma(T_k, S_j)
  Eigen::VectorXd gamma_rev(int k, int j) const;  // Gamma(S_j, T_k)
  Eigen::VectorXd sym(int k, int j) const { return gamma(k, j) + gamma_rev(k, j); }
  double seconds() const { return seconds_; }

 private:
  std::vector<PolyTemplate> T_, S_;
  Eigen::MatrixXd Tv_, Sv_;      // template values at the nodes
  Eigen::MatrixXd nuT_, nuS_;    // pi int |v - x| sqrt(mu(x)) X(x) dx
  std::vector<Eigen::MatrixXd> gain_;  // per node, rows x cols
  double seconds_ = 0;
};

// templates 1, v_1, v_2, v_3, |v|^2 (spanning P g) and the 14 templates spanning
// (P g)^2 / sqrt(mu): the first five, A_11, A_12, A_13, A_22, A_23, v_i |v|^2, |v|^4
std::vector<PolyTemplate> macro_templates();
std::vector<PolyTemplate> macro_square_templates();
Eigen::VectorXd macro_coefficients(const MacroTriple& m);         // P g = sum c_k T_k
Eigen::VectorXd macro_square_coefficients(const MacroTriple& m);  // (P g)^2 / sqrt(mu) = sum d_j S_j

struct GammaIdentityReport {
  double first = 0;   // max relative deviation of Gamma(Pg, Pg) from L{(Pg)^2/sqrt(mu)} / 2
  double second = 0;  // same for the cubic identity against L{(Pg)^3/mu} / 3
  int states = 0;
};
// table must be built from macro_templates() x macro_square_templates()
GammaIdentityReport check_gamma_identities(const CollisionOperator& op, const GammaTable& table,
                                           const std::vector<MacroTriple>& states);

struct GammaGridRule {
  int v_points = 10;   // Gauss-Hermite points per axis for v*
  int cos_points = 6;  // Gauss-Legendre points in cos(angle to v - v*)
  int phi_points = 12;
};

// Gamma(g, h) for arbitrary grid functions: tensor Gauss-Hermite in v*, a
// hemisphere rule in omega, and interpolation at the post-collision velocities.
// Cost grows like n^3 per quadrature point; intended for small grids.
Eigen::VectorXd gamma_grid(const VelocityGrid& grid, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                           const GammaGridRule& rule = {});

}  // namespace kf

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "kinfluid/burnett.hpp"
#include "kinfluid/gamma_poly.hpp"
#include "kinfluid/insf_solver.hpp"

namespace kf {

// sum_t spatial_t(x) velocity_t(v); spatial parts are physical values on the torus grid
struct SeparableTerm {
  std::vector<double> spatial;
  Eigen::VectorXd velocity;
};
struct SeparableField {
  std::vector<SeparableTerm> terms;
  Parity parity = Parity::none;
  Eigen::VectorXd at(std::size_t r) const;  // velocity function at torus point r
  std::size_t velocity_size() const { return terms.empty() ? 0 : terms[0].velocity.size(); }
};

// physical-space macro fields of a state (d < 3 components are zero)
struct PhysicalFields {
  std::array<std::vector<double>, 3> u;
  std::array<std::array<std::vector<double>, 3>, 3> grad;  // grad[i][j] = d_j u_i
  std::vector<double> rho, theta;
};
PhysicalFields physical_fields(const Torus& t, const MacroState& st);

SeparableField build_f1(const Torus& t, const MacroState& st, const VelocityGrid& g);
// drop_linv_a removes the -L^{-1}A : grad u term (ablation)
SeparableField build_f2(const Torus& t, const MacroState& st, const BurnettTensors& bt, const VelocityGrid& g,
                        bool drop_linv_a = false);
// L^{-1} (I - P) { -v.grad f2 + Gamma(f1, f2) + Gamma(f2, f1) }; needs M_v
SeparableField build_f3_micro(const Torus& t, const MacroState& st, const BurnettTensors& bt,
                              const CollisionOperator& op);
// v_k d_k f2 as a separable field (product rule on the spatial coefficients)
SeparableField streaming_f2(const Torus& t, const MacroState& st, const BurnettTensors& bt, const VelocityGrid& g);

struct ExpansionCoefficients {
  SeparableField f1, f2, f3_micro;
};

// v.grad f1 + L f2 - Gamma(f1, f1) at every torus point, Gamma(f1, f1) from M_v
struct HierarchyReport {
  double max_relative = 0;      // ||residual|| / (||v.grad f1|| + ||Gamma(f1, f1)||), worst point
  double max_absolute = 0;
  double macro_mismatch = 0;    // max |<residual, sqrt(mu)> - div u|
  double max_divergence = 0;
};
HierarchyReport hierarchy_check(const Torus& t, const MacroState& st, const BurnettTensors& bt,
                                const CollisionOperator& op);

struct ResidualReport {
  std::vector<double> eps;
  std::vector<double> l2, sup;
  std::string fitted_norm;  // "l2" or "sup"
  double slope = 0, intercept = 0, r2 = 0;
  double target_slope = 0;
  std::string normalization;
};
// least-squares log-log fit over the chosen norm; needs >= 3 strictly decreasing eps
void fit_residual(ResidualReport& rep);

// exact local Maxwellian with (1 + eps^2 rho, eps u, 1 + eps^2 theta) minus its expansion
// through eps^order (order 2 or 3), sup over grid nodes
ResidualReport maxwellian_expansion_check(const VelocityGrid& g, const MacroTriple& m,
                                          const std::vector<double>& eps, int order);

// Gamma(f2, f2) support: f2 over 12 templates (sqrt(mu), (|v|^2 - 3) sqrt(mu), five A_ij and
// five alpha(|v|^2) A_ij with alpha a least-squares fit of L^{-1}A_12 / A_12)
struct F2Gamma {
  std::vector<PolyTemplate> templates;
  std::vector<double> alpha;  // radial coefficients in |v|^2
  double fit_residual = 0;    // relative weighted L2 error of the fit
  std::unique_ptr<GammaTable> table;
};
F2Gamma build_f2_gamma(const CollisionOperator& op, const BurnettTensors& bt, int degree = 6,
                       const CollisionRuleOptions& rule = {});

// residual of the rescaled Boltzmann equation eps dF/dt + v.grad F = Q(F, F) / eps for
// F = mu + eps sqrt(mu) (f1 + eps f2), divided by eps sqrt(mu):
//   R = eps [v.grad f1 + L f2 - Gamma(f1, f1)] + eps^2 [d_t f1 + v.grad f2 - Gamma_s(f1, f2)]
//     + eps^3 [d_t f2 - Gamma(f2, f2)]
// evaluated at the middle of five snapshots spaced h apart (fourth-order differences in t)
ResidualReport hierarchy_residual_scan(const Torus& t, const std::vector<MacroState>& snapshots, double h,
                                       const CollisionOperator& op, const BurnettTensors& bt, const F2Gamma& f2g,
                                       const std::vector<double>& eps, bool break_f2);

// five snapshots t0 + j h (j = 0..4) of a solver run from st
std::vector<MacroState> snapshot_series(const InsfSolver& solver, MacroState st, double h, int substeps);

struct ConservationCheckReport {
  std::array<double, 5> f1{}, f2{};  // int <f_r, [1, v, |v|^2 - 3] sqrt(mu)> dx
  double rho = 0, constraint = 0;
  Vec3 momentum{};
  double max_abs() const;
};
ConservationCheckReport conservation_check(const Torus& t, const MacroState& st, const ExpansionCoefficients& c,
                                           const VelocityGrid& g);

std::string residual_csv(const ResidualReport& r);

}  // namespace kf

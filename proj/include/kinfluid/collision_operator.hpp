#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <mutex>
#include <string>

#include "kinfluid/quadrature.hpp"
#include "kinfluid/velocity_basis.hpp"

namespace kf {

// Hard-sphere collision frequency, hemisphere convention:
// nu(v) = pi * int |v - v*| mu(v*) dv*
double collision_frequency(const Vec3& v);
// same quantity from the 1-D radial integral (independent route)
double collision_frequency_radial(double s);
// pi * int |z| z mu(v - z) dz  (vector; needed by the v_a-linearization)
Vec3 first_moment_frequency(const Vec3& v);

// Closed-form kernels of K = K2 - K1 (K2 carries the constant sqrt(2/pi))
double kernel_k1(const Vec3& v, const Vec3& w);
double kernel_k2(const Vec3& v, const Vec3& w);

struct OperatorOptions {
  CollisionRuleOptions rule;
  bool build_mv = false;  // also assemble M_{v_a} = Gamma(v_a sqrt(mu), .) + Gamma(., v_a sqrt(mu))
  double mass_tol = 1e-6;
  // the symmetrized operator keeps the raw action on sqrt(mu) Hermite polynomials
  // of total degree <= smooth_degree (negative: plain symmetrization)
  int smooth_degree = 8;
};

struct OperatorDiagnostics {
  std::array<double, 5> raw_null_defect{};  // ||L_raw e|| / ||nu e|| per invariant
  double raw_asymmetry = 0;                 // ||W L - (W L)^T||_F / ||W L||_F
  double scale = 0;                         // ||nu sqrt(mu)||
  double mass_defect = 0;                   // Maxwellian-weighted kernel mass outside the box
  double assembly_seconds = 0;
};

class CollisionOperator {
 public:
  CollisionOperator(VelocityGrid grid, Eigen::VectorXd nu, Eigen::MatrixXd K_raw, OperatorOptions opt);

  const VelocityGrid& grid() const { return grid_; }
  const Eigen::VectorXd& nu() const { return nu_; }
  const Eigen::MatrixXd& K_raw() const { return K_raw_; }
  // W-orthonormal invariants (columns)
  const Eigen::MatrixXd& invariants_basis() const { return Einv_; }
  const OperatorDiagnostics& diagnostics() const { return diag_; }
  const OperatorOptions& options() const { return opt_; }

  Eigen::VectorXd apply_L(const Eigen::VectorXd& g) const;
  Eigen::VectorXd apply_K(const Eigen::VectorXd& g) const;
  Eigen::VectorXd apply_L_raw(const Eigen::VectorXd& g) const;
  // W-orthogonal projection onto N(L)
  Eigen::VectorXd project_null(const Eigen::VectorXd& g) const;

  // L g = h with P g = 0; throws if h has a macroscopic part
  Eigen::VectorXd solve_Linv(const Eigen::VectorXd& h, double tol_null = 1e-6) const;

  bool has_mv() const { return Mv_[0].size() > 0; }
  // M_{v_a} g
  Eigen::VectorXd apply_Mv(int a, const Eigen::VectorXd& g) const;
  void set_mv(std::array<Eigen::MatrixXd, 3> mv) { Mv_ = std::move(mv); }
  const std::array<Eigen::MatrixXd, 3>& Mv() const { return Mv_; }

  void set_assembly_stats(double seconds, double mass_defect) {
    diag_.assembly_seconds = seconds;
    diag_.mass_defect = mass_defect;
  }

 private:
  VelocityGrid grid_;
  Eigen::VectorXd nu_, sqw_;
  Eigen::MatrixXd K_raw_;
  Eigen::MatrixXd S_;  // symmetric corrected operator in sqrt(W)-scaled coordinates
  Eigen::MatrixXd Einv_, Q_;
  OperatorOptions opt_;
  OperatorDiagnostics diag_;
  std::array<Eigen::MatrixXd, 3> Mv_;

  mutable std::once_flag chol_once_;
  mutable std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> chol_;
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const;
  friend struct SpectralGapSolver;
  friend Eigen::VectorXd shifted_solve(const CollisionOperator&, const Eigen::VectorXd&);
};

// Builds K (and optionally M_{v_a}) by direct quadrature of the collision
// integrals at representative rows, extended to all rows by octahedral symmetry.
std::shared_ptr<CollisionOperator> assemble_operator(const VelocityGrid& grid, const OperatorOptions& opt = {});

struct SpectralGapEstimate {
  double delta0 = 0;
  int iterations = 0;
  int n_per_axis = 0;
  double cutoff = 0;
};
// smallest eigenvalue of <Lg,g> / <nu g,g> over g orthogonal to N(L)
SpectralGapEstimate estimate_spectral_gap(const CollisionOperator& op, int block = 8, int max_iter = 300,
                                          double tol = 1e-10);

struct KernelBoundReport {
  double unweighted = 0;  // max_v (1+|v|) sum_j |K_ij|
  double weighted = 0;    // max_v (1+|v|) w_l(v) sum_j |K_ij| e^{eps|v-v_j|^2} / w_l(v_j)
  double nu_lower = 0, nu_upper = 0;  // c1, c2 in c1 <v> <= nu <= c2 <v>
  double l = 0, eps = 0;
};
KernelBoundReport kernel_bound_check(const CollisionOperator& op, double l, double eps = 1.0 / 16);

// versioned binary container: grid hash, rule, nu, K_raw, invariants, optional M_{v_a}
void save_operator(const CollisionOperator& op, const std::string& path);
std::shared_ptr<CollisionOperator> load_operator(const std::string& path, const VelocityGrid& grid,
                                                 const OperatorOptions& opt);
// load if a matching cache exists, else assemble and write it
std::shared_ptr<CollisionOperator> cached_operator(const VelocityGrid& grid, const OperatorOptions& opt,
                                                   const std::string& path);
std::string default_cache_path(const VelocityGrid& grid, const OperatorOptions& opt);

}  // namespace kf

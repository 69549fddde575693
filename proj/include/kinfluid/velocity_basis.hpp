#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "kinfluid/util.hpp"

namespace kf {

// Tensor Gauss-Hermite grid on R^3 truncated to the box |v_i| <= cutoff.
// Nodes are sqrt(2) times the zeros of the physicists' H_n; weights integrate dv.
// Functions on the grid are sqrt(mu)-weighted, and interpolation is done on
// g/sqrt(mu), which is exact for sqrt(mu) * (per-axis degree <= n-1).
struct VelocityGrid {
  int n = 0;
  double cutoff = 0;
  std::vector<double> x1d, w1d, bary;
  std::vector<Vec3> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  std::size_t index(int i, int j, int k) const { return (std::size_t(i) * n + j) * n + k; }
  // node index of -v
  std::size_t mirror(std::size_t idx) const;
  // per-axis interpolation weights for a value at x; false outside the box
  bool axis_weights(double x, double* out) const;
  std::string hash() const;
};

VelocityGrid build_velocity_grid(int n_per_axis, double cutoff);

std::string grid_to_json(const VelocityGrid& g);
VelocityGrid grid_from_json(const std::string& text);

enum class Parity { none, odd, even };

struct VelocityFunction {
  Eigen::VectorXd values;
  Parity parity = Parity::none;
};

// exact node-pair check of the tag
bool parity_holds(const VelocityGrid& g, const VelocityFunction& f);
// (g(v) +- g(-v)) / 2; exactly even / odd at node pairs
Eigen::VectorXd even_part(const VelocityGrid& g, const Eigen::VectorXd& f);
Eigen::VectorXd odd_part(const VelocityGrid& g, const Eigen::VectorXd& f);

struct MacroTriple {
  double rho = 0;
  Vec3 u{0, 0, 0};
  double theta = 0;
};

double maxwellian(const Vec3& v);
double sqrt_maxwellian(const Vec3& v);

Eigen::VectorXd sample(const VelocityGrid& g, const std::function<double(const Vec3&)>& f);
// sample f(v) * sqrt(mu(v))
Eigen::VectorXd sample_sqrt_mu(const VelocityGrid& g, const std::function<double(const Vec3&)>& p);

// summed over +/- node pairs so odd*even products cancel exactly
double inner(const VelocityGrid& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double norm2(const VelocityGrid& g, const Eigen::VectorXd& a);

// the five invariants sqrt(mu), v_i sqrt(mu), |v|^2 sqrt(mu) as columns
Eigen::MatrixXd invariants(const VelocityGrid& g);

struct Projection {
  MacroTriple macro;
  Eigen::VectorXd Pg;
};
// Pg = {rho + u.v + theta(|v|^2-3)/2} sqrt(mu), coefficients from the discrete Gram system
Projection project_P(const VelocityGrid& g, const Eigen::VectorXd& f);

Eigen::VectorXd macro_function(const VelocityGrid& g, const MacroTriple& m);

double weighted_sup_norm(const VelocityGrid& g, const Eigen::VectorXd& f, double l);

}  // namespace kf

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinfluid/collision_operator.hpp"

namespace kf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TorusConfig {
  int d = 3;
  int N = 32;
  double dt = 1e-3;
  double t_end = 1.0;
  double sample_dt = 0.1;
  std::string preset = "random";  // taylor_green | shear | single_mode | random
  double amplitude = 0.5;
  double slope = 2.0;  // random preset spectrum |m|^-slope
  int kmax = 4;
  bool nonlinear = true;
  double mu_star = 0;     // 0: computed from the collision operator
  double kappa_star = 0;
};

struct DecayConfig {
  int d = 3;
  int N = 16;
  double dt = 1e-2;
  double t_end = 20;
  double sample_dt = 0.1;
  double window_fraction = 0.5;
  double linear_amplitude = 1e-6;
  double amplitude = 0.2;
  int kmax = 3;
  double slope = 1.0;
  double tol_rate = 0.05;
  double min_r2 = 0.95;
};

struct ResidualConfig {
  int d = 2;
  int N = 16;
  std::string preset = "taylor_green";
  double amplitude = 0.2;
  double h = 0.05;
  int substeps = 5;
  std::vector<double> eps{1e-1, 5e-2, 2e-2, 1e-2};
  int alpha_degree = 6;
  double min_slope = 1.85;         // intact truncation
  double broken_slope = 1.0;       // --break-f2 band centre
  double broken_band = 0.2;
};

struct Tolerances {
  double tol_null = 1e-6;
  double tol_iso = 1e-3;
  double tol_gamma = 1e-3;
  double tol_super = 1e-6;
  double tol_hier = 1e-3;
  double tol_div = 1e-13;    // relative spectral divergence after each step
  double tol_drift = 1e-10;  // conserved-integral drift per unit time
};

struct RunConfig {
  int n_per_axis = 16;
  double cutoff = 8.0;
  CollisionRuleOptions rule;
  int smooth_degree = 8;
  std::uint64_t seed = 1;
  TorusConfig torus;
  DecayConfig decay;
  ResidualConfig residual;
  Tolerances tol;
  std::string output_dir = "kinfluid-out";
  std::string operator_cache;  // empty: KINFLUID_CACHE_DIR or working directory
  int gamma_states = 20;       // random macro states for the quadratic identities
  int super_burnett_samples = 20;
};

// throws ConfigError on unknown keys, malformed values or out-of-range parameters
RunConfig load_config(const std::string& path);
// "section.key=value"
void apply_override(RunConfig& c, const std::string& assignment);
void validate(const RunConfig& c);
std::string config_to_ini(const RunConfig& c);
std::string config_hash(const RunConfig& c);

}  // namespace kf

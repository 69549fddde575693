#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinfluid/burnett.hpp"

namespace kf {

using cplx = std::complex<double>;

// Periodic box [-pi, pi]^d sampled on N^d points; half-spectrum storage (last axis m >= 0).
// Coefficients are normalized: f(x) = sum_m f_m e^{i m.x}.
class Torus {
 public:
  Torus(int d, int N);
  ~Torus();
  Torus(const Torus&) = delete;
  Torus& operator=(const Torus&) = delete;

  int dim() const { return d_; }
  int N() const { return N_; }
  int cutoff() const { return K_; }  // 2/3 rule: modes with all |m_i| <= cutoff survive
  std::size_t real_size() const { return nreal_; }
  std::size_t spec_size() const { return nspec_; }
  const std::array<int, 3>& mode(std::size_t k) const { return modes_[k]; }
  double mode_sq(std::size_t k) const;
  bool kept(std::size_t k) const { return kept_[k]; }
  // weight of a half-spectrum entry in Parseval sums (1 on the m_last = 0 and Nyquist planes, else 2)
  double parseval_weight(std::size_t k) const { return pw_[k]; }
  std::array<double, 3> position(std::size_t r) const;
  double volume() const;
  double dx() const;

  void forward(const std::vector<double>& in, std::vector<cplx>& out) const;
  void inverse(const std::vector<cplx>& in, std::vector<double>& out) const;
  void truncate(std::vector<cplx>& f) const;

 private:
  int d_, N_, K_;
  std::size_t nreal_, nspec_;
  std::vector<std::array<int, 3>> modes_;
  std::vector<char> kept_;
  std::vector<double> pw_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

using ScalarField = std::vector<cplx>;
using VectorField = std::array<ScalarField, 3>;  // first d components used

ScalarField zero_scalar(const Torus& t);
VectorField zero_vector(const Torus& t);

// Fourier Leray projector p0(m) = I - m m^T / |m|^2, mode 0 untouched
void leray_project(const Torus& t, VectorField& u);
double divergence_norm(const Torus& t, const VectorField& u);  // ||div u||_2
double l2_norm(const Torus& t, const ScalarField& f);
double l2_norm(const Torus& t, const VectorField& u);
double gradient_norm(const Torus& t, const VectorField& u);  // ||grad u||_2
double mean_value(const ScalarField& f);
double inner_mean(const Torus& t, const ScalarField& f, const ScalarField& g);  // mean of f g
ScalarField from_physical(const Torus& t, const std::vector<double>& f);
std::vector<double> to_physical(const Torus& t, const ScalarField& f);

// (1/2) mu* |grad u + grad u^T|^2, dealiased
ScalarField viscous_heating(const Torus& t, const VectorField& u, double mu_star);

struct MacroState {
  VectorField u;
  ScalarField theta, s, rho, p;  // s = (3/2) theta - rho is evolved; the rest is reconstructed
  double time = 0;
  double rho_mean = 0;  // conserved mass mode
  TransportCoefficients coeffs;
};

// builds a state from u, theta, rho: u is projected and truncated, s formed, then
// p, theta, rho are reconstructed from s and the pressure Poisson relation
MacroState make_state(const Torus& t, VectorField u, ScalarField theta, ScalarField rho, TransportCoefficients c);

struct SolverOptions {
  bool nonlinear = true;  // false drops advection, pressure and heating (pure heat kernels)
  double cfl = 0.5;
};

class CflError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsfSolver {
 public:
  InsfSolver(const Torus& t, SolverOptions opt = {}) : t_(t), opt_(opt) {}
  // integrating-factor RK4 step; throws CflError / NanError
  void step(MacroState& st, double dt) const;
  // largest admissible dt: cfl * dx / max|u|
  double cfl_limit(const MacroState& st) const;
  void reconstruct(MacroState& st) const;
  const Torus& torus() const { return t_; }

 private:
  const Torus& t_;
  SolverOptions opt_;
  void rhs(const MacroState& st, const VectorField& u, const ScalarField& s, VectorField& nu, ScalarField& ns) const;
  ScalarField pressure(const VectorField& u) const;
};

struct ConservedReport {
  Vec3 momentum{};          // int u dx
  double constraint = 0;    // int (3 theta + |u|^2) dx
  double energy = 0;        // int ((3/2) theta - rho + |u|^2 / 2) dx
  double mass = 0;          // int rho dx
  Vec3 momentum_drift{};
  double constraint_drift = 0, energy_drift = 0, mass_drift = 0;
};
ConservedReport conserved_diagnostics(const Torus& t, const MacroState& st, const ConservedReport* initial = nullptr);

// presets; all have zero mean velocity, zero mean density and int (3 theta + |u|^2) = 0
MacroState preset_taylor_green(const Torus& t, double amp, TransportCoefficients c);
MacroState preset_shear(const Torus& t, double amp, TransportCoefficients c);  // u = amp (sin x2, 0, 0)
// one divergence-free mode amp * a sin(m.x), a orthogonal to m
MacroState preset_single_mode(const Torus& t, double amp, const std::array<int, 3>& m, TransportCoefficients c);
// random smooth velocity and temperature, modes 1 <= |m|_inf <= kmax with spectrum |m|^-slope, rms amp
MacroState preset_random(const Torus& t, double amp, std::uint64_t seed, double slope, int kmax,
                         TransportCoefficients c);

struct DecaySample {
  double time, u_norm, grad_norm, theta_norm, momentum_drift, energy_drift, constraint;
};
struct DecayFit {
  double lambda_fit = 0;
  double window_start = 0, window_end = 0;
  double r_squared = 0;
  bool degenerate = false;  // zero data or too few samples
  bool fit_failed = false;  // r^2 < 0.9
  std::vector<DecaySample> series;
};
struct DecayOptions {
  double dt = 1e-2;
  double t_end = 20;
  double sample_dt = 0.1;
  double window_fraction = 0.5;  // tail of the series used in the fit
};
DecayFit run_decay_study(const InsfSolver& solver, MacroState st, const DecayOptions& o);
std::string decay_series_csv(const DecayFit& fit);

}  // namespace kf

#include "kinfluid/insf_solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace kf {

namespace {
const double kPi = 3.14159265358979323846;
const cplx kI(0, 1);
}  // namespace

struct Torus::Plans {
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  fftw_plan fwd = nullptr, inv = nullptr;
  ~Plans() {
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(rbuf);
    fftw_free(cbuf);
  }
};

Torus::Torus(int d, int N) : d_(d), N_(N), K_((N - 1) / 3) {
  if (d < 2 || d > 3) throw std::invalid_argument("Torus: dimension must be 2 or 3");
  if (N < 4 || N % 2) throw std::invalid_argument("Torus: N must be even and >= 4");
  nreal_ = 1;
  for (int a = 0; a < d; ++a) nreal_ *= N;
  nspec_ = nreal_ / N * (N / 2 + 1);
  modes_.resize(nspec_);
  kept_.resize(nspec_);
  pw_.resize(nspec_);
  const int h = N / 2 + 1;
  for (std::size_t k = 0; k < nspec_; ++k) {
    std::array<int, 3> m{0, 0, 0};
    std::size_t rem = k;
    m[d - 1] = static_cast<int>(rem % h);
    rem /= h;
    for (int a = d - 2; a >= 0; --a) {
      int i = static_cast<int>(rem % N);
      rem /= N;
      m[a] = i <= N / 2 ? i : i - N;
    }
    modes_[k] = m;
    bool keep = true;
    for (int a = 0; a < d; ++a) keep = keep && std::abs(m[a]) <= K_;
    kept_[k] = keep;
    pw_[k] = (m[d - 1] == 0 || m[d - 1] == N / 2) ? 1.0 : 2.0;
  }
  plans_ = std::make_unique<Plans>();
  plans_->rbuf = fftw_alloc_real(nreal_);
  plans_->cbuf = fftw_alloc_complex(nspec_);
  int n[3] = {N, N, N};
  plans_->fwd = fftw_plan_dft_r2c(d, n, plans_->rbuf, plans_->cbuf, FFTW_ESTIMATE);
  plans_->inv = fftw_plan_dft_c2r(d, n, plans_->cbuf, plans_->rbuf, FFTW_ESTIMATE);
}

Torus::~Torus() = default;

double Torus::mode_sq(std::size_t k) const {
  const auto& m = modes_[k];
  return double(m[0]) * m[0] + double(m[1]) * m[1] + double(m[2]) * m[2];
}

std::array<double, 3> Torus::position(std::size_t r) const {
  std::array<double, 3> x{0, 0, 0};
  for (int a = d_ - 1; a >= 0; --a) {
    x[a] = dx() * static_cast<double>(r % N_);
    r /= N_;
  }
  return x;
}

double Torus::volume() const { return std::pow(2 * kPi, d_); }
double Torus::dx() const { return 2 * kPi / N_; }

void Torus::forward(const std::vector<double>& in, std::vector<cplx>& out) const {
  std::copy(in.begin(), in.end(), plans_->rbuf);
  fftw_execute(plans_->fwd);
  out.resize(nspec_);
  const double s = 1.0 / static_cast<double>(nreal_);
  for (std::size_t k = 0; k < nspec_; ++k) out[k] = cplx(plans_->cbuf[k][0], plans_->cbuf[k][1]) * s;
}

void Torus::inverse(const std::vector<cplx>& in, std::vector<double>& out) const {
  for (std::size_t k = 0; k < nspec_; ++k) {
    plans_->cbuf[k][0] = in[k].real();
    plans_->cbuf[k][1] = in[k].imag();
  }
  fftw_execute(plans_->inv);
  out.assign(plans_->rbuf, plans_->rbuf + nreal_);
}

void Torus::truncate(std::vector<cplx>& f) const {
  for (std::size_t k = 0; k < nspec_; ++k)
    if (!kept_[k]) f[k] = 0;
}

ScalarField zero_scalar(const Torus& t) { return ScalarField(t.spec_size(), 0.0); }
VectorField zero_vector(const Torus& t) { return {zero_scalar(t), zero_scalar(t), zero_scalar(t)}; }

ScalarField from_physical(const Torus& t, const std::vector<double>& f) {
  ScalarField out;
  t.forward(f, out);
  t.truncate(out);
  return out;
}

std::vector<double> to_physical(const Torus& t, const ScalarField& f) {
  std::vector<double> out;
  t.inverse(f, out);
  return out;
}

void leray_project(const Torus& t, VectorField& u) {
  const int d = t.dim();
  for (std::size_t k = 1; k < t.spec_size(); ++k) {
    const auto& m = t.mode(k);
    cplx md = 0;
    for (int a = 0; a < d; ++a) md += double(m[a]) * u[a][k];
    md /= t.mode_sq(k);
    for (int a = 0; a < d; ++a) u[a][k] -= double(m[a]) * md;
  }
}

double inner_mean(const Torus& t, const ScalarField& f, const ScalarField& g) {
  double s = 0;
  for (std::size_t k = 0; k < t.spec_size(); ++k) s += t.parseval_weight(k) * (f[k] * std::conj(g[k])).real();
  return s;
}

double mean_value(const ScalarField& f) { return f[0].real(); }

double l2_norm(const Torus& t, const ScalarField& f) { return std::sqrt(t.volume() * inner_mean(t, f, f)); }

double l2_norm(const Torus& t, const VectorField& u) {
  double s = 0;
  for (int a = 0; a < t.dim(); ++a) s += inner_mean(t, u[a], u[a]);
  return std::sqrt(t.volume() * s);
}

double gradient_norm(const Torus& t, const VectorField& u) {
  double s = 0;
  for (int a = 0; a < t.dim(); ++a)
    for (std::size_t k = 0; k < t.spec_size(); ++k) s += t.parseval_weight(k) * t.mode_sq(k) * std::norm(u[a][k]);
  return std::sqrt(t.volume() * s);
}

double divergence_norm(const Torus& t, const VectorField& u) {
  double s = 0;
  for (std::size_t k = 0; k < t.spec_size(); ++k) {
    const auto& m = t.mode(k);
    cplx md = 0;
    for (int a = 0; a < t.dim(); ++a) md += double(m[a]) * u[a][k];
    s += t.parseval_weight(k) * std::norm(md);
  }
  return std::sqrt(t.volume() * s);
}

namespace {

ScalarField derivative(const Torus& t, const ScalarField& f, int a) {
  ScalarField out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = kI * double(t.mode(k)[a]) * f[k];
  return out;
}

// symmetric products u_a u_b, dealiased, indexed a * 3 + b
std::array<ScalarField, 9> velocity_products(const Torus& t, const std::array<std::vector<double>, 3>& up) {
  std::array<ScalarField, 9> T;
  std::vector<double> w(t.real_size());
  for (int a = 0; a < t.dim(); ++a)
    for (int b = a; b < t.dim(); ++b) {
      for (std::size_t r = 0; r < w.size(); ++r) w[r] = up[a][r] * up[b][r];
      T[a * 3 + b] = from_physical(t, w);
      if (b != a) T[b * 3 + a] = T[a * 3 + b];
    }
  return T;
}

}  // namespace

ScalarField viscous_heating(const Torus& t, const VectorField& u, double mu_star) {
  const int d = t.dim();
  std::array<std::array<std::vector<double>, 3>, 3> G;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) G[a][b] = to_physical(t, derivative(t, u[a], b));
  std::vector<double> h(t.real_size(), 0.0);
  for (std::size_t r = 0; r < h.size(); ++r) {
    double s = 0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) s += G[a][b][r] * G[a][b][r] + G[a][b][r] * G[b][a][r];
    h[r] = mu_star * s;
  }
  return from_physical(t, h);
}

ScalarField InsfSolver::pressure(const VectorField& u) const {
  const int d = t_.dim();
  std::array<std::vector<double>, 3> up;
  for (int a = 0; a < d; ++a) up[a] = to_physical(t_, u[a]);
  auto T = velocity_products(t_, up);
  ScalarField p = zero_scalar(t_);
  for (std::size_t k = 1; k < t_.spec_size(); ++k) {
    const auto& m = t_.mode(k);
    cplx s = 0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) s += double(m[a]) * m[b] * T[a * 3 + b][k];
    p[k] = -s / t_.mode_sq(k);
  }
  return p;
}

void InsfSolver::rhs(const MacroState& st, const VectorField& u, const ScalarField& s, VectorField& nu,
                     ScalarField& ns) const {
  const int d = t_.dim();
  const std::size_t K = t_.spec_size();
  nu = zero_vector(t_);
  ns = zero_scalar(t_);
  if (!opt_.nonlinear) return;
  std::array<std::vector<double>, 3> up;
  for (int a = 0; a < d; ++a) up[a] = to_physical(t_, u[a]);
  auto sp = to_physical(t_, s);
  auto T = velocity_products(t_, up);
  std::vector<double> w(t_.real_size());
  for (int b = 0; b < d; ++b) {
    for (std::size_t r = 0; r < w.size(); ++r) w[r] = up[b][r] * sp[r];
    auto us = from_physical(t_, w);
    for (std::size_t k = 0; k < K; ++k) ns[k] -= kI * double(t_.mode(k)[b]) * us[k];
  }
  const double c = 0.4 * st.coeffs.kappa_star;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& m = t_.mode(k);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        nu[a][k] -= kI * double(m[b]) * T[a * 3 + b][k];
        ns[k] += c * double(m[a]) * m[b] * T[a * 3 + b][k];
      }
  }
  leray_project(t_, nu);
  auto h = viscous_heating(t_, u, st.coeffs.mu_star);
  for (std::size_t k = 0; k < K; ++k) ns[k] += h[k];
}

double InsfSolver::cfl_limit(const MacroState& st) const {
  double umax = 0;
  std::vector<double> mag(t_.real_size(), 0.0);
  for (int a = 0; a < t_.dim(); ++a) {
    auto ua = to_physical(t_, st.u[a]);
    for (std::size_t r = 0; r < mag.size(); ++r) mag[r] += ua[r] * ua[r];
  }
  for (double m : mag) umax = std::max(umax, m);
  umax = std::sqrt(umax);
  return umax > 0 ? opt_.cfl * t_.dx() / umax : std::numeric_limits<double>::infinity();
}

void InsfSolver::reconstruct(MacroState& st) const {
  st.p = opt_.nonlinear ? pressure(st.u) : zero_scalar(t_);
  st.theta = zero_scalar(t_);
  st.rho = zero_scalar(t_);
  for (std::size_t k = 1; k < t_.spec_size(); ++k) {
    st.theta[k] = 0.4 * (st.s[k] + st.p[k]);
    st.rho[k] = st.p[k] - st.theta[k];
  }
  st.theta[0] = 2.0 / 3.0 * (st.s[0] + st.rho_mean);
  st.rho[0] = st.rho_mean;
  st.p[0] = st.rho[0] + st.theta[0];
}

void InsfSolver::step(MacroState& st, double dt) const {
  if (!(dt > 0)) throw std::invalid_argument("step: dt must be positive");
  const double lim = cfl_limit(st);
  if (dt > lim) {
    std::ostringstream os;
    os << "CFL violation at t=" << st.time << ": dt=" << dt << " > limit " << lim;
    throw CflError(os.str());
  }
  const int d = t_.dim();
  const std::size_t K = t_.spec_size();
  std::vector<double> eu(K), es(K);
  for (std::size_t k = 0; k < K; ++k) {
    eu[k] = std::exp(-0.5 * dt * st.coeffs.mu_star * t_.mode_sq(k));
    es[k] = std::exp(-0.5 * dt * 0.4 * st.coeffs.kappa_star * t_.mode_sq(k));
  }
  auto shift = [&](const VectorField& u, const ScalarField& s, const VectorField* du, const ScalarField* ds,
                   double h, int half_steps, VectorField& uo, ScalarField& so) {
    uo = u;
    so = s;
    for (std::size_t k = 0; k < K; ++k) {
      const double fu = half_steps == 2 ? eu[k] * eu[k] : eu[k], fs = half_steps == 2 ? es[k] * es[k] : es[k];
      for (int a = 0; a < d; ++a) uo[a][k] = fu * (u[a][k] + (du ? h * (*du)[a][k] : 0.0));
      so[k] = fs * (s[k] + (ds ? h * (*ds)[k] : 0.0));
    }
  };
  VectorField k1u, k2u, k3u, k4u, yu;
  ScalarField k1s, k2s, k3s, k4s, ys;
  rhs(st, st.u, st.s, k1u, k1s);
  shift(st.u, st.s, &k1u, &k1s, 0.5 * dt, 1, yu, ys);
  rhs(st, yu, ys, k2u, k2s);
  VectorField eu0;
  ScalarField es0;
  shift(st.u, st.s, nullptr, nullptr, 0, 1, eu0, es0);
  for (std::size_t k = 0; k < K; ++k) {
    for (int a = 0; a < d; ++a) yu[a][k] = eu0[a][k] + 0.5 * dt * k2u[a][k];
    ys[k] = es0[k] + 0.5 * dt * k2s[k];
  }
  rhs(st, yu, ys, k3u, k3s);
  shift(eu0, es0, &k3u, &k3s, dt, 1, yu, ys);
  rhs(st, yu, ys, k4u, k4s);
  for (std::size_t k = 0; k < K; ++k) {
    const double a2u = eu[k] * eu[k], a2s = es[k] * es[k];
    for (int a = 0; a < d; ++a)
      st.u[a][k] = a2u * st.u[a][k] +
                   dt / 6 * (a2u * k1u[a][k] + 2 * eu[k] * (k2u[a][k] + k3u[a][k]) + k4u[a][k]);
    st.s[k] = a2s * st.s[k] + dt / 6 * (a2s * k1s[k] + 2 * es[k] * (k2s[k] + k3s[k]) + k4s[k]);
  }
  for (int a = 0; a < d; ++a) t_.truncate(st.u[a]);
  t_.truncate(st.s);
  leray_project(t_, st.u);
  st.time += dt;
  bool finite = true;
  for (std::size_t k = 0; k < K && finite; ++k) {
    finite = std::isfinite(st.s[k].real()) && std::isfinite(st.s[k].imag());
    for (int a = 0; a < d; ++a) finite = finite && std::isfinite(std::abs(st.u[a][k]));
  }
  if (!finite) {
    std::ostringstream os;
    os << "non-finite state at t=" << st.time << " (dt=" << dt << ", N=" << t_.N() << ", d=" << d << ")";
    throw NanError(os.str());
  }
  reconstruct(st);
}

MacroState make_state(const Torus& t, VectorField u, ScalarField theta, ScalarField rho, TransportCoefficients c) {
  MacroState st;
  for (int a = 0; a < t.dim(); ++a) t.truncate(u[a]);
  for (int a = t.dim(); a < 3; ++a) u[a] = zero_scalar(t);
  leray_project(t, u);
  t.truncate(theta);
  t.truncate(rho);
  st.u = std::move(u);
  st.s = zero_scalar(t);
  for (std::size_t k = 0; k < t.spec_size(); ++k) st.s[k] = 1.5 * theta[k] - rho[k];
  st.rho_mean = rho[0].real();
  st.coeffs = c;
  InsfSolver(t).reconstruct(st);
  return st;
}

ConservedReport conserved_diagnostics(const Torus& t, const MacroState& st, const ConservedReport* initial) {
  ConservedReport r;
  const double V = t.volume();
  double usq = 0;
  for (int a = 0; a < t.dim(); ++a) {
    r.momentum[a] = V * st.u[a][0].real();
    usq += inner_mean(t, st.u[a], st.u[a]);
  }
  r.constraint = V * (3 * st.theta[0].real() + usq);
  r.energy = V * (1.5 * st.theta[0].real() - st.rho[0].real() + 0.5 * usq);
  r.mass = V * st.rho[0].real();
  if (initial) {
    for (int a = 0; a < 3; ++a) r.momentum_drift[a] = r.momentum[a] - initial->momentum[a];
    r.constraint_drift = r.constraint - initial->constraint;
    r.energy_drift = r.energy - initial->energy;
    r.mass_drift = r.mass - initial->mass;
  }
  return r;
}

namespace {

template <class F>
std::vector<double> sample_physical(const Torus& t, F f) {
  std::vector<double> out(t.real_size());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = f(t.position(r));
  return out;
}

// temperature mean chosen so that int (3 theta + |u|^2) dx = 0
MacroState finish_preset(const Torus& t, VectorField u, ScalarField theta, TransportCoefficients c) {
  for (int a = 0; a < t.dim(); ++a) t.truncate(u[a]);
  leray_project(t, u);
  double usq = 0;
  for (int a = 0; a < t.dim(); ++a) usq += inner_mean(t, u[a], u[a]);
  theta[0] = -usq / 3;
  return make_state(t, std::move(u), std::move(theta), zero_scalar(t), c);
}

}  // namespace

MacroState preset_taylor_green(const Torus& t, double amp, TransportCoefficients c) {
  VectorField u = zero_vector(t);
  const bool d3 = t.dim() == 3;
  u[0] = from_physical(t, sample_physical(t, [&](const std::array<double, 3>& x) {
                         return amp * std::sin(x[0]) * std::cos(x[1]) * (d3 ? std::cos(x[2]) : 1.0);
                       }));
  u[1] = from_physical(t, sample_physical(t, [&](const std::array<double, 3>& x) {
                         return -amp * std::cos(x[0]) * std::sin(x[1]) * (d3 ? std::cos(x[2]) : 1.0);
                       }));
  return finish_preset(t, std::move(u), zero_scalar(t), c);
}

MacroState preset_shear(const Torus& t, double amp, TransportCoefficients c) {
  VectorField u = zero_vector(t);
  u[0] = from_physical(t, sample_physical(t, [&](const std::array<double, 3>& x) { return amp * std::sin(x[1]); }));
  return finish_preset(t, std::move(u), zero_scalar(t), c);
}

MacroState preset_single_mode(const Torus& t, double amp, const std::array<int, 3>& m, TransportCoefficients c) {
  const int d = t.dim();
  std::array<double, 3> a{0, 0, 0};
  if (d == 2) {
    a = {-double(m[1]), double(m[0]), 0};
  } else {
    int e = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(m[i]) < std::abs(m[e])) e = i;
    std::array<double, 3> ev{0, 0, 0};
    ev[e] = 1;
    a = {m[1] * ev[2] - m[2] * ev[1], m[2] * ev[0] - m[0] * ev[2], m[0] * ev[1] - m[1] * ev[0]};
  }
  const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  if (na == 0) throw std::invalid_argument("preset_single_mode: zero wavevector");
  VectorField u = zero_vector(t);
  for (int i = 0; i < d; ++i)
    u[i] = from_physical(t, sample_physical(t, [&](const std::array<double, 3>& x) {
                           double ph = m[0] * x[0] + m[1] * x[1] + (d == 3 ? m[2] * x[2] : 0.0);
                           return amp * a[i] / na * std::sin(ph);
                         }));
  return finish_preset(t, std::move(u), zero_scalar(t), c);
}

MacroState preset_random(const Torus& t, double amp, std::uint64_t seed, double slope, int kmax,
                         TransportCoefficients c) {
  if (kmax < 1 || kmax > t.cutoff()) throw std::invalid_argument("preset_random: kmax outside [1, cutoff]");
  const int d = t.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  // Hermitian-consistent coefficients: draw for the canonical member of each +-m pair
  std::map<std::array<int, 3>, std::array<cplx, 4>> coef;
  auto canonical = [&](std::array<int, 3> m, bool& flipped) {
    flipped = false;
    for (int a = 0; a < d; ++a) {
      if (m[a] > 0) break;
      if (m[a] < 0) {
        flipped = true;
        for (int b = 0; b < d; ++b) m[b] = -m[b];
        break;
      }
    }
    return m;
  };
  VectorField u = zero_vector(t);
  ScalarField th = zero_scalar(t);
  for (std::size_t k = 1; k < t.spec_size(); ++k) {
    const auto& m = t.mode(k);
    int inf = 0;
    for (int a = 0; a < d; ++a) inf = std::max(inf, std::abs(m[a]));
    if (inf > kmax) continue;
    bool flipped;
    auto cm = canonical(m, flipped);
    auto it = coef.find(cm);
    if (it == coef.end()) {
      std::array<cplx, 4> v;
      const double sc = std::pow(t.mode_sq(k), -0.5 * slope);
      for (auto& x : v) x = sc * cplx(nd(rng), nd(rng));
      it = coef.emplace(cm, v).first;
    }
    for (int a = 0; a < d; ++a) u[a][k] = flipped ? std::conj(it->second[a]) : it->second[a];
    th[k] = flipped ? std::conj(it->second[3]) : it->second[3];
  }
  leray_project(t, u);
  const double un = l2_norm(t, u) / std::sqrt(t.volume()), tn = l2_norm(t, th) / std::sqrt(t.volume());
  for (int a = 0; a < d; ++a)
    for (auto& x : u[a]) x *= un > 0 ? amp / un : 0.0;
  for (auto& x : th) x *= tn > 0 ? amp / tn : 0.0;
  return finish_preset(t, std::move(u), std::move(th), c);
}

DecayFit run_decay_study(const InsfSolver& solver, MacroState st, const DecayOptions& o) {
  const Torus& t = solver.torus();
  DecayFit fit;
  const auto c0 = conserved_diagnostics(t, st);
  const int per = std::max(1, static_cast<int>(std::lround(o.sample_dt / o.dt)));
  const int samples = static_cast<int>(std::lround(o.t_end / (per * o.dt)));
  auto record = [&] {
    auto c = conserved_diagnostics(t, st, &c0);
    fit.series.push_back({st.time, l2_norm(t, st.u), gradient_norm(t, st.u), l2_norm(t, st.theta),
                          std::sqrt(dot(c.momentum_drift, c.momentum_drift)), c.energy_drift, c.constraint});
  };
  record();
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < per; ++i) solver.step(st, o.dt);
    record();
  }
  fit.window_end = fit.series.back().time;
  fit.window_start = fit.window_end * (1 - o.window_fraction);
  std::vector<double> x, y;
  for (const auto& s : fit.series) {
    if (s.time < fit.window_start - 1e-12) continue;
    if (!(s.u_norm > 0)) {
      fit.degenerate = true;
      break;
    }
    x.push_back(s.time);
    y.push_back(std::log(s.u_norm));
  }
  if (fit.degenerate || x.size() < 3) {
    fit.degenerate = true;
    return fit;
  }
  auto lf = fit_line(x, y);
  fit.lambda_fit = -lf.slope;
  fit.r_squared = std::clamp(lf.r2, 0.0, 1.0);
  fit.fit_failed = fit.r_squared < 0.9;
  return fit;
}

std::string decay_series_csv(const DecayFit& fit) {
  std::ostringstream os;
  os.precision(12);
  os << "time,u_l2,grad_u_l2,theta_l2,momentum_drift,energy_drift,mean_constraint\n";
  for (const auto& s : fit.series)
    os << s.time << "," << s.u_norm << "," << s.grad_norm << "," << s.theta_norm << "," << s.momentum_drift << ","
       << s.energy_drift << "," << s.constraint << "\n";
  return os.str();
}

}  // namespace kf

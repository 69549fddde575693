#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "kinfluid/insf_solver.hpp"

using namespace kf;

namespace {

const TransportCoefficients kCoeffs{0.179136, 0.677834};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <class F>
std::vector<double> sample(const Torus& t, F f) {
  std::vector<double> out(t.real_size());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = f(t.position(r));
  return out;
}

double field_diff(const Torus& t, const ScalarField& a, const ScalarField& b) {
  ScalarField d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return l2_norm(t, d);
}

}  // namespace

TEST_CASE("torus transforms and Parseval") {
  Torus t(3, 16);
  CHECK(t.cutoff() == 5);
  auto f = sample(t, [](const auto& x) { return std::sin(x[0]) * std::cos(2 * x[2]) + 0.5; });
  auto F = from_physical(t, f);
  CHECK(mean_value(F) == doctest::Approx(0.5));
  CHECK(max_abs_diff(to_physical(t, F), f) < 1e-14);
  // mean of f^2 = 0.25 + 1/4
  CHECK(inner_mean(t, F, F) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS(Torus(4, 16));
  CHECK_THROWS(Torus(2, 15));
}

TEST_CASE("Leray projector") {
  Torus t(3, 16);
  auto phi = [](const auto& x) { return std::sin(x[0] + 2 * x[1]) * std::cos(x[2]); };
  VectorField g = zero_vector(t);
  g[0] = from_physical(t, sample(t, [&](const auto& x) { return std::cos(x[0] + 2 * x[1]) * std::cos(x[2]); }));
  g[1] = from_physical(t, sample(t, [&](const auto& x) { return 2 * std::cos(x[0] + 2 * x[1]) * std::cos(x[2]); }));
  g[2] = from_physical(t, sample(t, [&](const auto& x) { return -std::sin(x[0] + 2 * x[1]) * std::sin(x[2]); }));
  (void)phi;
  const double gn = l2_norm(t, g);
  leray_project(t, g);
  CHECK(l2_norm(t, g) < 1e-14 * gn);

  auto st = preset_random(t, 1.0, 5, 1.0, 4, kCoeffs);
  VectorField u = st.u;
  leray_project(t, u);
  for (int a = 0; a < 3; ++a) CHECK(field_diff(t, u[a], st.u[a]) < 1e-15 * l2_norm(t, st.u));
  VectorField r = zero_vector(t);
  for (int a = 0; a < 3; ++a)
    r[a] = from_physical(t, sample(t, [&](const auto& x) { return std::sin((a + 1) * x[0] - x[1]) + x[2] * 0; }));
  VectorField r1 = r;
  leray_project(t, r1);
  VectorField r2 = r1;
  leray_project(t, r2);
  for (int a = 0; a < 3; ++a) CHECK(field_diff(t, r1[a], r2[a]) < 1e-15);
  CHECK(divergence_norm(t, r1) < 1e-14);
}

TEST_CASE("viscous heating") {
  for (int d : {2, 3}) {
    Torus t(d, 32);
    CHECK(l2_norm(t, viscous_heating(t, zero_vector(t), 1.0)) == 0.0);
    VectorField c = zero_vector(t);
    c[0][0] = 0.7;
    c[1][0] = -0.2;
    CHECK(l2_norm(t, viscous_heating(t, c, 1.0)) == 0.0);
    auto sh = preset_shear(t, 1.0, kCoeffs);
    auto h = to_physical(t, viscous_heating(t, sh.u, kCoeffs.mu_star));
    auto oracle = sample(t, [](const auto& x) { return kCoeffs.mu_star * std::cos(x[1]) * std::cos(x[1]); });
    CHECK(max_abs_diff(h, oracle) < 1e-10);
    CHECK(mean_value(viscous_heating(t, sh.u, kCoeffs.mu_star)) == doctest::Approx(kCoeffs.mu_star / 2));
  }
  // Taylor-Green in 3-D against pointwise analytic gradients
  Torus t(3, 32);
  auto tg = preset_taylor_green(t, 1.0, kCoeffs);
  auto h = to_physical(t, viscous_heating(t, tg.u, 1.0));
  auto oracle = sample(t, [](const auto& x) {
    const double sx = std::sin(x[0]), cx = std::cos(x[0]), sy = std::sin(x[1]), cy = std::cos(x[1]),
                 sz = std::sin(x[2]), cz = std::cos(x[2]);
    double G[3][3] = {{cx * cy * cz, -sx * sy * cz, -sx * cy * sz}, {sx * sy * cz, -cx * cy * cz, cx * sy * sz}, {0, 0, 0}};
    double s = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s += 0.5 * std::pow(G[a][b] + G[b][a], 2);
    return s;
  });
  CHECK(max_abs_diff(h, oracle) < 1e-10);
}

TEST_CASE("pressure reconstruction") {
  Torus t(2, 32);
  const double A = 0.8;
  auto st = preset_taylor_green(t, A, kCoeffs);
  auto p = to_physical(t, st.p);
  // u.grad u = -grad p with p = A^2 (cos 2x + cos 2y) / 4 up to the mean
  auto oracle = sample(t, [&](const auto& x) { return A * A / 4 * (std::cos(2 * x[0]) + std::cos(2 * x[1])); });
  const double pm = mean_value(st.p);
  for (auto& v : oracle) v += pm;
  CHECK(max_abs_diff(p, oracle) < 1e-13);
  auto rho = to_physical(t, st.rho), th = to_physical(t, st.theta);
  for (std::size_t r = 0; r < p.size(); ++r) CHECK(std::abs(p[r] - rho[r] - th[r]) < 1e-14);
  for (std::size_t k = 1; k < t.spec_size(); ++k) CHECK(std::abs(st.theta[k] - 0.4 * (st.s[k] + st.p[k])) < 1e-15);
}

TEST_CASE("zero data is a fixed point") {
  Torus t(2, 16);
  auto st = make_state(t, zero_vector(t), zero_scalar(t), zero_scalar(t), kCoeffs);
  InsfSolver sol(t);
  for (int i = 0; i < 10; ++i) sol.step(st, 1e-2);
  CHECK(l2_norm(t, st.u) == 0.0);
  CHECK(l2_norm(t, st.theta) == 0.0);
  CHECK(st.time == doctest::Approx(0.1));
}

TEST_CASE("single mode without nonlinearity follows the heat kernel") {
  Torus t(3, 32);
  InsfSolver sol(t, {false, 0.5});
  std::array<int, 3> m{1, 2, 0};
  auto st = preset_single_mode(t, 0.3, m, kCoeffs);
  const auto u0 = st.u;
  const double msq = 5, dt = 1e-3;
  double worst_balance = 0;
  for (int n = 0; n < 200; ++n) {
    const double e0 = 0.5 * std::pow(l2_norm(t, st.u), 2), g0 = std::pow(gradient_norm(t, st.u), 2);
    sol.step(st, dt);
    const double e1 = 0.5 * std::pow(l2_norm(t, st.u), 2), g1 = std::pow(gradient_norm(t, st.u), 2);
    worst_balance = std::max(worst_balance, std::abs(e1 - e0 + kCoeffs.mu_star * 0.5 * dt * (g0 + g1)));
  }
  const double decay = std::exp(-kCoeffs.mu_star * msq * st.time);
  double err = 0;
  for (int a = 0; a < 3; ++a)
    for (std::size_t k = 0; k < t.spec_size(); ++k) err = std::max(err, std::abs(st.u[a][k] - decay * u0[a][k]));
  CHECK(err < 1e-15);
  std::printf("heat-kernel energy balance residual per step %.3e\n", worst_balance);
  CHECK(worst_balance <= 1e-8);
}

TEST_CASE("Taylor-Green energy balance") {
  Torus t(2, 64);
  InsfSolver sol(t);
  auto st = preset_taylor_green(t, 1.0, kCoeffs);
  const double dt = 1e-3;
  double worst = 0, e_start = 0.5 * std::pow(l2_norm(t, st.u), 2);
  for (int n = 0; n < 100; ++n) {
    const double e0 = 0.5 * std::pow(l2_norm(t, st.u), 2), g0 = std::pow(gradient_norm(t, st.u), 2);
    sol.step(st, dt);
    const double e1 = 0.5 * std::pow(l2_norm(t, st.u), 2), g1 = std::pow(gradient_norm(t, st.u), 2);
    worst = std::max(worst, std::abs(e1 - e0 + kCoeffs.mu_star * 0.5 * dt * (g0 + g1)) / e_start);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("conservation at d=3, N=32, dt=1e-3") {
  Torus t(3, 32);
  InsfSolver sol(t);
  auto st = preset_random(t, 0.5, 17, 2.0, 4, kCoeffs);
  auto c0 = conserved_diagnostics(t, st);
  CHECK(std::abs(c0.constraint) < 1e-12);
  CHECK(std::abs(c0.mass) < 1e-14);
  for (double m : c0.momentum) CHECK(std::abs(m) < 1e-14);
  const double dt = 1e-3;
  const int steps = 200;
  double worst_div = 0, min_heat = 1;
  for (int n = 0; n < steps; ++n) {
    sol.step(st, dt);
    worst_div = std::max(worst_div, divergence_norm(t, st.u) / l2_norm(t, st.u));
    min_heat = std::min(min_heat, mean_value(viscous_heating(t, st.u, kCoeffs.mu_star)));
  }
  auto c = conserved_diagnostics(t, st, &c0);
  const double T = steps * dt;
  std::printf("drift per unit time: momentum %.3e energy %.3e constraint %.3e; div %.3e\n",
              std::sqrt(dot(c.momentum_drift, c.momentum_drift)) / T, std::abs(c.energy_drift) / T,
              std::abs(c.constraint_drift) / T, worst_div);
  CHECK(std::sqrt(dot(c.momentum_drift, c.momentum_drift)) / T <= 1e-10);
  CHECK(std::abs(c.energy_drift) / T <= 1e-10);
  CHECK(std::abs(c.constraint) <= 1e-10);
  CHECK(std::abs(c.mass_drift) <= 1e-14);
  CHECK(worst_div <= 1e-13);
  CHECK(min_heat >= 0);
  CHECK(l2_norm(t, st.u) < l2_norm(t, preset_random(t, 0.5, 17, 2.0, 4, kCoeffs).u));
}

TEST_CASE("energy drift is a fourth-order time error") {
  Torus t(3, 32);
  InsfSolver sol(t);
  auto rough = preset_random(t, 0.5, 17, 1.5, 6, kCoeffs);
  auto drift = [&](double dt) {
    auto st = rough;
    auto c0 = conserved_diagnostics(t, st);
    const int steps = static_cast<int>(std::lround(0.1 / dt));
    for (int n = 0; n < steps; ++n) sol.step(st, dt);
    return std::abs(conserved_diagnostics(t, st, &c0).energy_drift);
  };
  const double d2 = drift(2e-3), d1 = drift(1e-3);
  std::printf("rough data energy drift: dt=2e-3 %.3e, dt=1e-3 %.3e (ratio %.2f)\n", d2, d1, d2 / d1);
  CHECK(d2 / d1 > 12);
}

TEST_CASE("CFL and NaN guards") {
  Torus t(2, 16);
  InsfSolver sol(t);
  auto st = preset_taylor_green(t, 1.0, kCoeffs);
  const double lim = sol.cfl_limit(st);
  CHECK(lim == doctest::Approx(0.5 * t.dx()).epsilon(1e-3));
  CHECK_THROWS_AS(sol.step(st, 2 * lim), CflError);
  st.u[0][3] = std::nan("");
  CHECK_THROWS_AS(sol.step(st, 1e-3), NanError);
}

TEST_CASE("decay study") {
  Torus t(3, 16);
  InsfSolver sol(t);
  auto tiny = preset_random(t, 1e-6, 3, 1.0, 3, kCoeffs);
  auto lin = run_decay_study(sol, tiny, {1e-2, 20, 0.1, 0.5});
  std::printf("linear regime lambda %.6f (expect %.6f) r2 %.6f\n", lin.lambda_fit, kCoeffs.mu_star, lin.r_squared);
  CHECK(std::abs(lin.lambda_fit / kCoeffs.mu_star - 1) < 0.05);
  CHECK_FALSE(lin.degenerate);

  auto zero = run_decay_study(sol, make_state(t, zero_vector(t), zero_scalar(t), zero_scalar(t), kCoeffs),
                              {1e-2, 1, 0.1, 0.5});
  CHECK(zero.degenerate);

  auto small = preset_random(t, 0.2, 4, 1.0, 3, kCoeffs);
  auto nl = run_decay_study(sol, small, {1e-2, 20, 0.1, 0.5});
  CHECK(nl.lambda_fit > 0);
  CHECK(nl.r_squared >= 0.95);
  for (std::size_t i = nl.series.size() / 4; i + 1 < nl.series.size(); ++i)
    CHECK(nl.series[i + 1].u_norm < nl.series[i].u_norm);
  auto csv = decay_series_csv(nl);
  CHECK(csv.rfind("time,u_l2", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(nl.series.size()) + 1);
}

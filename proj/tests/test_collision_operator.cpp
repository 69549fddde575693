#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "doctest.h"
#include "kinfluid/collision_operator.hpp"
#include "shared_operator.hpp"

using namespace kf;

namespace {
const double kPi = 3.14159265358979323846;

// int (k2 - k1)(v, w) phi(w) dw in spherical coordinates centred at v
template <class F>
double kernel_apply_oracle(const Vec3& v, F&& phi) {
  auto gr = gauss_legendre(12);
  auto gt = gauss_legendre(32);
  const int nphi = 32;
  double acc = 0;
  for (int p = 0; p < 20; ++p)
    for (std::size_t i = 0; i < gr.x.size(); ++i) {
      double r = p + 0.5 * (gr.x[i] + 1), wr = 0.5 * gr.w[i];
      for (std::size_t a = 0; a < gt.x.size(); ++a) {
        double t = gt.x[a], s = std::sqrt(1 - t * t);
        for (int k = 0; k < nphi; ++k) {
          double ph = 2 * kPi * (k + 0.5) / nphi;
          Vec3 w{v[0] + r * s * std::cos(ph), v[1] + r * s * std::sin(ph), v[2] + r * t};
          acc += wr * gt.w[a] * (2 * kPi / nphi) * r * r * (kernel_k2(v, w) - kernel_k1(v, w)) * phi(w);
        }
      }
    }
  return acc;
}

Eigen::VectorXd random_function(const VelocityGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(10);
  for (auto& x : c) x = nd(rng);
  return sample(g, [&](const Vec3& v) {
    double p = c[0] + c[1] * v[0] + c[2] * v[1] * v[2] + c[3] * v[2] * v[2] * v[0] + c[4] * std::cos(v[1]) +
               c[5] * std::sin(v[0] - v[2]) + c[6] * dot(v, v) * v[1] + c[7] * std::tanh(v[2]) +
               c[8] * v[0] * v[1] * v[2] + c[9] * std::pow(dot(v, v), 2);
    return p * sqrt_maxwellian(v);
  });
}
}  // namespace

TEST_CASE("collision frequency: closed form against the radial integral") {
  CHECK(collision_frequency({0, 0, 0}) == doctest::Approx(2 * std::sqrt(2 * kPi)).epsilon(1e-14));
  CHECK(collision_frequency_radial(0.0) == doctest::Approx(2 * std::sqrt(2 * kPi)).epsilon(1e-10));
  for (double s : {1e-6, 0.1, 0.5, 1.0, 2.0, 3.7, 6.0, 8.0, 13.86}) {
    CHECK(collision_frequency({s, 0, 0}) == doctest::Approx(collision_frequency_radial(s)).epsilon(1e-10));
    Vec3 v{s / std::sqrt(3.0), -s / std::sqrt(3.0), s / std::sqrt(3.0)};
    CHECK(collision_frequency(v) == doctest::Approx(collision_frequency({s, 0, 0})).epsilon(1e-14));
    CHECK(collision_frequency(v) == collision_frequency({-v[0], -v[1], -v[2]}));
    // nu is comparable to <v> = sqrt(1 + |v|^2)
    double br = std::sqrt(1 + s * s);
    CHECK(collision_frequency(v) / br >= kPi * 0.99);
    CHECK(collision_frequency(v) / br <= 2 * std::sqrt(2 * kPi) * 1.0001);
  }
  // large-speed asymptote pi (s + 1/s)
  CHECK(collision_frequency({30, 0, 0}) == doctest::Approx(kPi * (30 + 1.0 / 30)).epsilon(1e-14));
}

TEST_CASE("closed-form kernels reproduce K on collision invariants") {
  for (Vec3 v : {Vec3{0.3, -0.5, 1.1}, Vec3{2.0, 1.0, -0.5}, Vec3{0.0, 0.0, 3.5}}) {
    double nu = collision_frequency(v), sm = sqrt_maxwellian(v);
    CHECK(kernel_apply_oracle(v, sqrt_maxwellian) == doctest::Approx(nu * sm).epsilon(1e-7));
    CHECK(kernel_apply_oracle(v, [](const Vec3& w) { return w[1] * sqrt_maxwellian(w); }) ==
          doctest::Approx(nu * v[1] * sm).epsilon(1e-7));
    double e = kernel_apply_oracle(v, [](const Vec3& w) { return dot(w, w) * sqrt_maxwellian(w); });
    CHECK(e == doctest::Approx(nu * dot(v, v) * sm).epsilon(1e-7));
  }
  Vec3 a{0.4, -1.2, 0.7}, b{-2.0, 0.3, 1.5};
  CHECK(kernel_k2(a, b) == doctest::Approx(kernel_k2(b, a)).epsilon(1e-15));
  CHECK(kernel_k1(a, b) == doctest::Approx(kernel_k1(b, a)).epsilon(1e-15));
  CHECK(std::isinf(kernel_k2(a, a)));
}

TEST_CASE("first moment frequency is odd and radial") {
  Vec3 v{0.7, -1.1, 2.0};
  auto F = first_moment_frequency(v);
  auto Fm = first_moment_frequency({-v[0], -v[1], -v[2]});
  for (int a = 0; a < 3; ++a) CHECK(Fm[a] == doctest::Approx(-F[a]).epsilon(1e-14));
  CHECK(F[0] * v[1] == doctest::Approx(F[1] * v[0]).epsilon(1e-12));
  auto Z = first_moment_frequency({0, 0, 0});
  CHECK(Z[0] == 0.0);
}

TEST_CASE("operator: null space, symmetry, positivity, parity") {
  const auto& op = shared_operator();
  const auto& g = op.grid();
  auto E = invariants(g);
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd e = E.col(k);
    CHECK(norm2(g, op.apply_L(e)) <= 1e-10 * norm2(g, op.nu().cwiseProduct(e)));
    CHECK(op.diagnostics().raw_null_defect[k] <= 1e-6);
  }
  CHECK(op.diagnostics().mass_defect <= 1e-6);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto f = random_function(g, rng), h = random_function(g, rng);
    auto Lf = op.apply_L(f), Lh = op.apply_L(h);
    CHECK(std::abs(inner(g, Lf, h) - inner(g, f, Lh)) <= 1e-10 * norm2(g, Lf) * norm2(g, h));
    CHECK(inner(g, Lf, f) >= -1e-12 * norm2(g, Lf) * norm2(g, f));
    Eigen::VectorXd fe(g.size()), fo(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      fe(i) = f(i) + f(g.mirror(i));
      fo(i) = f(i) - f(g.mirror(i));
    }
    CHECK(parity_holds(g, {op.apply_L(fe), Parity::even}));
    CHECK(parity_holds(g, {op.apply_L(fo), Parity::odd}));
  }
}

TEST_CASE("operator: inverse on the range and the spectral gap") {
  const auto& op = shared_operator();
  const auto& g = op.grid();
  auto A12 = sample_sqrt_mu(g, [](const Vec3& v) { return v[0] * v[1]; });
  auto x = op.solve_Linv(A12);
  CHECK(norm2(g, op.apply_L(x) - A12) <= 1e-10 * norm2(g, A12));
  CHECK(norm2(g, op.project_null(x)) <= 1e-12 * norm2(g, x));
  CHECK_THROWS_AS(op.solve_Linv(sample(g, sqrt_maxwellian)), std::domain_error);

  auto gap = estimate_spectral_gap(op);
  CHECK(gap.delta0 > 0);
  CHECK(gap.delta0 < 1);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    auto f = random_function(g, rng);
    f -= op.project_null(f);
    double lhs = inner(g, op.apply_L(f), f), rhs = inner(g, op.nu().cwiseProduct(f), f);
    CHECK(lhs >= gap.delta0 * rhs * (1 - 1e-8));
  }
}

TEST_CASE("operator: kernel bounds") {
  const auto& op = shared_operator();
  auto r0 = kernel_bound_check(op, 0.0);
  auto r2 = kernel_bound_check(op, 2.0);
  CHECK(std::isfinite(r0.unweighted));
  CHECK(std::isfinite(r2.weighted));
  CHECK(r0.nu_lower >= kPi * 0.99);
  CHECK(r0.nu_upper <= 2 * std::sqrt(2 * kPi));
  CHECK_THROWS(kernel_bound_check(op, -1.0));
}

TEST_CASE("operator cache: round trip and corruption") {
  const auto& op = shared_operator();
  auto dir = std::filesystem::temp_directory_path() / ("kf_cache_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto path = (dir / "op.kfop").string();
  save_operator(op, path);
  OperatorOptions o = op.options();
  auto back = load_operator(path, op.grid(), o);
  CHECK((back->K_raw() - op.K_raw()).norm() == 0.0);
  CHECK((back->nu() - op.nu()).norm() == 0.0);
  CHECK(back->has_mv());
  std::mt19937_64 rng(9);
  auto f = random_function(op.grid(), rng);
  CHECK((back->apply_L(f) - op.apply_L(f)).norm() == 0.0);

  CHECK_THROWS(load_operator(path, build_velocity_grid(16, 7.5), o));
  OperatorOptions other = o;
  other.rule.n_r += 2;
  CHECK_THROWS(load_operator(path, op.grid(), other));
  {
    std::fstream fs(path, std::ios::in | std::ios::out | std::ios::binary);
    fs.seekp(100000);
    char c = 0;
    fs.read(&c, 1);
    c ^= 0x5a;
    fs.seekp(100000);
    fs.write(&c, 1);
  }
  CHECK_THROWS_AS(load_operator(path, op.grid(), o), std::runtime_error);
  std::filesystem::resize_file(path, 5000);
  CHECK_THROWS_AS(load_operator(path, op.grid(), o), std::runtime_error);
  std::filesystem::remove_all(dir);
}

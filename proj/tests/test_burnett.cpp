#include <cmath>
#include <algorithm>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "kinfluid/burnett.hpp"
#include "kinfluid/quadrature.hpp"
#include "oracle/sonine.hpp"
#include "shared_operator.hpp"

using namespace kf;

namespace {

struct Solved {
  BurnettTensors bt;
  IsotropyReport iso;
};

const Solved& solved() {
  static Solved s = [] {
    const auto& op = shared_operator();
    Solved r{build_burnett(op.grid()), {}};
    solve_inverses(op, r.bt);
    r.iso = verify_isotropy(op, r.bt);
    return r;
  }();
  return s;
}

}  // namespace

TEST_CASE("Burnett functions are traceless and microscopic") {
  const auto& g = shared_operator().grid();
  auto bt = build_burnett(g);
  Eigen::VectorXd tr = bt.A[0][0] + bt.A[1][1] + bt.A[2][2];
  CHECK(tr.cwiseAbs().maxCoeff() < 1e-14);
  for (int i = 0; i < 3; ++i) {
    CHECK(norm2(g, project_P(g, bt.B[i]).Pg) < 1e-12 * norm2(g, bt.B[i]));
    for (int j = 0; j < 3; ++j) {
      CHECK(norm2(g, project_P(g, bt.A[i][j]).Pg) < 1e-12 * norm2(g, bt.A[i][j]));
      CHECK(bt.A[i][j] == bt.A[j][i]);
    }
  }
  CHECK_THROWS_AS(transport_coefficients(shared_operator(), bt), std::logic_error);
}

TEST_CASE("inverse solves round trip with parity") {
  const auto& op = shared_operator();
  const auto& g = op.grid();
  const auto& bt = solved().bt;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd rb = op.apply_L(bt.LinvB[i]) - bt.B[i];
    CHECK(norm2(g, rb) < 1e-9 * norm2(g, bt.B[i]));
    CHECK(parity_holds(g, {bt.LinvB[i], Parity::odd}));
    CHECK(norm2(g, op.project_null(bt.LinvB[i])) < 1e-10 * norm2(g, bt.LinvB[i]));
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd ra = op.apply_L(bt.LinvA[i][j]) - bt.A[i][j];
      CHECK(norm2(g, ra) < 1e-9 * norm2(g, bt.A[i][j]));
      CHECK(parity_holds(g, {bt.LinvA[i][j], Parity::even}));
    }
  }
  CHECK(solved().iso.symmetry_LinvA < 1e-10);
}

TEST_CASE("transport coefficients against the Sonine oracle") {
  const auto& c = solved().iso.coeffs;
  auto mo = oracle::sonine_viscosity(), ko = oracle::sonine_conductivity();
  std::printf("mu* = %.8f (Sonine %.6f)  kappa* = %.8f (Sonine %.6f)\n", c.mu_star, mo.value[2], c.kappa_star,
              ko.value[2]);
  CHECK(c.mu_star > 0);
  CHECK(c.kappa_star > 0);
  CHECK(std::abs(c.mu_star / mo.value[2] - 1) < 0.02);
  CHECK(std::abs(c.kappa_star / ko.value[2] - 1) < 0.02);
  // the variational principle: Galerkin values approach from below
  CHECK(c.mu_star >= mo.value[2] * (1 - 1e-4));
  CHECK(c.kappa_star >= ko.value[2] * (1 - 1e-4));
}

TEST_CASE("isotropy tables") {
  const auto& r = solved().iso;
  std::printf("isotropy dev AA %.3e BB %.3e AtB %.3e AB %.3e (AB scalar %.8f, spread %.3e)\n", r.dev_AA, r.dev_BB,
              r.dev_AtB, r.dev_AB, r.ab_scalar, r.ab_scalar_spread);
  CHECK(r.max_dev() <= 1e-3);
  CHECK(r.ab_scalar_spread <= 1e-3);
  auto csv = bracket_tables_csv(r);
  CHECK(csv.rfind("table,i,j,k,l,value,pattern\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 9 + 3 * 81);
}

TEST_CASE("gamma bridge") {
  const auto& op = shared_operator();
  auto br = verify_gamma_bridge(op, solved().bt);
  std::printf("bridge dev %.3e  lhs(1,1,1,1) %.8f rhs %.8f  lhs(1,2,1,2) %.8f rhs %.8f\n", br.dev, br.lhs[0],
              br.rhs[0], br.lhs[((0 * 3 + 1) * 3 + 0) * 3 + 1], br.rhs[((0 * 3 + 1) * 3 + 0) * 3 + 1]);
  CHECK(br.dev <= 1e-3);
}

TEST_CASE("super-Burnett contractions are microscopic") {
  const auto& g = shared_operator().grid();
  auto r = verify_super_burnett(g, 20, 1, 0.3);
  CHECK(r.samples == 20);
  CHECK(r.max_relative <= 1e-6);
  CHECK(r.max_absolute <= 1e-6);
  for (int w = 0; w < 5; ++w) CHECK(super_burnett(g, w, {0, 0, 0}).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(super_burnett_poly(5, {1, 0, 0}, {1, 1, 1}));

  // exact Gaussian moments against each invariant, independent 12-point rule per axis
  auto gh = gauss_hermite_prob(12);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 5; ++t) {
    Vec3 u{nd(rng), nd(rng), nd(rng)};
    for (int w = 0; w < 5; ++w) {
      double mom[5] = {}, scale = 0;
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j)
          for (int k = 0; k < 12; ++k) {
            Vec3 v{gh.x[i], gh.x[j], gh.x[k]};
            double wt = gh.w[i] * gh.w[j] * gh.w[k], p = super_burnett_poly(w, u, v);
            double inv[5] = {1, v[0], v[1], v[2], dot(v, v)};
            for (int q = 0; q < 5; ++q) mom[q] += wt * p * inv[q];
            scale += wt * p * p;
          }
      for (double x : mom) CHECK(std::abs(x) < 1e-12 * std::sqrt(scale));
    }
  }
}

#include "kinfluid/burnett.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace kf {

namespace {

double delta(int i, int j) { return i == j ? 1.0 : 0.0; }
int idx4(int i, int j, int k, int l) { return ((i * 3 + j) * 3 + k) * 3 + l; }
double iso4(int i, int j, int k, int l) {
  return delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k) - 2.0 / 3.0 * delta(i, j) * delta(k, l);
}

Eigen::VectorXd times_v(const VelocityGrid& g, int k, const Eigen::VectorXd& f) {
  Eigen::VectorXd out(f.size());
  for (std::size_t i = 0; i < g.size(); ++i) out(i) = g.nodes[i][k] * f(i);
  return out;
}

void require_solved(const BurnettTensors& bt) {
  if (!bt.solved) throw std::logic_error("Burnett inverses have not been solved");
}

}  // namespace

BurnettTensors build_burnett(const VelocityGrid& g) {
  BurnettTensors bt;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j)
      bt.A[i][j] = sample_sqrt_mu(g, [&](const Vec3& v) { return v[i] * v[j] - delta(i, j) * dot(v, v) / 3; });
    bt.B[i] = sample_sqrt_mu(g, [&](const Vec3& v) { return 0.5 * (dot(v, v) - 5) * v[i]; });
  }
  return bt;
}

void solve_inverses(const CollisionOperator& op, BurnettTensors& bt) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) bt.LinvA[i][j] = op.solve_Linv(bt.A[i][j]);
    bt.LinvB[i] = op.solve_Linv(bt.B[i]);
  }
  bt.solved = true;
}

TransportCoefficients transport_coefficients(const CollisionOperator& op, const BurnettTensors& bt) {
  require_solved(bt);
  const auto& g = op.grid();
  TransportCoefficients tc;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) tc.mu_star += inner(g, bt.LinvA[i][j], bt.A[i][j]);
    tc.kappa_star += inner(g, bt.LinvB[i], bt.B[i]);
  }
  tc.mu_star /= 10;
  tc.kappa_star /= 3;
  if (!(tc.mu_star > 0) || !(tc.kappa_star > 0))
    throw std::runtime_error("non-positive transport coefficient: discretization failure");
  return tc;
}

double IsotropyReport::max_dev() const { return std::max({dev_AA, dev_BB, dev_AtB, dev_AB}); }

IsotropyReport verify_isotropy(const CollisionOperator& op, const BurnettTensors& bt) {
  require_solved(bt);
  const auto& g = op.grid();
  IsotropyReport r;
  r.coeffs = transport_coefficients(op, bt);
  const double mu = r.coeffs.mu_star, ka = r.coeffs.kappa_star;
  r.AA.assign(81, 0);
  r.BB.assign(9, 0);
  r.AtB.assign(81, 0);
  r.AB.assign(81, 0);

  // <A_ij, v_k L^-1 B_l> and <L^-1 A_ij, v_k L^-1 B_l>
  std::vector<double> AvB(81), LAvB(81);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      Eigen::VectorXd vB = times_v(g, k, bt.LinvB[l]);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          AvB[idx4(i, j, k, l)] = inner(g, bt.A[i][j], vB);
          LAvB[idx4(i, j, k, l)] = inner(g, bt.LinvA[i][j], vB);
        }
    }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r.BB[i * 3 + j] = inner(g, bt.B[i], bt.LinvB[j]);
      r.dev_BB = std::max(r.dev_BB, std::abs(r.BB[i * 3 + j] - ka * delta(i, j)) / ka);
      r.symmetry_LinvA = std::max(r.symmetry_LinvA, norm2(g, bt.LinvA[i][j] - bt.LinvA[j][i]) /
                                                        std::max(norm2(g, bt.LinvA[i][j]), 1e-300));
      r.ab_scalar += LAvB[idx4(i, j, i, j)] / 10;
    }
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const int q = idx4(i, j, k, l);
          r.AA[q] = inner(g, bt.A[i][j], bt.LinvA[k][l]);
          r.dev_AA = std::max(r.dev_AA, std::abs(r.AA[q] - mu * iso4(i, j, k, l)) / mu);
          r.AtB[q] = AvB[q] - AvB[idx4(i, k, j, l)];
          double pat = 2.0 / 3.0 * ka * (delta(i, k) * delta(j, l) - delta(i, j) * delta(k, l));
          r.dev_AtB = std::max(r.dev_AtB, std::abs(r.AtB[q] - pat) / ka);
          r.AB[q] = LAvB[q];
          r.dev_AB = std::max(r.dev_AB, std::abs(r.AB[q] - r.ab_scalar * iso4(i, j, k, l)) / std::abs(r.ab_scalar));
          if (iso4(i, j, k, l) != 0)
            r.ab_scalar_spread = std::max(
                r.ab_scalar_spread, std::abs(r.AB[q] / iso4(i, j, k, l) - r.ab_scalar) / std::abs(r.ab_scalar));
        }
  return r;
}

BridgeReport verify_gamma_bridge(const CollisionOperator& op, const BurnettTensors& bt) {
  require_solved(bt);
  if (!op.has_mv()) throw std::logic_error("bridge check needs an operator assembled with M_v");
  const auto& g = op.grid();
  const double mu = transport_coefficients(op, bt).mu_star;
  BridgeReport r;
  r.lhs.assign(81, 0);
  r.rhs.assign(81, 0);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        Eigen::VectorXd m = op.apply_Mv(i, bt.LinvA[k][l]) + times_v(g, i, bt.A[k][l]);
        for (int j = 0; j < 3; ++j) {
          const int q = idx4(i, j, k, l);
          r.lhs[q] = inner(g, m, bt.LinvB[j]);
          r.rhs[q] = inner(g, bt.A[i][j], bt.LinvA[k][l]);
          r.dev = std::max(r.dev, std::abs(r.lhs[q] - r.rhs[q]) / mu);
        }
      }
  return r;
}

double super_burnett_poly(int which, const Vec3& u, const Vec3& v) {
  const double a = dot(u, v), uu = dot(u, u), vv = dot(v, v);
  switch (which) {
    case 0: return a * a * a - 3 * uu * a;
    case 1: return a * a * a * a - 6 * uu * a * a + 3 * uu * uu;
    case 2: return std::pow(a, 5) - 10 * uu * a * a * a + 15 * uu * uu * a;
    case 3: return 0.5 * (vv - 7) * a * a - 0.5 * (vv - 5) * uu;
    case 4: return 0.5 * (vv - 9) * a * a * a - 1.5 * uu * a * (vv - 3) + 6 * a * uu;
  }
  throw std::invalid_argument("super_burnett: index 0..4");
}

Eigen::VectorXd super_burnett(const VelocityGrid& g, int which, const Vec3& u) {
  return sample_sqrt_mu(g, [&](const Vec3& v) { return super_burnett_poly(which, u, v); });
}

SuperBurnettReport verify_super_burnett(const VelocityGrid& g, int samples, unsigned seed, double umax) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0, 1);
  SuperBurnettReport r;
  for (int s = 0; s < samples; ++s) {
    Vec3 u{nd(rng), nd(rng), nd(rng)};
    const double scale = umax * std::cbrt(ud(rng)) / std::sqrt(dot(u, u));
    for (double& c : u) c *= scale;
    for (int w = 0; w < 5; ++w) {
      Eigen::VectorXd c = super_burnett(g, w, u);
      const double pc = norm2(g, project_P(g, c).Pg), nc = norm2(g, c);
      r.max_absolute = std::max(r.max_absolute, pc);
      if (nc > 0) r.max_relative = std::max(r.max_relative, pc / nc);
    }
    ++r.samples;
  }
  return r;
}

std::string bracket_tables_csv(const IsotropyReport& rep) {
  std::ostringstream os;
  os.precision(12);
  os << "table,i,j,k,l,value,pattern\n";
  const double mu = rep.coeffs.mu_star, ka = rep.coeffs.kappa_star;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) os << "BB," << i + 1 << "," << j + 1 << ",,," << rep.BB[i * 3 + j] << ","
                                   << ka * delta(i, j) << "\n";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const int q = idx4(i, j, k, l);
          std::string ids = std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + std::to_string(k + 1) + "," +
                            std::to_string(l + 1);
          os << "AA," << ids << "," << rep.AA[q] << "," << mu * iso4(i, j, k, l) << "\n";
          os << "AtB," << ids << "," << rep.AtB[q] << ","
             << 2.0 / 3.0 * ka * (delta(i, k) * delta(j, l) - delta(i, j) * delta(k, l)) << "\n";
          os << "AB," << ids << "," << rep.AB[q] << "," << rep.ab_scalar * iso4(i, j, k, l) << "\n";
        }
  return os.str();
}

}  // namespace kf

#include "kinfluid/gamma_poly.hpp"

#include <cmath>
#include <stdexcept>

namespace kf {

namespace {

constexpr double kPi = 3.14159265358979323846;

double horner(const std::vector<double>& a, double s) {
  double r = 0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) r = r * s + *it;
  return r;
}

// m[k] = E[(q + s)^k] for s ~ chi^2 with two degrees of freedom: m_k = q^k + 2 k m_{k-1}
void plane_moments(double q, int kmax, double* m) {
  m[0] = 1;
  double qk = 1;
  for (int k = 1; k <= kmax; ++k) {
    qk *= q;
    m[k] = qk + 2 * k * m[k - 1];
  }
}

double plane_mean_m(const PolyTemplate& t, double c, const Vec3& om, const double* m) {
  const double q = c * c;
  double e0 = 0, e1 = 0;
  for (std::size_t k = 0; k < t.radial.size(); ++k) {
    e0 += t.radial[k] * m[k];
    if (t.rank == 2) e1 += t.radial[k] * (m[k + 1] - q * m[k]);
  }
  if (t.rank == 0) return e0;
  if (t.rank == 1) return e0 * c * om[t.i];
  const double d = t.i == t.j ? 1.0 : 0.0;
  const double oo = om[t.i] * om[t.j];
  return e0 * q * (oo - d / 3) + e1 * (0.5 * (d - oo) - d / 3);
}

}  // namespace

PolyTemplate PolyTemplate::scalar(std::vector<double> a) { return {std::move(a), 0, 0, 0}; }
PolyTemplate PolyTemplate::vector(int i, std::vector<double> a) { return {std::move(a), 1, i, 0}; }
PolyTemplate PolyTemplate::traceless(int i, int j, std::vector<double> a) { return {std::move(a), 2, i, j}; }

double PolyTemplate::poly(const Vec3& v) const {
  const double s = dot(v, v);
  const double a = horner(radial, s);
  if (rank == 0) return a;
  if (rank == 1) return a * v[i];
  return a * (v[i] * v[j] - (i == j ? s / 3 : 0.0));
}

double PolyTemplate::plane_mean(double c, const Vec3& omega) const {
  std::vector<double> m(radial.size() + 2);
  plane_moments(c * c, int(radial.size()) + 1, m.data());
  return plane_mean_m(*this, c, omega, m.data());
}

GammaTable::GammaTable(const VelocityGrid& g, std::vector<PolyTemplate> T, std::vector<PolyTemplate> S,
                       const CollisionRuleOptions& rule)
    : T_(std::move(T)), S_(std::move(S)) {
  const double t0 = wall_seconds();
  const std::size_t N = g.size();
  const int K = rows(), J = cols();
  if (K == 0 || J == 0) throw std::invalid_argument("GammaTable: empty template list");
  int kmax = 1;
  for (const auto& t : T_) kmax = std::max(kmax, int(t.radial.size()) + 1);

  Tv_.resize(N, K);
  Sv_.resize(N, J);
  nuT_.resize(N, K);
  nuS_.resize(N, J);
  gain_.resize(N);
  const double c2 = 0.5 * std::sqrt(2 / kPi);
  std::vector<CollisionPoint> pts;
  std::vector<double> m(kmax + 1);
  Eigen::MatrixXd ET, SX, TX;
  Eigen::VectorXd lw;

  for (std::size_t i = 0; i < N; ++i) {
    const Vec3& v = g.nodes[i];
    for (int k = 0; k < K; ++k) Tv_(i, k) = T_[k](v);
    for (int j = 0; j < J; ++j) Sv_(i, j) = S_[j](v);
    collision_points(v, rule, pts);
    const Eigen::Index Nq = pts.size();
    ET.resize(Nq, K);
    TX.resize(Nq, K);
    SX.resize(Nq, J);
    lw.resize(Nq);
    for (Eigen::Index q = 0; q < Nq; ++q) {
      const auto& p = pts[q];
      Vec3 x{v[0] - p.r * p.omega[0], v[1] - p.r * p.omega[1], v[2] - p.r * p.omega[2]};
      const double sx = sqrt_maxwellian(x);
      const double kern = p.weight * c2 * p.r * std::exp(-0.25 * (p.r - p.c) * (p.r - p.c) - 0.25 * p.c * p.c);
      lw(q) = p.weight * kPi * p.r * p.r * p.r * sx;
      plane_moments(p.c * p.c, kmax, m.data());
      for (int k = 0; k < K; ++k) {
        ET(q, k) = kern * plane_mean_m(T_[k], p.c, p.omega, m.data());
        TX(q, k) = T_[k].poly(x) * sx;
      }
      for (int j = 0; j < J; ++j) SX(q, j) = S_[j].poly(x) * sx;
    }
    gain_[i] = ET.transpose() * SX;
    nuT_.row(i) = lw.transpose() * TX;
    nuS_.row(i) = lw.transpose() * SX;
  }
  seconds_ = wall_seconds() - t0;
}

Eigen::VectorXd GammaTable::gamma(int k, int j) const {
  Eigen::VectorXd out(Tv_.rows());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = gain_[i](k, j) - Tv_(i, k) * nuS_(i, j);
  return out;
}

Eigen::VectorXd GammaTable::gamma_rev(int k, int j) const {
  Eigen::VectorXd out(Tv_.rows());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = gain_[i](k, j) - Sv_(i, j) * nuT_(i, k);
  return out;
}

namespace {

// G-space interpolant at x; zero outside the box
double interpolate(const VelocityGrid& g, const Eigen::VectorXd& f, const Vec3& x, double* wa, double* wb,
                   double* wc) {
  if (!g.axis_weights(x[0], wa) || !g.axis_weights(x[1], wb) || !g.axis_weights(x[2], wc)) return 0;
  const int n = g.n;
  double s = 0;
  for (int a = 0; a < n; ++a) {
    double sa = 0;
    for (int b = 0; b < n; ++b) {
      const double* row = f.data() + g.index(a, b, 0);
      double sb = 0;
      for (int c = 0; c < n; ++c) sb += wc[c] * row[c];
      sa += wb[b] * sb;
    }
    s += wa[a] * sa;
  }
  return s;
}

}  // namespace

Eigen::VectorXd gamma_grid(const VelocityGrid& grid, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                           const GammaGridRule& rule) {
  if (g.size() != Eigen::Index(grid.size()) || h.size() != Eigen::Index(grid.size()))
    throw std::invalid_argument("gamma_grid: grid mismatch");
  const int n = grid.n;
  std::vector<double> wa(n), wb(n), wc(n);
  // v* = sqrt2 y with y Gauss-Hermite (probabilists'): int F(v*) sqrt(mu(v*)) dv* = c0 sum w F
  const Rule1D gh = gauss_hermite_prob(rule.v_points);
  const Rule1D gc = gauss_legendre(rule.cos_points, 0.0, 1.0);
  const double c0 = std::pow(2.0, 1.5) * std::pow(2 * kPi, 0.75);
  std::vector<Vec3> vs;
  std::vector<double> ws, hs;
  for (int a = 0; a < rule.v_points; ++a)
    for (int b = 0; b < rule.v_points; ++b)
      for (int c = 0; c < rule.v_points; ++c) {
        Vec3 y{std::sqrt(2.0) * gh.x[a], std::sqrt(2.0) * gh.x[b], std::sqrt(2.0) * gh.x[c]};
        vs.push_back(y);
        ws.push_back(c0 * gh.w[a] * gh.w[b] * gh.w[c]);
        hs.push_back(interpolate(grid, h, y, wa.data(), wb.data(), wc.data()));
      }
  std::vector<double> cphi(rule.phi_points), sphi(rule.phi_points);
  for (int p = 0; p < rule.phi_points; ++p) {
    cphi[p] = std::cos(2 * kPi * (p + 0.5) / rule.phi_points);
    sphi[p] = std::sin(2 * kPi * (p + 0.5) / rule.phi_points);
  }
  const double wphi = 2 * kPi / rule.phi_points;

  Eigen::VectorXd out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3& v = grid.nodes[i];
    double acc = 0;
    for (std::size_t q = 0; q < vs.size(); ++q) {
      Vec3 z{v[0] - vs[q][0], v[1] - vs[q][1], v[2] - vs[q][2]};
      const double rz = std::sqrt(dot(z, z));
      if (rz < 1e-14) continue;
      Vec3 e3{z[0] / rz, z[1] / rz, z[2] / rz};
      Vec3 t0 = std::abs(e3[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
      double pr = dot(t0, e3);
      Vec3 e1{t0[0] - pr * e3[0], t0[1] - pr * e3[1], t0[2] - pr * e3[2]};
      double n1 = std::sqrt(dot(e1, e1));
      for (double& c : e1) c /= n1;
      Vec3 e2{e3[1] * e1[2] - e3[2] * e1[1], e3[2] * e1[0] - e3[0] * e1[2], e3[0] * e1[1] - e3[1] * e1[0]};
      double gain = 0;
      for (std::size_t a = 0; a < gc.x.size(); ++a) {
        const double t = gc.x[a], st = std::sqrt(1 - t * t), zo = rz * t;
        for (int p = 0; p < rule.phi_points; ++p) {
          Vec3 om;
          for (int k = 0; k < 3; ++k) om[k] = t * e3[k] + st * (cphi[p] * e1[k] + sphi[p] * e2[k]);
          Vec3 vp{v[0] - zo * om[0], v[1] - zo * om[1], v[2] - zo * om[2]};
          Vec3 vsp{vs[q][0] + zo * om[0], vs[q][1] + zo * om[1], vs[q][2] + zo * om[2]};
          double gv = interpolate(grid, g, vp, wa.data(), wb.data(), wc.data());
          if (gv == 0) continue;
          gain += gc.w[a] * wphi * zo * gv * interpolate(grid, h, vsp, wa.data(), wb.data(), wc.data());
        }
      }
      acc += ws[q] * (gain - g(i) * hs[q] * kPi * rz);
    }
    out(i) = acc;
  }
  return out;
}

std::vector<PolyTemplate> macro_templates() {
  return {PolyTemplate::scalar({1}), PolyTemplate::vector(0), PolyTemplate::vector(1), PolyTemplate::vector(2),
          PolyTemplate::scalar({0, 1})};
}

std::vector<PolyTemplate> macro_square_templates() {
  auto t = macro_templates();
  for (auto [i, j] : {std::pair{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}}) t.push_back(PolyTemplate::traceless(i, j));
  for (int i = 0; i < 3; ++i) t.push_back(PolyTemplate::vector(i, {0, 1}));
  t.push_back(PolyTemplate::scalar({0, 0, 1}));
  return t;
}

Eigen::VectorXd macro_coefficients(const MacroTriple& m) {
  Eigen::VectorXd c(5);
  c << m.rho - 1.5 * m.theta, m.u[0], m.u[1], m.u[2], 0.5 * m.theta;
  return c;
}

Eigen::VectorXd macro_square_coefficients(const MacroTriple& m) {
  // p = c0 + u.v + c4 |v|^2, (u.v)^2 = u_a u_b A_ab + |u|^2 |v|^2 / 3, A_33 = -A_11 - A_22
  const double c0 = m.rho - 1.5 * m.theta, c4 = 0.5 * m.theta;
  const Vec3& u = m.u;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(14);
  d(0) = c0 * c0;
  for (int a = 0; a < 3; ++a) d(1 + a) = 2 * c0 * u[a];
  d(4) = 2 * c0 * c4 + dot(u, u) / 3;
  d(5) = u[0] * u[0] - u[2] * u[2];
  d(6) = 2 * u[0] * u[1];
  d(7) = 2 * u[0] * u[2];
  d(8) = u[1] * u[1] - u[2] * u[2];
  d(9) = 2 * u[1] * u[2];
  for (int a = 0; a < 3; ++a) d(10 + a) = 2 * c4 * u[a];
  d(13) = c4 * c4;
  return d;
}

GammaIdentityReport check_gamma_identities(const CollisionOperator& op, const GammaTable& table,
                                           const std::vector<MacroTriple>& states) {
  if (table.rows() != 5 || table.cols() != 14)
    throw std::invalid_argument("check_gamma_identities: table must span the macroscopic templates");
  const auto& g = op.grid();
  GammaIdentityReport rep;
  for (const auto& m : states) {
    const Eigen::VectorXd c = macro_coefficients(m), d = macro_square_coefficients(m);
    Eigen::VectorXd lhs1 = Eigen::VectorXd::Zero(g.size()), lhs2 = Eigen::VectorXd::Zero(g.size());
    for (int k = 0; k < 5; ++k) {
      for (int l = 0; l < 5; ++l) lhs1 += 0.5 * c(k) * c(l) * table.sym(k, l);
      for (int j = 0; j < 14; ++j)
        if (d(j) != 0) lhs2 += c(k) * d(j) * table.sym(k, j);
    }
    auto p = [&](const Vec3& v) { return m.rho + dot(m.u, v) + 0.5 * m.theta * (dot(v, v) - 3); };
    Eigen::VectorXd rhs1 = 0.5 * op.apply_L(sample_sqrt_mu(g, [&](const Vec3& v) { return p(v) * p(v); }));
    Eigen::VectorXd rhs2 =
        op.apply_L(sample_sqrt_mu(g, [&](const Vec3& v) { return p(v) * p(v) * p(v); })) / 3.0;
    const double n1 = norm2(g, rhs1), n2 = norm2(g, rhs2);
    if (n1 > 0) rep.first = std::max(rep.first, norm2(g, lhs1 - rhs1) / n1);
    if (n2 > 0) rep.second = std::max(rep.second, norm2(g, lhs2 - rhs2) / n2);
    ++rep.states;
  }
  return rep;
}

}  // namespace kf

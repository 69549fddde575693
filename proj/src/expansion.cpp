#include "kinfluid/expansion.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kf {

namespace {

const double kPi = 3.14159265358979323846;
const std::array<std::array<int, 2>, 5> kTraceless{{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}}};

ScalarField spectral_derivative(const Torus& t, const ScalarField& f, int a) {
  ScalarField out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = cplx(0, double(t.mode(k)[a])) * f[k];
  return out;
}

Eigen::VectorXd times_v(const VelocityGrid& g, int k, const Eigen::VectorXd& f) {
  Eigen::VectorXd out(f.size());
  for (std::size_t i = 0; i < g.size(); ++i) out(i) = g.nodes[i][k] * f(i);
  return out;
}

std::vector<double> zeros(const Torus& t) { return std::vector<double>(t.real_size(), 0.0); }

// coefficients over the five traceless templates of sum_ij Y_ij A_ij, Y symmetric
std::array<double, 5> traceless_coeffs(const double Y[3][3]) {
  return {Y[0][0] - Y[2][2], 2 * Y[0][1], 2 * Y[0][2], Y[1][1] - Y[2][2], 2 * Y[1][2]};
}

}  // namespace

Eigen::VectorXd SeparableField::at(std::size_t r) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(velocity_size());
  for (const auto& tm : terms)
    if (tm.spatial[r] != 0) out += tm.spatial[r] * tm.velocity;
  return out;
}

PhysicalFields physical_fields(const Torus& t, const MacroState& st) {
  PhysicalFields p;
  const int d = t.dim();
  for (int i = 0; i < 3; ++i) {
    p.u[i] = i < d ? to_physical(t, st.u[i]) : zeros(t);
    for (int j = 0; j < 3; ++j)
      p.grad[i][j] = (i < d && j < d) ? to_physical(t, spectral_derivative(t, st.u[i], j)) : zeros(t);
  }
  p.rho = to_physical(t, st.rho);
  p.theta = to_physical(t, st.theta);
  return p;
}

SeparableField build_f1(const Torus& t, const MacroState& st, const VelocityGrid& g) {
  SeparableField f;
  f.parity = Parity::odd;
  auto p = physical_fields(t, st);
  for (int i = 0; i < t.dim(); ++i)
    f.terms.push_back({p.u[i], sample_sqrt_mu(g, [i](const Vec3& v) { return v[i]; })});
  return f;
}

namespace {

// spatial coefficients of f2 over [sqrt(mu), (|v|^2-3) sqrt(mu), L^-1 A_ij (9), A_ij (9)]
struct F2Coeffs {
  std::vector<double> rho, c;
  std::array<std::array<std::vector<double>, 3>, 3> linv, a;
};

F2Coeffs f2_coeffs(const Torus& t, const PhysicalFields& p, bool drop_linv_a) {
  F2Coeffs f;
  const std::size_t n = t.real_size();
  f.rho = p.rho;
  f.c.resize(n);
  for (std::size_t r = 0; r < n; ++r)
    f.c[r] = (p.u[0][r] * p.u[0][r] + p.u[1][r] * p.u[1][r] + p.u[2][r] * p.u[2][r] + 3 * p.theta[r]) / 6;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      f.linv[i][j].resize(n);
      f.a[i][j].resize(n);
      for (std::size_t r = 0; r < n; ++r) {
        f.linv[i][j][r] = drop_linv_a ? 0.0 : -p.grad[i][j][r];
        f.a[i][j][r] = 0.5 * p.u[i][r] * p.u[j][r];
      }
    }
  return f;
}

// d_k of the f2 coefficients (product rule for the quadratic ones, spectral for the rest)
F2Coeffs f2_coeff_derivative(const Torus& t, const MacroState& st, const PhysicalFields& p, int k,
                             bool drop_linv_a) {
  F2Coeffs f;
  const std::size_t n = t.real_size();
  const int d = t.dim();
  f.rho = k < d ? to_physical(t, spectral_derivative(t, st.rho, k)) : zeros(t);
  auto dth = k < d ? to_physical(t, spectral_derivative(t, st.theta, k)) : zeros(t);
  f.c.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 3 * dth[r];
    for (int l = 0; l < 3; ++l) s += 2 * p.u[l][r] * p.grad[l][k][r];
    f.c[r] = s / 6;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (!drop_linv_a && i < d && j < d && k < d) {
        f.linv[i][j] = to_physical(t, spectral_derivative(t, spectral_derivative(t, st.u[i], j), k));
        for (double& x : f.linv[i][j]) x = -x;
      } else {
        f.linv[i][j] = zeros(t);
      }
      f.a[i][j].resize(n);
      for (std::size_t r = 0; r < n; ++r)
        f.a[i][j][r] = 0.5 * (p.grad[i][k][r] * p.u[j][r] + p.u[i][r] * p.grad[j][k][r]);
    }
  return f;
}

struct F2Velocity {
  Eigen::VectorXd s0, s1;
  Tensor2 linv, a;
};

F2Velocity f2_velocity(const VelocityGrid& g, const BurnettTensors& bt) {
  F2Velocity v;
  v.s0 = sample(g, sqrt_maxwellian);
  v.s1 = sample_sqrt_mu(g, [](const Vec3& x) { return dot(x, x) - 3; });
  v.linv = bt.LinvA;
  v.a = bt.A;
  return v;
}

template <class Fn>
void for_each_f2_term(const F2Coeffs& c, const F2Velocity& v, Fn fn) {
  fn(c.rho, v.s0);
  fn(c.c, v.s1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      fn(c.linv[i][j], v.linv[i][j]);
      fn(c.a[i][j], v.a[i][j]);
    }
}

bool all_zero(const std::vector<double>& x) {
  for (double y : x)
    if (y != 0) return false;
  return true;
}

void require_solved(const BurnettTensors& bt) {
  if (!bt.solved) throw std::logic_error("expansion: Burnett inverses have not been solved");
}

}  // namespace

SeparableField build_f2(const Torus& t, const MacroState& st, const BurnettTensors& bt, const VelocityGrid& g,
                        bool drop_linv_a) {
  require_solved(bt);
  SeparableField f;
  f.parity = Parity::even;
  auto p = physical_fields(t, st);
  auto c = f2_coeffs(t, p, drop_linv_a);
  for_each_f2_term(c, f2_velocity(g, bt), [&](const std::vector<double>& s, const Eigen::VectorXd& v) {
    if (!all_zero(s)) f.terms.push_back({s, v});
  });
  return f;
}

SeparableField streaming_f2(const Torus& t, const MacroState& st, const BurnettTensors& bt, const VelocityGrid& g) {
  require_solved(bt);
  SeparableField f;
  f.parity = Parity::odd;
  auto p = physical_fields(t, st);
  auto vel = f2_velocity(g, bt);
  for (int k = 0; k < t.dim(); ++k) {
    auto dc = f2_coeff_derivative(t, st, p, k, false);
    for_each_f2_term(dc, vel, [&](const std::vector<double>& s, const Eigen::VectorXd& v) {
      if (!all_zero(s)) f.terms.push_back({s, times_v(g, k, v)});
    });
  }
  return f;
}

SeparableField build_f3_micro(const Torus& t, const MacroState& st, const BurnettTensors& bt,
                              const CollisionOperator& op) {
  require_solved(bt);
  if (!op.has_mv()) throw std::logic_error("build_f3_micro needs an operator assembled with M_v");
  const auto& g = op.grid();
  auto p = physical_fields(t, st);
  std::vector<SeparableTerm> arg;
  for (auto& tm : streaming_f2(t, st, bt, g).terms) arg.push_back({tm.spatial, -tm.velocity});
  auto c = f2_coeffs(t, p, false);
  auto vel = f2_velocity(g, bt);
  for (int i = 0; i < t.dim(); ++i)
    for_each_f2_term(c, vel, [&](const std::vector<double>& s, const Eigen::VectorXd& v) {
      std::vector<double> prod(s.size());
      for (std::size_t r = 0; r < s.size(); ++r) prod[r] = p.u[i][r] * s[r];
      if (!all_zero(prod)) arg.push_back({prod, op.apply_Mv(i, v)});
    });
  SeparableField f;
  f.parity = Parity::odd;
  for (auto& tm : arg) {
    Eigen::VectorXd h = tm.velocity - op.project_null(tm.velocity);
    // arguments lying in N(L) (e.g. v_k sqrt(mu) from grad rho) leave only round-off
    if (norm2(g, h) <= 1e-12 * norm2(g, tm.velocity)) continue;
    f.terms.push_back({tm.spatial, op.solve_Linv(h)});
  }
  return f;
}

HierarchyReport hierarchy_check(const Torus& t, const MacroState& st, const BurnettTensors& bt,
                                const CollisionOperator& op) {
  require_solved(bt);
  if (!op.has_mv()) throw std::logic_error("hierarchy_check needs an operator assembled with M_v");
  const auto& g = op.grid();
  auto p = physical_fields(t, st);
  auto f2 = build_f2(t, st, bt, g);
  std::vector<Eigen::VectorXd> Lf2;
  for (const auto& tm : f2.terms) Lf2.push_back(op.apply_L(tm.velocity));
  Eigen::VectorXd vv[3][3], mv[3][3], s0 = sample(g, sqrt_maxwellian);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      vv[i][k] = sample_sqrt_mu(g, [i, k](const Vec3& v) { return v[i] * v[k]; });
      mv[i][k] = op.apply_Mv(i, sample_sqrt_mu(g, [k](const Vec3& v) { return v[k]; }));
    }
  HierarchyReport rep;
  for (std::size_t r = 0; r < t.real_size(); ++r) {
    Eigen::VectorXd stream = Eigen::VectorXd::Zero(g.size()), gam = stream, res;
    double div = 0;
    for (int i = 0; i < 3; ++i) {
      div += p.grad[i][i][r];
      for (int k = 0; k < 3; ++k) {
        stream += p.grad[i][k][r] * vv[k][i];
        gam += 0.5 * p.u[i][r] * p.u[k][r] * mv[i][k];
      }
    }
    res = stream - gam;
    for (std::size_t q = 0; q < f2.terms.size(); ++q) res += f2.terms[q].spatial[r] * Lf2[q];
    const double nr = norm2(g, res), scale = norm2(g, stream) + norm2(g, gam);
    rep.max_absolute = std::max(rep.max_absolute, nr);
    if (scale > 0) rep.max_relative = std::max(rep.max_relative, nr / scale);
    rep.macro_mismatch = std::max(rep.macro_mismatch, std::abs(inner(g, res, s0) - div));
    rep.max_divergence = std::max(rep.max_divergence, std::abs(div));
  }
  return rep;
}

void fit_residual(ResidualReport& rep) {
  if (rep.eps.size() < 3) throw std::invalid_argument("residual fit needs at least 3 eps values");
  for (std::size_t i = 1; i < rep.eps.size(); ++i)
    if (!(rep.eps[i] < rep.eps[i - 1])) throw std::invalid_argument("eps values must be strictly decreasing");
  const auto& y = rep.fitted_norm == "sup" ? rep.sup : rep.l2;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.eps.size(); ++i) {
    if (!(y[i] > 0)) {
      rep.slope = rep.intercept = rep.r2 = 0;
      return;
    }
    lx.push_back(std::log(rep.eps[i]));
    ly.push_back(std::log(y[i]));
  }
  auto f = fit_line(lx, ly);
  rep.slope = f.slope;
  rep.intercept = f.intercept;
  rep.r2 = f.r2;
}

ResidualReport maxwellian_expansion_check(const VelocityGrid& g, const MacroTriple& m,
                                          const std::vector<double>& eps, int order) {
  if (order != 2 && order != 3) throw std::invalid_argument("maxwellian_expansion_check: order 2 or 3");
  ResidualReport rep;
  rep.eps = eps;
  rep.fitted_norm = "sup";
  rep.target_slope = order + 1;
  rep.normalization = "max over grid nodes of |M_eps(v) - mu(v) (1 + sum_k<=order eps^k b_k(v))|";
  const Vec3& u = m.u;
  const double uu = dot(u, u);
  for (double e : eps) {
    double sup = 0, l2 = 0;
    const double rho = 1 + e * e * m.rho, th = 1 + e * e * m.theta;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3& v = g.nodes[i];
      const Vec3 w{v[0] - e * u[0], v[1] - e * u[1], v[2] - e * u[2]};
      const double M = rho / std::pow(2 * kPi * th, 1.5) * std::exp(-dot(w, w) / (2 * th));
      const double uv = dot(u, v), vv = dot(v, v);
      double b = 1 + e * uv;
      b += e * e * (m.rho + (uu + 3 * m.theta) * (vv - 3) / 6 + 0.5 * (uv * uv - uu * vv / 3));
      if (order == 3)
        b += e * e * e * (m.rho * uv + m.theta * uv * (vv - 5) / 2 + (uv * uv * uv - 3 * uu * uv) / 6);
      const double r = M - maxwellian(v) * b;
      sup = std::max(sup, std::abs(r));
      l2 += g.weights[i] * r * r / maxwellian(v);
    }
    rep.sup.push_back(sup);
    rep.l2.push_back(std::sqrt(l2));
  }
  fit_residual(rep);
  return rep;
}

F2Gamma build_f2_gamma(const CollisionOperator& op, const BurnettTensors& bt, int degree,
                       const CollisionRuleOptions& rule) {
  require_solved(bt);
  const auto& g = op.grid();
  F2Gamma f;
  Eigen::MatrixXd X(g.size(), degree + 1);
  Eigen::VectorXd y(g.size());
  const double sc = 10;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& v = g.nodes[i];
    const double sw = std::sqrt(g.weights[i]), s = dot(v, v), base = v[0] * v[1] * sqrt_maxwellian(v);
    for (int k = 0; k <= degree; ++k) X(i, k) = sw * std::pow(s / sc, k) * base;
    y(i) = sw * bt.LinvA[0][1](i);
  }
  Eigen::VectorXd c = X.colPivHouseholderQr().solve(y);
  f.fit_residual = (X * c - y).norm() / y.norm();
  for (int k = 0; k <= degree; ++k) f.alpha.push_back(c(k) / std::pow(sc, k));
  f.templates.push_back(PolyTemplate::scalar({1.0}));
  f.templates.push_back(PolyTemplate::scalar({-3.0, 1.0}));
  for (auto [i, j] : kTraceless) f.templates.push_back(PolyTemplate::traceless(i, j));
  for (auto [i, j] : kTraceless) f.templates.push_back(PolyTemplate::traceless(i, j, f.alpha));
  f.table = std::make_unique<GammaTable>(g, f.templates, f.templates, rule);
  return f;
}

std::vector<MacroState> snapshot_series(const InsfSolver& solver, MacroState st, double h, int substeps) {
  std::vector<MacroState> out{st};
  for (int j = 1; j < 5; ++j) {
    for (int s = 0; s < substeps; ++s) solver.step(st, h / substeps);
    out.push_back(st);
  }
  return out;
}

ResidualReport hierarchy_residual_scan(const Torus& t, const std::vector<MacroState>& snaps, double h,
                                       const CollisionOperator& op, const BurnettTensors& bt, const F2Gamma& f2g,
                                       const std::vector<double>& eps, bool break_f2) {
  require_solved(bt);
  if (snaps.size() != 5) throw std::invalid_argument("hierarchy_residual_scan: five snapshots required");
  if (!op.has_mv()) throw std::logic_error("hierarchy_residual_scan needs an operator assembled with M_v");
  const auto& g = op.grid();
  const std::size_t nv = g.size(), nx = t.real_size();
  const MacroState& st = snaps[2];
  ResidualReport rep;
  rep.eps = eps;
  rep.fitted_norm = "l2";
  rep.target_slope = break_f2 ? 1.0 : 2.0;
  rep.normalization =
      "R = (eps dF/dt + v.grad F - Q(F,F)/eps) / (eps sqrt(mu)), F = mu + eps sqrt(mu) (f1 + eps f2); "
      "l2 over torus x velocity grid, sup over all nodes";

  // time derivatives of the spatial coefficients, fourth-order central differences
  std::vector<PhysicalFields> pf;
  std::vector<F2Coeffs> cf;
  for (const auto& s : snaps) {
    pf.push_back(physical_fields(t, s));
    cf.push_back(f2_coeffs(t, pf.back(), break_f2));
  }
  auto ddt = [&](auto get) {
    std::vector<double> out(nx);
    const auto &a = get(0), &b = get(1), &c = get(3), &d = get(4);
    for (std::size_t r = 0; r < nx; ++r) out[r] = (a[r] - 8 * b[r] + 8 * c[r] - d[r]) / (12 * h);
    return out;
  };
  std::array<std::vector<double>, 3> du;
  for (int i = 0; i < 3; ++i) du[i] = ddt([&](int s) -> const std::vector<double>& { return pf[s].u[i]; });
  F2Coeffs dc;
  dc.rho = ddt([&](int s) -> const std::vector<double>& { return cf[s].rho; });
  dc.c = ddt([&](int s) -> const std::vector<double>& { return cf[s].c; });
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      dc.linv[i][j] = ddt([&](int s) -> const std::vector<double>& { return cf[s].linv[i][j]; });
      dc.a[i][j] = ddt([&](int s) -> const std::vector<double>& { return cf[s].a[i][j]; });
    }
  const PhysicalFields& p = pf[2];
  const F2Coeffs& c = cf[2];
  std::array<F2Coeffs, 3> gc;
  for (int k = 0; k < 3; ++k) gc[k] = f2_coeff_derivative(t, st, p, k, break_f2);

  // velocity-side precomputation: ordered like for_each_f2_term
  auto vel = f2_velocity(g, bt);
  std::vector<Eigen::VectorXd> T, LT;
  std::array<std::vector<Eigen::VectorXd>, 3> vT, MT;
  for_each_f2_term(c, vel, [&](const std::vector<double>&, const Eigen::VectorXd& v) { T.push_back(v); });
  for (const auto& v : T) {
    LT.push_back(op.apply_L(v));
    for (int k = 0; k < 3; ++k) {
      vT[k].push_back(times_v(g, k, v));
      MT[k].push_back(op.apply_Mv(k, v));
    }
  }
  const std::size_t nt = T.size();
  Eigen::VectorXd V[3], VV[3][3], MV[3][3];
  for (int i = 0; i < 3; ++i) V[i] = sample_sqrt_mu(g, [i](const Vec3& v) { return v[i]; });
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      VV[i][k] = times_v(g, k, V[i]);
      MV[i][k] = op.apply_Mv(i, V[k]);
    }
  const auto& tab = *f2g.table;
  const int K = tab.rows();
  Eigen::MatrixXd Gm(nv, K * K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) Gm.col(k * K + l) = tab.gamma(k, l);

  auto coeff_list = [&](const F2Coeffs& f, std::size_t r) {
    std::vector<double> out;
    for_each_f2_term(f, vel, [&](const std::vector<double>& s, const Eigen::VectorXd&) { out.push_back(s[r]); });
    return out;
  };

  const double dV = t.volume() / nx;
  std::vector<double> l2(eps.size(), 0.0), sup(eps.size(), 0.0);
  for (std::size_t r = 0; r < nx; ++r) {
    auto a = coeff_list(c, r), at = coeff_list(dc, r);
    Eigen::VectorXd R1 = Eigen::VectorXd::Zero(nv), R2 = R1, R3 = R1;
    for (int i = 0; i < 3; ++i) {
      R2 += du[i][r] * V[i];
      for (int k = 0; k < 3; ++k) {
        R1 += p.grad[i][k][r] * VV[i][k];
        R1 -= 0.5 * p.u[i][r] * p.u[k][r] * MV[i][k];
      }
    }
    for (std::size_t q = 0; q < nt; ++q) {
      if (a[q] != 0) R1 += a[q] * LT[q];
      if (at[q] != 0) R3 += at[q] * T[q];
    }
    for (int k = 0; k < 3; ++k) {
      auto ak = coeff_list(gc[k], r);
      for (std::size_t q = 0; q < nt; ++q) {
        if (ak[q] != 0) R2 += ak[q] * vT[k][q];
        if (a[q] != 0 && p.u[k][r] != 0) R2 -= p.u[k][r] * a[q] * MT[k][q];
      }
    }
    // Gamma(f2, f2) over the templates: Y_A = (1/2) u u, Y_alphaA = -grad u (symmetrized)
    double YA[3][3], YL[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        YA[i][j] = 0.5 * p.u[i][r] * p.u[j][r];
        YL[i][j] = break_f2 ? 0.0 : -0.5 * (p.grad[i][j][r] + p.grad[j][i][r]);
      }
    Eigen::VectorXd b(K);
    b(0) = c.rho[r];
    b(1) = c.c[r];
    auto ca = traceless_coeffs(YA), cl = traceless_coeffs(YL);
    for (int q = 0; q < 5; ++q) {
      b(2 + q) = ca[q];
      b(7 + q) = cl[q];
    }
    Eigen::VectorXd bb(K * K);
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) bb(k * K + l) = b(k) * b(l);
    R3 -= Gm * bb;
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const double x = eps[e];
      Eigen::VectorXd R = x * R1 + x * x * R2 + x * x * x * R3;
      l2[e] += dV * inner(g, R, R);
      sup[e] = std::max(sup[e], R.cwiseAbs().maxCoeff());
    }
  }
  for (double& x : l2) x = std::sqrt(x);
  rep.l2 = l2;
  rep.sup = sup;
  fit_residual(rep);
  return rep;
}

double ConservationCheckReport::max_abs() const {
  double m = std::max({std::abs(rho), std::abs(constraint), std::abs(momentum[0]), std::abs(momentum[1]),
                       std::abs(momentum[2])});
  for (int k = 0; k < 5; ++k) m = std::max({m, std::abs(f1[k]), std::abs(f2[k])});
  return m;
}

ConservationCheckReport conservation_check(const Torus& t, const MacroState& st, const ExpansionCoefficients& c,
                                           const VelocityGrid& g) {
  ConservationCheckReport rep;
  const double dV = t.volume() / t.real_size();
  Eigen::VectorXd basis[5] = {sample(g, sqrt_maxwellian), sample_sqrt_mu(g, [](const Vec3& v) { return v[0]; }),
                              sample_sqrt_mu(g, [](const Vec3& v) { return v[1]; }),
                              sample_sqrt_mu(g, [](const Vec3& v) { return v[2]; }),
                              sample_sqrt_mu(g, [](const Vec3& v) { return dot(v, v) - 3; })};
  auto moments = [&](const SeparableField& f, std::array<double, 5>& out) {
    for (const auto& tm : f.terms) {
      double s = 0;
      for (double x : tm.spatial) s += x;
      s *= dV;
      for (int k = 0; k < 5; ++k) out[k] += s * inner(g, tm.velocity, basis[k]);
    }
  };
  moments(c.f1, rep.f1);
  moments(c.f2, rep.f2);
  auto cd = conserved_diagnostics(t, st);
  rep.rho = cd.mass;
  rep.constraint = cd.constraint;
  rep.momentum = cd.momentum;
  return rep;
}

std::string residual_csv(const ResidualReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "eps,l2,sup\n";
  for (std::size_t i = 0; i < r.eps.size(); ++i) os << r.eps[i] << "," << r.l2[i] << "," << r.sup[i] << "\n";
  return os.str();
}

}  // namespace kf

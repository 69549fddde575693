#include "kinfluid/collision_operator.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unistd.h>

namespace kf {

namespace {

constexpr double kPi = 3.14159265358979323846;

// composite Gauss-Legendre over [0, s + 12] for radial moments
template <class F>
double radial_integral(double s, F&& f) {
  static const Rule1D g = gauss_legendre(16);
  const double hi = s + 12.0;
  const int panels = int(std::ceil(hi / 1.5));
  double acc = 0;
  for (int p = 0; p < panels; ++p) {
    double a = hi * p / panels, b = hi * (p + 1) / panels;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      double r = a + 0.5 * (b - a) * (g.x[i] + 1);
      acc += 0.5 * (b - a) * g.w[i] * f(r);
    }
  }
  return acc;
}

// int_{-1}^{1} t^k e^{a t} dt * e^{-|a|}, k = 0, 1, for a >= 0 (scaled to avoid overflow)
double scaled_J(int k, double a) {
  if (a < 0.5) {
    // series; multiply by e^{-a} at the end
    double term = 1, s = 0;
    for (int m = 0; m < 14; ++m) {
      if (m > 0) term *= a / m;
      if ((m + k) % 2 == 0) s += term * 2.0 / (m + k + 1);
    }
    return s * std::exp(-a);
  }
  double em = std::exp(-2 * a);
  if (k == 0) return (1 - em) / a;
  return ((a - 1) + em * (a + 1)) / (a * a);
}

struct NodeAction {
  // for each group element, image of each node index
  std::vector<std::vector<std::uint32_t>> img;
};

NodeAction node_action(const VelocityGrid& g) {
  const auto& G = octahedral_group();
  const int n = g.n;
  NodeAction act;
  act.img.resize(G.size());
  for (std::size_t e = 0; e < G.size(); ++e) {
    auto& im = act.img[e];
    im.resize(g.size());
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2) {
          int src[3] = {i0, i1, i2}, dst[3];
          for (int a = 0; a < 3; ++a) {
            int s = src[G[e].perm[a]];
            dst[a] = G[e].sign[a] > 0 ? s : n - 1 - s;
          }
          im[g.index(i0, i1, i2)] = std::uint32_t(g.index(dst[0], dst[1], dst[2]));
        }
  }
  return act;
}

// sqrt(W) He_a(v1) He_b(v2) He_c(v3) sqrt(mu), a + b + c <= degree, orthonormalized
Eigen::MatrixXd smooth_basis(const VelocityGrid& g, int degree, const Eigen::VectorXd& sqw) {
  const std::size_t N = g.size();
  std::vector<std::array<int, 3>> idx;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; a + b <= degree; ++b)
      for (int c = 0; a + b + c <= degree; ++c) idx.push_back({a, b, c});
  Eigen::MatrixXd V(N, idx.size());
  std::vector<double> he[3];
  for (auto& h : he) h.resize(degree + 1);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec3& v = g.nodes[i];
    for (int d = 0; d < 3; ++d) {
      he[d][0] = 1;
      if (degree > 0) he[d][1] = v[d];
      for (int k = 1; k < degree; ++k) he[d][k + 1] = v[d] * he[d][k] - k * he[d][k - 1];
    }
    const double s = sqw(i) * sqrt_maxwellian(v);
    for (std::size_t m = 0; m < idx.size(); ++m) V(i, m) = s * he[0][idx[m][0]] * he[1][idx[m][1]] * he[2][idx[m][2]];
  }
  for (Eigen::Index m = 0; m < V.cols(); ++m) V.col(m).normalize();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
  return qr.householderQ() * Eigen::MatrixXd::Identity(N, V.cols());
}

}  // namespace

double collision_frequency(const Vec3& v) {
  const double s = std::sqrt(dot(v, v));
  if (s < 1e-8) return 2 * std::sqrt(2 * kPi);
  return kPi * (std::sqrt(2 / kPi) * std::exp(-0.5 * s * s) + (s + 1 / s) * std::erf(s / std::sqrt(2.0)));
}

double collision_frequency_radial(double s) {
  // pi * 2 pi (2 pi)^{-3/2} int r^3 e^{-(r^2+s^2)/2} int_{-1}^{1} e^{r s t} dt dr
  const double pref = kPi * 2 * kPi * std::pow(2 * kPi, -1.5);
  return pref * radial_integral(s, [&](double r) {
           return r * r * r * std::exp(-0.5 * (r - s) * (r - s)) * scaled_J(0, r * s);
         });
}

Vec3 first_moment_frequency(const Vec3& v) {
  const double s = std::sqrt(dot(v, v));
  if (s < 1e-12) return {0, 0, 0};
  const double pref = kPi * 2 * kPi * std::pow(2 * kPi, -1.5);
  double G = pref * radial_integral(s, [&](double r) {
               return r * r * r * r * std::exp(-0.5 * (r - s) * (r - s)) * scaled_J(1, r * s);
             });
  return {G * v[0] / s, G * v[1] / s, G * v[2] / s};
}

double kernel_k1(const Vec3& v, const Vec3& w) {
  Vec3 z{v[0] - w[0], v[1] - w[1], v[2] - w[2]};
  return kPi * std::sqrt(dot(z, z)) * sqrt_maxwellian(v) * sqrt_maxwellian(w);
}

double kernel_k2(const Vec3& v, const Vec3& w) {
  Vec3 z{v[0] - w[0], v[1] - w[1], v[2] - w[2]};
  double z2 = dot(z, z);
  if (z2 == 0) return INFINITY;
  double d = dot(v, v) - dot(w, w);
  return std::sqrt(2 / kPi) / std::sqrt(z2) * std::exp(-z2 / 8 - d * d / (8 * z2));
}

CollisionOperator::CollisionOperator(VelocityGrid grid, Eigen::VectorXd nu, Eigen::MatrixXd K_raw,
                                     OperatorOptions opt)
    : grid_(std::move(grid)), nu_(std::move(nu)), K_raw_(std::move(K_raw)), opt_(opt) {
  const Eigen::Index N = grid_.size();
  if (nu_.size() != N || K_raw_.rows() != N || K_raw_.cols() != N)
    throw std::invalid_argument("operator dimensions do not match grid");
  sqw_.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) sqw_(i) = std::sqrt(grid_.weights[i]);

  Eigen::MatrixXd E = invariants(grid_);
  diag_.scale = norm2(grid_, nu_.cwiseProduct(E.col(0)));
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd r = apply_L_raw(E.col(k));
    diag_.raw_null_defect[k] = norm2(grid_, r) / norm2(grid_, nu_.cwiseProduct(E.col(k)));
  }

  // S = D (nu - K) D^{-1}, D = diag(sqrt W)
  S_ = -(sqw_.asDiagonal() * K_raw_ * sqw_.cwiseInverse().asDiagonal());
  S_.diagonal() += nu_;
  diag_.raw_asymmetry = (S_ - S_.transpose()).norm() / S_.norm();
  if (opt_.smooth_degree >= 0) {
    // symmetric S_c with S_c V = S V (up to the symmetric part of V^T S V) on the smooth
    // subspace V, and the plain symmetrization on its orthogonal complement
    Eigen::MatrixXd V = smooth_basis(grid_, opt_.smooth_degree, sqw_);
    Eigen::MatrixXd Y = S_ * V;
    Eigen::MatrixXd Ssym = 0.5 * (S_ + S_.transpose());
    Eigen::MatrixXd Z = Ssym * V;
    Eigen::MatrixXd B = V.transpose() * Y;
    B = 0.5 * (B + B.transpose()).eval();
    Eigen::MatrixXd Yp = Y - V * (V.transpose() * Y) + V * B;
    Eigen::MatrixXd VtZ = V.transpose() * Z;
    S_ = Ssym;
    S_.noalias() -= V * Z.transpose();
    S_.noalias() -= Z * V.transpose();
    S_.noalias() += V * (VtZ * V.transpose());
    S_.noalias() += Yp * V.transpose();
    S_.noalias() += V * Yp.transpose();
    S_.noalias() -= V * (B * V.transpose());
  }
  S_ = 0.5 * (S_ + S_.transpose()).eval();

  Eigen::MatrixXd DE = sqw_.asDiagonal() * E;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(DE);
  Q_ = qr.householderQ() * Eigen::MatrixXd::Identity(N, 5);
  Eigen::MatrixXd SQ = S_ * Q_;
  Eigen::MatrixXd QtSQ = Q_.transpose() * SQ;
  S_ -= Q_ * SQ.transpose();
  S_ -= SQ * Q_.transpose();
  S_ += Q_ * QtSQ * Q_.transpose();
  S_ = 0.5 * (S_ + S_.transpose()).eval();
  Einv_ = sqw_.cwiseInverse().asDiagonal() * Q_;
}

namespace {
// apply a linear map to the even and odd parts separately and re-impose the
// output parity at node pairs (flip: the map exchanges parities)
template <class F>
Eigen::VectorXd by_parity(const VelocityGrid& g, const Eigen::VectorXd& x, bool flip, F&& map) {
  Eigen::MatrixXd X(x.size(), 2);
  X.col(0) = even_part(g, x);
  X.col(1) = odd_part(g, x);
  Eigen::MatrixXd Y = map(X);
  if (flip) return odd_part(g, Y.col(0)) + even_part(g, Y.col(1));
  return even_part(g, Y.col(0)) + odd_part(g, Y.col(1));
}
}  // namespace

Eigen::VectorXd CollisionOperator::apply_L(const Eigen::VectorXd& g) const {
  if (g.size() != nu_.size()) throw std::invalid_argument("apply_L: grid mismatch");
  return by_parity(grid_, g, false, [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
    Eigen::MatrixXd Y = S_ * (sqw_.asDiagonal() * X);
    return sqw_.cwiseInverse().asDiagonal() * Y;
  });
}

Eigen::VectorXd CollisionOperator::apply_K(const Eigen::VectorXd& g) const {
  return nu_.cwiseProduct(g) - apply_L(g);
}

Eigen::VectorXd CollisionOperator::apply_L_raw(const Eigen::VectorXd& g) const {
  if (g.size() != nu_.size()) throw std::invalid_argument("apply_L_raw: grid mismatch");
  return nu_.cwiseProduct(g) - K_raw_ * g;
}

Eigen::VectorXd CollisionOperator::project_null(const Eigen::VectorXd& g) const {
  return by_parity(grid_, g, false, [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
    Eigen::MatrixXd Y = sqw_.asDiagonal() * X;
    Eigen::MatrixXd P = Q_ * (Q_.transpose() * Y);
    return sqw_.cwiseInverse().asDiagonal() * P;
  });
}

const Eigen::LLT<Eigen::MatrixXd>& CollisionOperator::cholesky() const {
  std::call_once(chol_once_, [&] {
    const double sigma = nu_.minCoeff();
    Eigen::MatrixXd C = S_ + sigma * Q_ * Q_.transpose();
    chol_ = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(C);
    if (chol_->info() != Eigen::Success) throw std::runtime_error("Cholesky of the corrected operator failed");
  });
  return *chol_;
}

Eigen::VectorXd shifted_solve(const CollisionOperator& op, const Eigen::VectorXd& yhat) {
  return op.cholesky().solve(yhat);
}

Eigen::VectorXd CollisionOperator::solve_Linv(const Eigen::VectorXd& h, double tol_null) const {
  if (h.size() != nu_.size()) throw std::invalid_argument("solve_Linv: grid mismatch");
  const double hn = norm2(grid_, h);
  if (hn == 0) return Eigen::VectorXd::Zero(h.size());
  Eigen::VectorXd ph = project_null(h);
  if (norm2(grid_, ph) > tol_null * hn)
    throw std::domain_error("solve_Linv: right-hand side has a macroscopic component");
  Eigen::VectorXd hm = h - ph;
  Eigen::VectorXd g = by_parity(grid_, hm, false, [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
    Eigen::MatrixXd Y = cholesky().solve(sqw_.asDiagonal() * X);
    Y = sqw_.cwiseInverse().asDiagonal() * Y;
    Eigen::MatrixXd P = Q_ * (Q_.transpose() * (sqw_.asDiagonal() * Y));
    return Y - sqw_.cwiseInverse().asDiagonal() * P;
  });
  double res = norm2(grid_, apply_L(g) - hm) / hn;
  if (!(res <= 1e-10)) throw std::runtime_error("solve_Linv: residual " + std::to_string(res));
  return g;
}

Eigen::VectorXd CollisionOperator::apply_Mv(int a, const Eigen::VectorXd& g) const {
  if (!has_mv()) throw std::logic_error("operator was assembled without M_v matrices");
  return by_parity(grid_, g, true, [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd { return Mv_[a] * X; });
}

std::shared_ptr<CollisionOperator> assemble_operator(const VelocityGrid& grid, const OperatorOptions& opt) {
  const double t0 = wall_seconds();
  const int n = grid.n;
  const std::size_t N = grid.size();
  const auto& G = octahedral_group();
  const NodeAction act = node_action(grid);

  Eigen::VectorXd nu(N);
  for (std::size_t i = 0; i < N; ++i) nu(i) = collision_frequency(grid.nodes[i]);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  std::array<Eigen::MatrixXd, 3> M;
  const int nm = opt.build_mv ? 3 : 0;
  for (int a = 0; a < nm; ++a) M[a] = Eigen::MatrixXd::Zero(N, N);
  std::vector<char> filled(N, 0);

  const double c2 = std::sqrt(2 / kPi);
  std::vector<CollisionPoint> pts;
  std::vector<double> wa(n), wb(n), wc(n);
  double dropped = 0, total = 0;

  for (int a = n / 2; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c) {
        const std::size_t rep = grid.index(a, b, c);
        const Vec3 v = grid.nodes[rep];
        const double smv = sqrt_maxwellian(v);
        std::vector<std::size_t> stab;
        for (std::size_t e = 0; e < G.size(); ++e)
          if (act.img[e][rep] == rep) stab.push_back(e);
        const double row_w = smv * grid.weights[rep] * double(G.size()) / double(stab.size());
        collision_points(v, opt.rule, pts);

        std::vector<std::size_t> keep;
        keep.reserve(pts.size());
        std::vector<Vec3> xs(pts.size());
        for (std::size_t q = 0; q < pts.size(); ++q) {
          const auto& p = pts[q];
          Vec3 x{v[0] - p.r * p.omega[0], v[1] - p.r * p.omega[1], v[2] - p.r * p.omega[2]};
          xs[q] = x;
          double kern = c2 * p.r * std::exp(-0.25 * (p.r - p.c) * (p.r - p.c) - 0.25 * p.c * p.c);
          double k1 = kPi * p.r * p.r * p.r * sqrt_maxwellian(x) * smv;
          double mass = row_w * p.weight * std::abs(kern - k1) * sqrt_maxwellian(x);
          total += mass;
          if (std::abs(x[0]) > grid.cutoff || std::abs(x[1]) > grid.cutoff || std::abs(x[2]) > grid.cutoff) {
            dropped += mass;
            continue;
          }
          keep.push_back(q);
        }
        const Eigen::Index Nq = keep.size();
        Eigen::MatrixXd V(Nq, n);
        std::array<Eigen::MatrixXd, 4> U;
        for (int m = 0; m <= nm; ++m) U[m].resize(std::size_t(n) * n, Nq);
        for (Eigen::Index j = 0; j < Nq; ++j) {
          const auto& p = pts[keep[j]];
          const Vec3& x = xs[keep[j]];
          grid.axis_weights(x[0], wa.data());
          grid.axis_weights(x[1], wb.data());
          grid.axis_weights(x[2], wc.data());
          double kern = c2 * p.r * std::exp(-0.25 * (p.r - p.c) * (p.r - p.c) - 0.25 * p.c * p.c);
          double k1 = kPi * p.r * p.r * p.r * sqrt_maxwellian(x) * smv;
          double coef[4];
          coef[0] = p.weight * (kern - k1);
          for (int m = 0; m < nm; ++m) coef[m + 1] = p.weight * (kern * p.c * p.omega[m] - k1 * v[m]);
          for (int ib = 0; ib < n; ++ib) V(j, ib) = wc[ib];
          for (int m = 0; m <= nm; ++m) {
            double* col = U[m].col(j).data();
            for (int ia = 0; ia < n; ++ia) {
              double t = coef[m] * wa[ia];
              for (int ib = 0; ib < n; ++ib) col[ia * n + ib] = t * wb[ib];
            }
          }
        }
        std::array<Eigen::VectorXd, 4> row;
        for (int m = 0; m <= nm; ++m) {
          Eigen::MatrixXd R = U[m] * V;  // (n^2 x n), row-major flatten = node index
          row[m].resize(N);
          for (int ab = 0; ab < n * n; ++ab)
            for (int cc = 0; cc < n; ++cc) row[m](std::size_t(ab) * n + cc) = R(ab, cc);
        }
        if (nm) {
          Vec3 F = first_moment_frequency(v);
          double nuv = collision_frequency(v);
          for (int m = 0; m < 3; ++m) row[m + 1](rep) -= v[m] * nuv - F[m];
        }

        // stabilizer average
        std::array<Eigen::VectorXd, 4> avg;
        for (int m = 0; m <= nm; ++m) avg[m] = Eigen::VectorXd::Zero(N);
        for (std::size_t e : stab) {
          const auto& im = act.img[e];
          for (std::size_t j = 0; j < N; ++j) avg[0](j) += row[0](im[j]);
          if (nm) {
            // M_vec[v, j] = Q_T^T M_vec[v, T j]
            for (std::size_t j = 0; j < N; ++j)
              for (int aa = 0; aa < 3; ++aa) avg[1 + G[e].perm[aa]](j) += G[e].sign[aa] * row[1 + aa](im[j]);
          }
        }
        for (int m = 0; m <= nm; ++m) avg[m] /= double(stab.size());

        // orbit
        for (std::size_t e = 0; e < G.size(); ++e) {
          const auto& im = act.img[e];
          const std::size_t tgt = im[rep];
          if (filled[tgt]) continue;
          filled[tgt] = 1;
          for (std::size_t j = 0; j < N; ++j) K(tgt, im[j]) = avg[0](j);
          if (nm)
            for (std::size_t j = 0; j < N; ++j)
              for (int aa = 0; aa < 3; ++aa) M[aa](tgt, im[j]) = G[e].sign[aa] * avg[1 + G[e].perm[aa]](j);
        }
      }
  for (std::size_t i = 0; i < N; ++i)
    if (!filled[i]) throw std::logic_error("assembly left a row unfilled");

  // Maxwellian-weighted defect: dropped/total over representative rows
  const double defect = total > 0 ? dropped / total : 0;
  if (defect > opt.mass_tol)
    throw std::runtime_error("post-collision mass outside the velocity box exceeds tolerance: " +
                             std::to_string(defect));
  auto op = std::make_shared<CollisionOperator>(grid, nu, std::move(K), opt);
  if (nm) op->set_mv(std::move(M));
  op->set_assembly_stats(wall_seconds() - t0, defect);
  return op;
}

struct SpectralGapSolver {
  static SpectralGapEstimate run(const CollisionOperator& op, int block, int max_iter, double tol) {
    const Eigen::Index N = op.nu_.size();
    const auto& Q = op.Q_;
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd Y(N, block);
    for (Eigen::Index i = 0; i < N; ++i)
      for (int j = 0; j < block; ++j) Y(i, j) = nd(rng);
    auto proj = [&](Eigen::MatrixXd& X) { X -= Q * (Q.transpose() * X); };
    proj(Y);
    const auto& chol = op.cholesky();
    double prev = 0, lam = 0;
    int it = 0;
    for (; it < max_iter; ++it) {
      Eigen::MatrixXd Z = op.nu_.asDiagonal() * Y;
      proj(Z);
      Y = chol.solve(Z);
      proj(Y);
      // Rayleigh-Ritz for (S, nu) on span(Y)
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      Eigen::MatrixXd B0 = qr.householderQ() * Eigen::MatrixXd::Identity(N, block);
      Eigen::MatrixXd A = B0.transpose() * (op.S_ * B0);
      Eigen::MatrixXd B = B0.transpose() * (op.nu_.asDiagonal() * B0);
      A = 0.5 * (A + A.transpose()).eval();
      B = 0.5 * (B + B.transpose()).eval();
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B);
      lam = ges.eigenvalues()(0);
      Y = B0 * ges.eigenvectors();
      if (it > 2 && std::abs(lam - prev) <= tol * std::abs(lam)) break;
      prev = lam;
    }
    SpectralGapEstimate est;
    est.delta0 = lam;
    est.iterations = it + 1;
    est.n_per_axis = op.grid_.n;
    est.cutoff = op.grid_.cutoff;
    return est;
  }
};

SpectralGapEstimate estimate_spectral_gap(const CollisionOperator& op, int block, int max_iter, double tol) {
  SpectralGapEstimate e = SpectralGapSolver::run(op, block, max_iter, tol);
  if (!(e.delta0 > 0)) throw std::runtime_error("spectral gap estimate is not positive: discretization failure");
  return e;
}

KernelBoundReport kernel_bound_check(const CollisionOperator& op, double l, double eps) {
  if (l < 0) throw std::invalid_argument("kernel_bound_check: l >= 0");
  const auto& g = op.grid();
  const auto& K = op.K_raw();
  KernelBoundReport rep;
  rep.l = l;
  rep.eps = eps;
  rep.nu_lower = INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& v = g.nodes[i];
    double vv = dot(v, v), br = std::sqrt(1 + vv);
    double wl = std::pow(1 + vv, 0.5 * l);
    double s0 = 0, s1 = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      double kij = std::abs(K(i, j));
      s0 += kij;
      const Vec3& w = g.nodes[j];
      Vec3 d{v[0] - w[0], v[1] - w[1], v[2] - w[2]};
      s1 += kij * std::exp(eps * dot(d, d)) / std::pow(1 + dot(w, w), 0.5 * l);
    }
    double f = 1 + std::sqrt(vv);
    rep.unweighted = std::max(rep.unweighted, f * s0);
    rep.weighted = std::max(rep.weighted, f * wl * s1);
    rep.nu_lower = std::min(rep.nu_lower, op.nu()(i) / br);
    rep.nu_upper = std::max(rep.nu_upper, op.nu()(i) / br);
  }
  return rep;
}

namespace {
constexpr char kMagic[8] = {'K', 'F', 'O', 'P', 'E', 'R', '0', '1'};
constexpr std::uint32_t kCacheVersion = 2;

template <class T>
void put(std::ofstream& f, Hasher& h, const T& x) {
  f.write(reinterpret_cast<const char*>(&x), sizeof x);
  h.bytes(&x, sizeof x);
}
void put_block(std::ofstream& f, Hasher& h, const double* p, std::size_t n) {
  f.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
  h.bytes(p, n * sizeof(double));
}
template <class T>
void get(std::ifstream& f, Hasher& h, T& x) {
  f.read(reinterpret_cast<char*>(&x), sizeof x);
  if (!f) throw std::runtime_error("operator cache truncated");
  h.bytes(&x, sizeof x);
}
void get_block(std::ifstream& f, Hasher& h, double* p, std::size_t n) {
  f.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
  if (!f) throw std::runtime_error("operator cache truncated");
  h.bytes(p, n * sizeof(double));
}
std::string rule_tag(const OperatorOptions& o) {
  const auto& r = o.rule;
  return std::to_string(r.w_panels) + "x" + std::to_string(r.w_points) + "x" + std::to_string(r.n_phi) + "x" +
         std::to_string(r.n_r) + "x" + std::to_string(int(r.r_half * 100));
}
}  // namespace

void save_operator(const CollisionOperator& op, const std::string& path) {
  const std::string tmp = path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write operator cache " + path);
    Hasher h;
    f.write(kMagic, 8);
    put(f, h, kCacheVersion);
    std::string gh = op.grid().hash(), rt = rule_tag(op.options());
    std::uint32_t len = gh.size();
    put(f, h, len);
    f.write(gh.data(), len);
    h.add(gh);
    len = rt.size();
    put(f, h, len);
    f.write(rt.data(), len);
    h.add(rt);
    std::uint64_t N = op.grid().size();
    std::uint8_t mv = op.has_mv();
    put(f, h, N);
    put(f, h, mv);
    put_block(f, h, op.nu().data(), N);
    put_block(f, h, op.K_raw().data(), N * N);
    put_block(f, h, op.invariants_basis().data(), N * 5);
    if (mv)
      for (int a = 0; a < 3; ++a) put_block(f, h, op.Mv()[a].data(), N * N);
    std::uint64_t d = h.value();
    f.write(reinterpret_cast<const char*>(&d), sizeof d);
    if (!f) throw std::runtime_error("failed writing operator cache " + path);
  }
  std::filesystem::rename(tmp, path);
}

std::shared_ptr<CollisionOperator> load_operator(const std::string& path, const VelocityGrid& grid,
                                                 const OperatorOptions& opt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open operator cache " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("operator cache has a bad header: " + path);
  Hasher h;
  std::uint32_t ver, len;
  get(f, h, ver);
  if (ver != kCacheVersion) throw std::runtime_error("operator cache version mismatch: " + path);
  get(f, h, len);
  if (len > 64) throw std::runtime_error("operator cache corrupted: " + path);
  std::string gh(len, '\0');
  f.read(gh.data(), len);
  h.add(gh);
  get(f, h, len);
  if (len > 64) throw std::runtime_error("operator cache corrupted: " + path);
  std::string rt(len, '\0');
  f.read(rt.data(), len);
  h.add(rt);
  if (gh != grid.hash()) throw std::runtime_error("operator cache belongs to a different grid: " + path);
  if (rt != rule_tag(opt)) throw std::runtime_error("operator cache built with a different quadrature rule: " + path);
  std::uint64_t N;
  std::uint8_t mv;
  get(f, h, N);
  get(f, h, mv);
  if (N != grid.size()) throw std::runtime_error("operator cache size mismatch: " + path);
  if (opt.build_mv && !mv) throw std::runtime_error("operator cache lacks M_v blocks: " + path);
  Eigen::VectorXd nu(N);
  Eigen::MatrixXd K(N, N), E(N, 5);
  get_block(f, h, nu.data(), N);
  get_block(f, h, K.data(), N * N);
  get_block(f, h, E.data(), N * 5);
  std::array<Eigen::MatrixXd, 3> M;
  if (mv)
    for (int a = 0; a < 3; ++a) {
      M[a].resize(N, N);
      get_block(f, h, M[a].data(), N * N);
    }
  std::uint64_t d = 0;
  f.read(reinterpret_cast<char*>(&d), sizeof d);
  if (!f || d != h.value()) throw std::runtime_error("operator cache checksum mismatch (corrupted): " + path);
  OperatorOptions o = opt;
  o.build_mv = mv;
  auto op = std::make_shared<CollisionOperator>(grid, std::move(nu), std::move(K), o);
  if (mv) op->set_mv(std::move(M));
  return op;
}

std::string default_cache_path(const VelocityGrid& grid, const OperatorOptions& opt) {
  std::string dir = ".";
  if (const char* e = std::getenv("KINFLUID_CACHE_DIR")) dir = e;
  std::filesystem::create_directories(dir);
  return dir + "/op_n" + std::to_string(grid.n) + "_" + grid.hash().substr(0, 8) + "_" + rule_tag(opt) +
         (opt.build_mv ? "_mv" : "") + ".kfop";
}

std::shared_ptr<CollisionOperator> cached_operator(const VelocityGrid& grid, const OperatorOptions& opt,
                                                   const std::string& path) {
  if (!path.empty() && std::filesystem::exists(path)) {
    auto op = load_operator(path, grid, opt);
    return op;
  }
  auto op = assemble_operator(grid, opt);
  if (!path.empty()) save_operator(*op, path);
  return op;
}

}  // namespace kf

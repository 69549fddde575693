#include "oracle/sonine.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "kinfluid/quadrature.hpp"

namespace oracle {
namespace {

const double kPi = 3.14159265358979323846;
using V3 = std::array<double, 3>;

double laguerre(int k, double alpha, double x) {
  double a = 1, b = 1 + alpha - x;
  if (k == 0) return a;
  for (int j = 1; j < k; ++j) {
    double c = ((2 * j + 1 + alpha - x) * b - (j + alpha) * a) / (j + 1);
    a = b;
    b = c;
  }
  return b;
}

// physicists' Gauss-Hermite, weight exp(-x^2)
kf::Rule1D hermite_phys(int m) {
  auto r = kf::gauss_hermite_prob(m);
  for (auto& x : r.x) x /= std::sqrt(2.0);
  for (auto& w : r.w) w *= std::sqrt(kPi);
  return r;
}

// tensor part of a test function: 9 components for A (ij), 3 for B (j)
using Tensor = std::function<int(const V3&, double*)>;
using Radial = std::function<double(int, double)>;

int tensor_A(const V3& v, double* out) {
  double s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[3 * i + j] = v[i] * v[j] - (i == j ? s2 / 3 : 0.0);
  return 9;
}
int tensor_B(const V3& v, double* out) {
  for (int j = 0; j < 3; ++j) out[j] = v[j];
  return 3;
}

// Gram matrix in centre-of-mass variables:
// G_kl = 1/4 int dV dz dsigma |z|/4 (2 pi)^-3 e^{-|V|^2 - |z|^2/4} dH_k dH_l,
// with dH = H(v') + H(v*') - H(v) - H(v*). Rotation invariance of the
// component-summed form lets z point along e3 (factor 4 pi).
Eigen::MatrixXd gram(const Radial& radial, const Tensor& tens, int K) {
  auto gh = hermite_phys(7);
  auto gr = kf::gauss_legendre(48, 0.0, 14.0);
  auto gt = kf::gauss_legendre(12);
  const int nphi = 24;
  std::vector<V3> sig;
  std::vector<double> sw;
  for (std::size_t a = 0; a < gt.x.size(); ++a)
    for (int p = 0; p < nphi; ++p) {
      double t = gt.x[a], s = std::sqrt(1 - t * t), ph = 2 * kPi * (p + 0.5) / nphi;
      sig.push_back({s * std::cos(ph), s * std::sin(ph), t});
      sw.push_back(gt.w[a] * 2 * kPi / nphi);
    }
  auto H = [&](int k, const V3& u, double* out) {
    double s2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    int m = tens(u, out);
    double rad = radial(k, s2);
    for (int c = 0; c < m; ++c) out[c] *= rad;
    return m;
  };
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(K, K);
  std::vector<std::array<double, 9>> d(K);
  double tmp[4][9];
  for (std::size_t ir = 0; ir < gr.x.size(); ++ir) {
    double r = gr.x[ir];
    double wt = 0.25 * (r / 4) * std::exp(-r * r / 4) * r * r * 4 * kPi * gr.w[ir] / std::pow(2 * kPi, 3);
    for (std::size_t a = 0; a < gh.x.size(); ++a)
      for (std::size_t b = 0; b < gh.x.size(); ++b)
        for (std::size_t c = 0; c < gh.x.size(); ++c) {
          V3 V{gh.x[a], gh.x[b], gh.x[c]};
          double wv = gh.w[a] * gh.w[b] * gh.w[c];
          V3 v{V[0], V[1], V[2] + r / 2}, vs{V[0], V[1], V[2] - r / 2};
          for (std::size_t q = 0; q < sig.size(); ++q) {
            V3 vp, vsp;
            for (int e = 0; e < 3; ++e) {
              vp[e] = V[e] + r * sig[q][e] / 2;
              vsp[e] = V[e] - r * sig[q][e] / 2;
            }
            int m = 0;
            for (int k = 0; k < K; ++k) {
              m = H(k, vp, tmp[0]);
              H(k, vsp, tmp[1]);
              H(k, v, tmp[2]);
              H(k, vs, tmp[3]);
              for (int e = 0; e < m; ++e) d[k][e] = tmp[0][e] + tmp[1][e] - tmp[2][e] - tmp[3][e];
            }
            double w = wt * wv * sw[q];
            for (int k = 0; k < K; ++k)
              for (int l = k; l < K; ++l) {
                double s = 0;
                for (int e = 0; e < m; ++e) s += d[k][e] * d[l][e];
                G(k, l) += w * s;
              }
          }
        }
  }
  return G.selfadjointView<Eigen::Upper>();
}

// Gaussian average E_mu[f] by a 10^3 tensor rule
double gauss_avg(const std::function<double(const V3&)>& f) {
  auto gh = kf::gauss_hermite_prob(10);
  double s = 0;
  for (std::size_t a = 0; a < gh.x.size(); ++a)
    for (std::size_t b = 0; b < gh.x.size(); ++b)
      for (std::size_t c = 0; c < gh.x.size(); ++c)
        s += gh.w[a] * gh.w[b] * gh.w[c] * f({gh.x[a], gh.x[b], gh.x[c]});
  return s;
}

SonineResult solve(const Eigen::MatrixXd& G, const Eigen::VectorXd& rhs) {
  SonineResult out{};
  for (int k = 1; k <= 3; ++k) {
    Eigen::VectorXd b = rhs.head(k);
    out.value[k - 1] = b.dot(G.topLeftCorner(k, k).ldlt().solve(b));
  }
  return out;
}

}  // namespace

SonineResult sonine_viscosity() {
  Radial rad = [](int k, double s2) { return laguerre(k, 2.5, s2 / 2); };
  Eigen::MatrixXd G = gram(rad, tensor_A, 3) / 10;
  Eigen::VectorXd rhs(3);
  for (int k = 0; k < 3; ++k)
    rhs(k) = gauss_avg([&](const V3& v) {
               double a[9];
               tensor_A(v, a);
               double s = 0;
               for (double x : a) s += x * x;
               return rad(k, v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * s;
             }) / 10;
  return solve(G, rhs);
}

SonineResult sonine_conductivity() {
  Radial rad = [](int k, double s2) { return laguerre(k + 1, 1.5, s2 / 2); };
  Eigen::MatrixXd G = gram(rad, tensor_B, 3) / 3;
  Eigen::VectorXd rhs(3);
  for (int k = 0; k < 3; ++k)
    rhs(k) = gauss_avg([&](const V3& v) {
               double s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
               // B = v (|v|^2 - 5)/2 = -L_1^{(3/2)}(|v|^2/2) v
               return -rad(k, s2) * rad(0, s2) * s2;
             }) / 3;
  return solve(G, rhs);
}

}  // namespace oracle

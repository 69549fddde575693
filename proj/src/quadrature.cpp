#include "kinfluid/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Rule1D gauss_legendre(int m) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: m >= 1");
  Rule1D r;
  r.x.resize(m);
  r.w.resize(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) p0 = 1;
      dp = m * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1);
    }
    r.x[i] = -x;
    r.x[m - 1 - i] = x;
    r.w[i] = r.w[m - 1 - i] = 2 / ((1 - x * x) * dp * dp);
  }
  if (m % 2) r.x[m / 2] = 0;
  return r;
}

Rule1D gauss_legendre(int m, double a, double b) {
  Rule1D r = gauss_legendre(m);
  for (int i = 0; i < m; ++i) {
    r.x[i] = a + 0.5 * (b - a) * (r.x[i] + 1);
    r.w[i] *= 0.5 * (b - a);
  }
  return r;
}

Rule1D gauss_hermite_prob(int m) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule1D r;
  r.x.resize(m);
  r.w.resize(m);
  for (int k = 0; k < m; ++k) {
    r.x[k] = es.eigenvalues()(k);
    r.w[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
  for (int k = 0; k < m / 2; ++k) {
    double a = 0.5 * (r.x[m - 1 - k] - r.x[k]), w = 0.5 * (r.w[k] + r.w[m - 1 - k]);
    r.x[k] = -a;
    r.x[m - 1 - k] = a;
    r.w[k] = r.w[m - 1 - k] = w;
  }
  if (m % 2) r.x[m / 2] = 0;
  return r;
}

void collision_points(const Vec3& v, const CollisionRuleOptions& o, std::vector<CollisionPoint>& out) {
  out.clear();
  const double s = std::sqrt(dot(v, v));
  Vec3 e3{0, 0, 1};
  if (s > 1e-12) e3 = {v[0] / s, v[1] / s, v[2] / s};
  Vec3 t0 = std::abs(e3[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  double pr = dot(t0, e3);
  Vec3 e1{t0[0] - pr * e3[0], t0[1] - pr * e3[1], t0[2] - pr * e3[2]};
  double n1 = std::sqrt(dot(e1, e1));
  for (double& c : e1) c /= n1;
  Vec3 e2{e3[1] * e1[2] - e3[2] * e1[1], e3[2] * e1[0] - e3[0] * e1[2], e3[0] * e1[1] - e3[1] * e1[0]};

  const Rule1D gw = gauss_legendre(o.w_points);
  const Rule1D gr = gauss_legendre(o.n_r);
  const double wmax = std::sqrt(2.0);
  std::vector<double> cphi(o.n_phi), sphi(o.n_phi);
  for (int j = 0; j < o.n_phi; ++j) {
    double ph = 2 * kPi * (j + 0.5) / o.n_phi;
    cphi[j] = std::cos(ph);
    sphi[j] = std::sin(ph);
  }
  out.reserve(o.points_per_row());
  for (int p = 0; p < o.w_panels; ++p) {
    double a = wmax * p / o.w_panels, b = wmax * (p + 1) / o.w_panels;
    for (int iw = 0; iw < o.w_points; ++iw) {
      double w = a + 0.5 * (b - a) * (gw.x[iw] + 1);
      double ww = gw.w[iw] * 0.5 * (b - a) * 2 * w * (2 * kPi / o.n_phi);
      double t = 1 - w * w, st = std::sqrt(std::max(0.0, 1 - t * t));
      double c = s * t;
      double lo = std::max(0.0, c - o.r_half), hi = c + o.r_half;
      if (hi <= 0) continue;
      for (int j = 0; j < o.n_phi; ++j) {
        Vec3 om;
        for (int k = 0; k < 3; ++k) om[k] = t * e3[k] + st * (cphi[j] * e1[k] + sphi[j] * e2[k]);
        for (int ir = 0; ir < o.n_r; ++ir) {
          CollisionPoint cp;
          cp.r = lo + 0.5 * (hi - lo) * (gr.x[ir] + 1);
          cp.weight = ww * gr.w[ir] * 0.5 * (hi - lo);
          cp.c = c;
          cp.omega = om;
          out.push_back(cp);
        }
      }
    }
  }
}

const std::vector<OctaElement>& octahedral_group() {
  static const std::vector<OctaElement> g = [] {
    std::vector<OctaElement> out;
    std::array<int, 3> p{0, 1, 2};
    do {
      for (int m = 0; m < 8; ++m) {
        OctaElement e;
        e.perm = p;
        for (int a = 0; a < 3; ++a) e.sign[a] = (m >> a) & 1 ? -1 : 1;
        out.push_back(e);
      }
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }();
  return g;
}

}  // namespace kf

#include "kinfluid/velocity_basis.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace kf {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Hermite functions psi_0..psi_{m-1} at x (orthonormal in L2(R))
void hermite_functions(double x, int m, std::vector<double>& psi) {
  psi.assign(m + 1, 0.0);
  psi[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
  if (m >= 1) psi[1] = std::sqrt(2.0) * x * psi[0];
  for (int j = 1; j < m; ++j)
    psi[j + 1] = std::sqrt(2.0 / (j + 1)) * x * psi[j] - std::sqrt(double(j) / (j + 1)) * psi[j - 1];
}

}  // namespace

std::size_t VelocityGrid::mirror(std::size_t idx) const {
  const std::size_t nn = n;
  std::size_t k = idx % nn, j = (idx / nn) % nn, i = idx / (nn * nn);
  return index(n - 1 - int(i), n - 1 - int(j), n - 1 - int(k));
}

bool VelocityGrid::axis_weights(double x, double* out) const {
  if (std::abs(x) > cutoff) return false;
  for (int k = 0; k < n; ++k) {
    if (x == x1d[k]) {
      for (int j = 0; j < n; ++j) out[j] = 0;
      out[k] = 1;
      return true;
    }
  }
  double s = 0;
  for (int k = 0; k < n; ++k) {
    out[k] = bary[k] / (x - x1d[k]);
    s += out[k];
  }
  for (int k = 0; k < n; ++k) out[k] = out[k] / s * std::exp(-0.25 * (x * x - x1d[k] * x1d[k]));
  return true;
}

std::string VelocityGrid::hash() const {
  Hasher h;
  h.add(std::int64_t(n)).add(cutoff);
  for (int k = 0; k < n; ++k) h.add(x1d[k]).add(w1d[k]);
  return h.hex();
}

VelocityGrid build_velocity_grid(int n, double cutoff) {
  if (n < 4) throw std::invalid_argument("n_per_axis must be >= 4");
  if (n % 2) throw std::invalid_argument("n_per_axis must be even (odd axis count breaks v -> -v pairing)");
  if (!(cutoff >= 5)) throw std::invalid_argument("cutoff must be >= 5");

  // Golub-Welsch for physicists' Hermite, then Newton polish on psi_n
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  std::vector<double> xs(n), psi;
  for (int k = 0; k < n; ++k) {
    double x = es.eigenvalues()(k);
    for (int it = 0; it < 6; ++it) {
      hermite_functions(x, n, psi);
      double d = std::sqrt(2.0 * n) * psi[n - 1] - x * psi[n];
      x -= psi[n] / d;
    }
    xs[k] = x;
  }
  for (int k = 0; k < n / 2; ++k) {
    double a = 0.5 * (xs[n - 1 - k] - xs[k]);
    xs[k] = -a;
    xs[n - 1 - k] = a;
  }

  VelocityGrid g;
  g.n = n;
  g.cutoff = cutoff;
  g.x1d.resize(n);
  g.w1d.resize(n);
  g.bary.resize(n);
  for (int k = 0; k < n; ++k) {
    hermite_functions(xs[k], n, psi);
    double s = 0;
    for (int j = 0; j < n; ++j) s += psi[j] * psi[j];
    g.x1d[k] = std::sqrt(2.0) * xs[k];
    g.w1d[k] = std::sqrt(2.0) / s;
  }
  for (int k = 0; k < n / 2; ++k) g.w1d[n - 1 - k] = g.w1d[k];
  if (g.x1d[n - 1] > cutoff)
    throw std::invalid_argument("cutoff smaller than the outermost node; raise cutoff or lower n_per_axis");
  for (int k = 0; k < n; ++k) {
    double p = 1;
    for (int j = 0; j < n; ++j)
      if (j != k) p *= (g.x1d[k] - g.x1d[j]);
    g.bary[k] = 1.0 / p;
  }
  g.nodes.reserve(std::size_t(n) * n * n);
  g.weights.reserve(std::size_t(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        g.nodes.push_back({g.x1d[i], g.x1d[j], g.x1d[k]});
        g.weights.push_back(g.w1d[i] * g.w1d[j] * g.w1d[k]);
      }
  return g;
}

std::string grid_to_json(const VelocityGrid& g) {
  nlohmann::json j;
  j["format"] = "kinfluid-grid";
  j["n_per_axis"] = g.n;
  j["cutoff"] = g.cutoff;
  j["nodes_1d"] = g.x1d;
  j["weights_1d"] = g.w1d;
  j["grid_hash"] = g.hash();
  return j.dump(1);
}

VelocityGrid grid_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "kinfluid-grid") throw std::runtime_error("not a kinfluid grid file");
  VelocityGrid g = build_velocity_grid(j.at("n_per_axis").get<int>(), j.at("cutoff").get<double>());
  if (j.contains("grid_hash") && j["grid_hash"].get<std::string>() != g.hash())
    throw std::runtime_error("grid hash mismatch");
  return g;
}

bool parity_holds(const VelocityGrid& g, const VelocityFunction& f) {
  if (f.parity == Parity::none) return true;
  const double s = f.parity == Parity::even ? 1.0 : -1.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (f.values(g.mirror(i)) != s * f.values(i)) return false;
  return true;
}

Eigen::VectorXd even_part(const VelocityGrid& g, const Eigen::VectorXd& f) {
  Eigen::VectorXd out(f.size());
  for (std::size_t i = 0; i < g.size(); ++i) out(i) = 0.5 * (f(i) + f(g.mirror(i)));
  return out;
}

Eigen::VectorXd odd_part(const VelocityGrid& g, const Eigen::VectorXd& f) {
  Eigen::VectorXd out(f.size());
  for (std::size_t i = 0; i < g.size(); ++i) out(i) = 0.5 * (f(i) - f(g.mirror(i)));
  return out;
}

double maxwellian(const Vec3& v) { return std::pow(2 * kPi, -1.5) * std::exp(-0.5 * dot(v, v)); }

double sqrt_maxwellian(const Vec3& v) { return std::pow(2 * kPi, -0.75) * std::exp(-0.25 * dot(v, v)); }

Eigen::VectorXd sample(const VelocityGrid& g, const std::function<double(const Vec3&)>& f) {
  Eigen::VectorXd out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out(i) = f(g.nodes[i]);
  return out;
}

Eigen::VectorXd sample_sqrt_mu(const VelocityGrid& g, const std::function<double(const Vec3&)>& p) {
  Eigen::VectorXd out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out(i) = p(g.nodes[i]) * sqrt_maxwellian(g.nodes[i]);
  return out;
}

double inner(const VelocityGrid& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (std::size_t(a.size()) != g.size() || std::size_t(b.size()) != g.size())
    throw std::invalid_argument("inner: function does not live on this grid");
  double s = 0;
  const std::size_t half = g.size() / 2;
  // node i and its mirror N-1-i form a pair
  for (std::size_t i = 0; i < half; ++i) {
    std::size_t m = g.size() - 1 - i;
    s += g.weights[i] * (a(i) * b(i) + a(m) * b(m));
  }
  return s;
}

double norm2(const VelocityGrid& g, const Eigen::VectorXd& a) { return std::sqrt(inner(g, a, a)); }

Eigen::MatrixXd invariants(const VelocityGrid& g) {
  Eigen::MatrixXd E(g.size(), 5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& v = g.nodes[i];
    double s = sqrt_maxwellian(v);
    E(i, 0) = s;
    E(i, 1) = v[0] * s;
    E(i, 2) = v[1] * s;
    E(i, 3) = v[2] * s;
    E(i, 4) = dot(v, v) * s;
  }
  return E;
}

Projection project_P(const VelocityGrid& g, const Eigen::VectorXd& f) {
  Eigen::MatrixXd E(g.size(), 5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& v = g.nodes[i];
    double s = sqrt_maxwellian(v);
    E(i, 0) = s;
    E(i, 1) = v[0] * s;
    E(i, 2) = v[1] * s;
    E(i, 3) = v[2] * s;
    E(i, 4) = 0.5 * (dot(v, v) - 3) * s;
  }
  Eigen::Matrix<double, 5, 5> G;
  Eigen::Matrix<double, 5, 1> b;
  for (int k = 0; k < 5; ++k) {
    b(k) = inner(g, E.col(k), f);
    for (int l = 0; l < 5; ++l) G(k, l) = inner(g, E.col(k), E.col(l));
  }
  Eigen::Matrix<double, 5, 1> c = G.ldlt().solve(b);
  Projection p;
  p.macro.rho = c(0);
  p.macro.u = {c(1), c(2), c(3)};
  p.macro.theta = c(4);
  p.Pg = E * c;
  return p;
}

Eigen::VectorXd macro_function(const VelocityGrid& g, const MacroTriple& m) {
  return sample_sqrt_mu(g, [&](const Vec3& v) { return m.rho + dot(m.u, v) + 0.5 * m.theta * (dot(v, v) - 3); });
}

double weighted_sup_norm(const VelocityGrid& g, const Eigen::VectorXd& f, double l) {
  if (l < 0) throw std::invalid_argument("weight exponent must be >= 0");
  double m = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    m = std::max(m, std::pow(1 + dot(g.nodes[i], g.nodes[i]), 0.5 * l) * std::abs(f(i)));
  return m;
}

}  // namespace kf

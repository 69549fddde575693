#include "kinfluid/config.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "kinfluid/util.hpp"

namespace kf {

namespace {

using Inputs = std::vector<std::string>;

struct Entry {
  std::string key;  // section.name
  std::function<void(RunConfig&, const Inputs&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool hashed = true;
};

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

const std::string& single(const std::string& key, const Inputs& in) {
  if (in.size() != 1) throw ConfigError(key + ": expected a single value");
  return in[0];
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError(key + ": not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  long long v;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError(key + ": not an integer: '" + s + "'");
  return v;
}

template <class Get>
Entry real(const std::string& key, Get g) {
  return {key, [key, g](RunConfig& c, const Inputs& in) { g(c) = to_double(key, single(key, in)); },
          [g](const RunConfig& c) { return fmt(g(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Entry integer(const std::string& key, Get g) {
  return {key,
          [key, g](RunConfig& c, const Inputs& in) {
            g(c) = static_cast<std::remove_reference_t<decltype(g(c))>>(to_int(key, single(key, in)));
          },
          [g](const RunConfig& c) { return std::to_string(g(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Entry text(const std::string& key, Get g, bool hashed = true) {
  return {key, [key, g](RunConfig& c, const Inputs& in) { g(c) = single(key, in); },
          [g](const RunConfig& c) { return "\"" + g(const_cast<RunConfig&>(c)) + "\""; }, hashed};
}

template <class Get>
Entry flag(const std::string& key, Get g) {
  return {key,
          [key, g](RunConfig& c, const Inputs& in) {
            const auto& s = single(key, in);
            if (s == "true" || s == "1") g(c) = true;
            else if (s == "false" || s == "0") g(c) = false;
            else throw ConfigError(key + ": expected true or false");
          },
          [g](const RunConfig& c) { return std::string(g(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Get>
Entry reals(const std::string& key, Get g) {
  return {key,
          [key, g](RunConfig& c, const Inputs& in) {
            std::vector<double> v;
            for (const auto& s : in) v.push_back(to_double(key, s));
            g(c) = v;
          },
          [g](const RunConfig& c) {
            std::string s = "[";
            const auto& v = g(const_cast<RunConfig&>(c));
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
            return s + "]";
          }};
}

#define KF_REF(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      integer("grid.n_per_axis", KF_REF(n_per_axis)),
      real("grid.cutoff", KF_REF(cutoff)),
      integer("grid.smooth_degree", KF_REF(smooth_degree)),
      integer("quadrature.w_panels", KF_REF(rule.w_panels)),
      integer("quadrature.w_points", KF_REF(rule.w_points)),
      integer("quadrature.n_phi", KF_REF(rule.n_phi)),
      integer("quadrature.n_r", KF_REF(rule.n_r)),
      real("quadrature.r_half", KF_REF(rule.r_half)),
      integer("run.seed", KF_REF(seed)),
      integer("run.gamma_states", KF_REF(gamma_states)),
      integer("run.super_burnett_samples", KF_REF(super_burnett_samples)),
      text("run.output_dir", KF_REF(output_dir), false),
      text("run.operator_cache", KF_REF(operator_cache), false),
      integer("torus.d", KF_REF(torus.d)),
      integer("torus.N", KF_REF(torus.N)),
      real("torus.dt", KF_REF(torus.dt)),
      real("torus.t_end", KF_REF(torus.t_end)),
      real("torus.sample_dt", KF_REF(torus.sample_dt)),
      text("torus.preset", KF_REF(torus.preset)),
      real("torus.amplitude", KF_REF(torus.amplitude)),
      real("torus.slope", KF_REF(torus.slope)),
      integer("torus.kmax", KF_REF(torus.kmax)),
      flag("torus.nonlinear", KF_REF(torus.nonlinear)),
      real("torus.mu_star", KF_REF(torus.mu_star)),
      real("torus.kappa_star", KF_REF(torus.kappa_star)),
      integer("decay.d", KF_REF(decay.d)),
      integer("decay.N", KF_REF(decay.N)),
      real("decay.dt", KF_REF(decay.dt)),
      real("decay.t_end", KF_REF(decay.t_end)),
      real("decay.sample_dt", KF_REF(decay.sample_dt)),
      real("decay.window_fraction", KF_REF(decay.window_fraction)),
      real("decay.linear_amplitude", KF_REF(decay.linear_amplitude)),
      real("decay.amplitude", KF_REF(decay.amplitude)),
      integer("decay.kmax", KF_REF(decay.kmax)),
      real("decay.slope", KF_REF(decay.slope)),
      real("decay.tol_rate", KF_REF(decay.tol_rate)),
      real("decay.min_r2", KF_REF(decay.min_r2)),
      integer("residual.d", KF_REF(residual.d)),
      integer("residual.N", KF_REF(residual.N)),
      text("residual.preset", KF_REF(residual.preset)),
      real("residual.amplitude", KF_REF(residual.amplitude)),
      real("residual.h", KF_REF(residual.h)),
      integer("residual.substeps", KF_REF(residual.substeps)),
      reals("residual.eps", KF_REF(residual.eps)),
      integer("residual.alpha_degree", KF_REF(residual.alpha_degree)),
      real("residual.min_slope", KF_REF(residual.min_slope)),
      real("residual.broken_slope", KF_REF(residual.broken_slope)),
      real("residual.broken_band", KF_REF(residual.broken_band)),
      real("tolerances.tol_null", KF_REF(tol.tol_null)),
      real("tolerances.tol_iso", KF_REF(tol.tol_iso)),
      real("tolerances.tol_gamma", KF_REF(tol.tol_gamma)),
      real("tolerances.tol_super", KF_REF(tol.tol_super)),
      real("tolerances.tol_hier", KF_REF(tol.tol_hier)),
      real("tolerances.tol_div", KF_REF(tol.tol_div)),
      real("tolerances.tol_drift", KF_REF(tol.tol_drift)),
  };
  return e;
}

#undef KF_REF

const Entry& find(const std::string& key) {
  for (const auto& e : entries())
    if (e.key == key) return e;
  throw ConfigError("unknown configuration key '" + key + "'");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool known_preset(const std::string& p) {
  return p == "taylor_green" || p == "shear" || p == "single_mode" || p == "random";
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.n_per_axis >= 4 && c.n_per_axis % 2 == 0 && c.n_per_axis <= 22, "grid.n_per_axis: even, 4..22");
  require(c.cutoff >= 6 && c.cutoff <= 12, "grid.cutoff: 6..12");
  require(c.smooth_degree <= 12, "grid.smooth_degree: at most 12");
  require(c.rule.w_panels >= 1 && c.rule.w_points >= 2 && c.rule.n_phi >= 4 && c.rule.n_r >= 4,
          "quadrature: panels >= 1, points >= 2, n_phi >= 4, n_r >= 4");
  require(c.rule.r_half > 0, "quadrature.r_half: positive");
  require(c.gamma_states >= 1 && c.super_burnett_samples >= 1, "run: sample counts must be positive");
  for (const auto* t : {&c.torus}) {
    require(t->d == 2 || t->d == 3, "torus.d: 2 or 3");
    require(t->N >= 8 && t->N % 2 == 0 && t->N <= 256, "torus.N: even, 8..256");
    require(t->dt > 0 && t->t_end > 0 && t->sample_dt >= t->dt, "torus: dt > 0, t_end > 0, sample_dt >= dt");
    require(known_preset(t->preset), "torus.preset: taylor_green | shear | single_mode | random");
    require(t->amplitude >= 0, "torus.amplitude: nonnegative");
    require(t->kmax >= 1 && t->kmax <= (t->N - 1) / 3, "torus.kmax: 1..(N-1)/3");
    require(t->mu_star >= 0 && t->kappa_star >= 0, "torus.mu_star, torus.kappa_star: nonnegative (0 = computed)");
  }
  require(c.decay.d == 2 || c.decay.d == 3, "decay.d: 2 or 3");
  require(c.decay.N >= 8 && c.decay.N % 2 == 0, "decay.N: even, >= 8");
  require(c.decay.dt > 0 && c.decay.t_end > 0 && c.decay.sample_dt >= c.decay.dt, "decay: time parameters");
  require(c.decay.window_fraction > 0 && c.decay.window_fraction <= 1, "decay.window_fraction: (0, 1]");
  require(c.decay.kmax >= 1 && c.decay.kmax <= (c.decay.N - 1) / 3, "decay.kmax: 1..(N-1)/3");
  require(c.residual.d == 2 || c.residual.d == 3, "residual.d: 2 or 3");
  require(c.residual.N >= 8 && c.residual.N % 2 == 0, "residual.N: even, >= 8");
  require(known_preset(c.residual.preset), "residual.preset: taylor_green | shear | single_mode | random");
  require(c.residual.h > 0 && c.residual.substeps >= 1, "residual: h > 0, substeps >= 1");
  for (double e : c.residual.eps) require(e > 0 && e <= 0.5, "residual.eps: values in (0, 0.5]");
  require(c.residual.alpha_degree >= 1 && c.residual.alpha_degree <= 12, "residual.alpha_degree: 1..12");
  require(c.tol.tol_null > 0 && c.tol.tol_iso > 0 && c.tol.tol_gamma > 0 && c.tol.tol_super > 0 &&
              c.tol.tol_hier > 0 && c.tol.tol_div > 0 && c.tol.tol_drift > 0,
          "tolerances: positive");
}

void apply_override(RunConfig& c, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "': expected section.key=value");
  std::string key = assignment.substr(0, eq), value = assignment.substr(eq + 1);
  Inputs in;
  if (!value.empty() && value.front() == '[' && value.back() == ']') {
    std::stringstream ss(value.substr(1, value.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (!item.empty()) in.push_back(item);
    }
  } else {
    in.push_back(value);
  }
  find(key).set(c, in);
}

RunConfig load_config(const std::string& path) {
  RunConfig c;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw ConfigError("cannot read config '" + path + "': " + e.what());
  }
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    find(it.fullname()).set(c, it.inputs);
  }
  validate(c);
  return c;
}

std::string config_to_ini(const RunConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const auto& e : entries()) {
    auto dot = e.key.find('.');
    std::string s = e.key.substr(0, dot);
    if (s != section) {
      os << (section.empty() ? "" : "\n") << "[" << s << "]\n";
      section = s;
    }
    os << e.key.substr(dot + 1) << " = " << e.get(c) << "\n";
  }
  return os.str();
}

std::string config_hash(const RunConfig& c) {
  Hasher h;
  for (const auto& e : entries())
    if (e.hashed) h.add(e.key + "=" + e.get(c) + ";");
  return h.hex();
}

}  // namespace kf

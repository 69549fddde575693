#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kinfluid/config.hpp"

using namespace kf;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("defaults validate and survive an ini round trip") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  const std::string ini = config_to_ini(c);
  auto back = load_config(write_temp("kf_defaults.ini", ini));
  CHECK(config_to_ini(back) == ini);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("overrides parse scalars, flags and arrays") {
  RunConfig c;
  apply_override(c, "torus.N=48");
  apply_override(c, "torus.nonlinear=false");
  apply_override(c, "residual.eps=[0.2, 0.1, 0.05]");
  apply_override(c, "tolerances.tol_iso=1e-9");
  CHECK(c.torus.N == 48);
  CHECK_FALSE(c.torus.nonlinear);
  CHECK(c.residual.eps == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(c.tol.tol_iso == 1e-9);
  CHECK_THROWS_AS(apply_override(c, "torus.bogus=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "torus.N=abc"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "torus.dt"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "torus.nonlinear=maybe"), ConfigError);
}

TEST_CASE("range validation") {
  auto bad = [](const std::string& s) {
    RunConfig c;
    apply_override(c, s);
    return c;
  };
  CHECK_THROWS_AS(validate(bad("grid.n_per_axis=7")), ConfigError);
  CHECK_THROWS_AS(validate(bad("torus.d=4")), ConfigError);
  CHECK_THROWS_AS(validate(bad("torus.preset=vortex")), ConfigError);
  CHECK_THROWS_AS(validate(bad("torus.kmax=20")), ConfigError);
  CHECK_THROWS_AS(validate(bad("torus.dt=-1")), ConfigError);
  CHECK_THROWS_AS(validate(bad("tolerances.tol_null=0")), ConfigError);
  CHECK_THROWS_AS(validate(bad("residual.eps=[0.1, 0.9]")), ConfigError);
}

TEST_CASE("config files reject unknown keys and unreadable paths") {
  CHECK_THROWS_AS(load_config(write_temp("kf_unknown.ini", "[torus]\nviscosity = 1\n")), ConfigError);
  CHECK_THROWS_AS(load_config(write_temp("kf_range.ini", "[grid]\nn_per_axis = 3\n")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/kf.ini"), ConfigError);
  auto c = load_config(write_temp("kf_partial.ini", "[torus]\nN = 16\npreset = \"shear\"\n"));
  CHECK(c.torus.N == 16);
  CHECK(c.torus.preset == "shear");
  CHECK(c.torus.dt == RunConfig{}.torus.dt);
}

TEST_CASE("hash tracks numerics, not output locations") {
  RunConfig a, b;
  b.output_dir = "elsewhere";
  b.operator_cache = "/tmp/x.kfop";
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  RunConfig c;
  c.tol.tol_iso = 2e-3;
  CHECK(config_hash(a) != config_hash(c));
}

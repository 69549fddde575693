#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "kinfluid_cli_test";

int run(const std::string& args, const std::string& capture = "") {
  fs::create_directories(kWork);
  std::string cmd = "cd '" + kWork.string() + "' && '" KINFLUID_BIN "' " + args;
  cmd += capture.empty() ? " >/dev/null 2>&1" : " >'" + (kWork / capture).string() + "' 2>&1";
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(kWork / p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// small torus, fixed coefficients: no operator needed
const std::string kSmall = "--set torus.N=16 --set torus.t_end=0.05 --set torus.sample_dt=0.01 "
                           "--set torus.mu_star=0.179 --set torus.kappa_star=0.678 ";

}  // namespace

TEST_CASE("print-defaults round trips through --config") {
  REQUIRE(run("--print-defaults", "defaults.ini") == 0);
  const std::string ini = slurp("defaults.ini");
  CHECK(ini.find("[torus]") != std::string::npos);
  CHECK(ini.find("tol_iso = 0.001") != std::string::npos);
  REQUIRE(run("--config defaults.ini --print-defaults", "again.ini") == 0);
  CHECK(slurp("again.ini") == ini);
}

TEST_CASE("configuration errors exit 1") {
  CHECK(run("--set torus.bogus=1 solve") == 1);
  CHECK(run("--config missing.ini solve") == 1);
  CHECK(run("--set grid.n_per_axis=5 verify") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("--set residual.eps=[0.1] residual", "single_eps.txt") == 1);
  CHECK(slurp("single_eps.txt").find("fit refused") != std::string::npos);
}

TEST_CASE("solve is deterministic and embeds provenance") {
  REQUIRE(run(kSmall + "--out s1 solve") == 0);
  REQUIRE(run(kSmall + "--out s2 solve") == 0);
  const std::string a = slurp("s1/timeseries.csv");
  CHECK(a == slurp("s2/timeseries.csv"));
  CHECK(slurp("s1/drift.csv") == slurp("s2/drift.csv"));
  CHECK(a.rfind("# kinfluid ", 0) == 0);
  CHECK(a.find("config_hash=") != std::string::npos);
  CHECK(a.find("grid_hash=") != std::string::npos);
  CHECK(a.find("seed=1") != std::string::npos);
  auto j = json::parse(slurp("s1/solve.json"));
  CHECK(j["pass"] == true);
  CHECK(j["meta"]["seed"] == 1);
  REQUIRE(run(kSmall + "--seed 7 --out s3 solve") == 0);
  CHECK(slurp("s3/timeseries.csv") != a);
}

TEST_CASE("taylor-green solve decays monotonically") {
  REQUIRE(run(kSmall + "--set torus.preset=taylor_green --set torus.d=2 --set torus.t_end=2 --out tg solve") == 0);
  std::istringstream in(slurp("tg/timeseries.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  double prev = 1e300;
  int rows = 0;
  while (std::getline(in, line)) {
    const double u = std::stod(line.substr(line.find(',') + 1));
    CHECK(u < prev);
    prev = u;
    ++rows;
  }
  CHECK(rows == 201);
}

TEST_CASE("CFL violation exits 3 with a dump") {
  CHECK(run(kSmall + "--set torus.dt=0.5 --set torus.sample_dt=0.5 --set torus.t_end=1 --out cfl solve") == 3);
  auto j = json::parse(slurp("cfl/abort.json"));
  CHECK(std::string(j["error"]).find("CFL") != std::string::npos);
  CHECK(j["dt"] == 0.5);
}

TEST_CASE("corrupt operator cache exits 1") {
  { std::ofstream(kWork / "corrupt.kfop") << "not an operator"; }
  CHECK(run("--operator-cache corrupt.kfop --out bad transport", "corrupt.txt") == 1);
  CHECK(slurp("corrupt.txt").find("error") != std::string::npos);
}

TEST_CASE("transport passes at defaults and fails under an unreachable tolerance") {
  REQUIRE(run("--out tr transport") == 0);
  auto j = json::parse(slurp("tr/transport.json"));
  CHECK(double(j["mu_star"]) > 0);
  CHECK(double(j["kappa_star"]) > 0);
  CHECK(slurp("tr/brackets.csv").find("table,i,j,k,l,value,pattern") != std::string::npos);
  CHECK(run("--set tolerances.tol_iso=1e-9 --out tr_tight transport") == 2);
  CHECK(json::parse(slurp("tr_tight/transport.json"))["pass"] == false);
}

TEST_CASE("verify on an under-resolved grid names the failing checks") {
  CHECK(run("--set grid.n_per_axis=4 --out v4 verify") == 2);
  auto j = json::parse(slurp("v4/verify.json"));
  CHECK(j["meta"]["grid_hash"].is_string());
  CHECK(double(j["delta0"]) > 0);
  int failed = 0;
  for (const auto& c : j["checks"])
    if (!c["pass"]) ++failed;
  CHECK(failed > 0);
  const std::string txt = slurp("v4/verify.txt");
  CHECK(txt.find("FAILED:") != std::string::npos);
  CHECK(txt.find("isotropy") != std::string::npos);
  CHECK(txt.find("delta0") != std::string::npos);
}

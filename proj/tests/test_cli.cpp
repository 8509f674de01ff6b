// End-to-end checks of the pmx binary: exit-code contract, artifact
// emission, run comparison, and same-seed determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "pmx_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(PMX_BIN) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

int run_capture(const std::string& args, const fs::path& out_file) {
  const std::string cmd =
      std::string(PMX_BIN) + " " + args + " >" + out_file.string() + " 2>/dev/null";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json slurp_json(const fs::path& p) { return json::parse(slurp(p)); }

// small constant-coefficient scenario that solves in a couple of seconds
fs::path fast_config(const std::string& name, int n, json extra = json::object()) {
  json j = {
      {"name", name},
      {"model", {{"kind", "stable"}, {"alpha", 1.0}, {"scale", 1.0}}},
      {"grid", {{"n", n}, {"R", 16.0}}},
      {"mesh", {{"t_min", 0.003}, {"t_max", 1.0}, {"pts_per_decade", 6}}},
      {"solve", {{"y_stride", 32}}},
      {"stages", {"solve"}},
      {"seed", 11},
      {"oracle", {{"n_paths", 2000}, {"t", 0.5}, {"eps", 0.05}, {"y_stride", 2}}},
      {"tolerances", {{"ks", 0.06}}},
  };
  j.update(extra);
  fs::create_directories(kTmp);
  const fs::path p = kTmp / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("validate stage: exit 0 and artifacts") {
  const fs::path out = kTmp / "validate_run";
  fs::remove_all(out);
  const std::string cfg = std::string(SCENARIO_DIR) + "/stable-1d-const.json";
  CHECK(run("validate --config \"" + cfg + "\" --out " + q(out)) == 0);
  CHECK(fs::exists(out / "manifest.json"));
  auto v = slurp_json(out / "validate.json");
  CHECK(v.at("passed").get<bool>());
  auto m = slurp_json(out / "manifest.json");
  CHECK(m.at("version") == "0.1.0");
  CHECK(m.at("config_hash").get<std::string>().size() == 16);
  auto s = slurp_json(out / "summary.json");
  CHECK(s.at("validate") == "pass");
}

TEST_CASE("config errors exit CONFIG_INVALID (2)") {
  CHECK(run("validate --config " + q(kTmp / "missing.json")) == 2);

  fs::create_directories(kTmp);
  const fs::path broken = kTmp / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(run("validate --config " + q(broken)) == 2);

  const fs::path no_model = kTmp / "no_model.json";
  std::ofstream(no_model) << R"({"name":"no-model","stages":["solve"]})";
  CHECK(run("solve --config " + q(no_model)) == 2);

  const fs::path cfg = fast_config("bad-flags", 128);
  CHECK(run("solve --config " + q(cfg) + " --stages bogus --out " + q(kTmp / "x1")) == 2);
  CHECK(run("solve --config " + q(cfg) + " --tol-override mass --out " + q(kTmp / "x2")) == 2);
}

TEST_CASE("solve artifacts and same-seed determinism") {
  const fs::path cfg = fast_config("det", 128);
  const fs::path a = kTmp / "det_a", b = kTmp / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run("solve --config " + q(cfg) + " --out " + q(a)) == 0);
  REQUIRE(run("solve --config " + q(cfg) + " --out " + q(b)) == 0);
  for (const char* f : {"manifest.json", "solve_p.csv", "solve_diag.csv", "summary.json"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  auto s = slurp_json(a / "summary.json");
  CHECK(s.at("solve") == "pass");

  // identical runs compare clean
  const fs::path rep = kTmp / "cmp_eq.json";
  REQUIRE(run_capture("compare " + q(a) + " " + q(b), rep) == 0);
  auto d = slurp_json(rep);
  CHECK(d.at("p_sup_diff") == 0.0);
  CHECK_FALSE(d.at("large").get<bool>());
}

TEST_CASE("compare: grid refinement agrees, incompatible grids rejected") {
  const fs::path ca = fast_config("cmp-128", 128);
  const fs::path cb = fast_config("cmp-256", 256);
  const fs::path a = kTmp / "cmp_a", b = kTmp / "cmp_b";
  REQUIRE(run("solve --config " + q(ca) + " --out " + q(a)) == 0);
  REQUIRE(run("solve --config " + q(cb) + " --out " + q(b)) == 0);

  const fs::path cc = fast_config("cmp-512", 512);
  const fs::path c = kTmp / "cmp_c";
  REQUIRE(run("solve --config " + q(cc) + " --out " + q(c)) == 0);

  // doubling n shrinks the diff; both stay under the declared tolerance
  const fs::path rep1 = kTmp / "cmp_ref1.json", rep2 = kTmp / "cmp_ref2.json";
  REQUIRE(run_capture("compare " + q(a) + " " + q(b) + " --tol 0.1", rep1) == 0);
  REQUIRE(run_capture("compare " + q(b) + " " + q(c) + " --tol 0.1", rep2) == 0);
  const double d1 = slurp_json(rep1).at("p_sup_rel");
  const double d2 = slurp_json(rep2).at("p_sup_rel");
  CHECK(d1 < 0.05);
  CHECK(d2 < d1);
  CHECK_FALSE(slurp_json(rep1).at("large").get<bool>());

  // n ratio 4 and mismatched R are not comparable
  CHECK(run("compare " + q(a) + " " + q(c)) == 4);
  const fs::path cd = fast_config("cmp-r8", 128, {{"grid", {{"n", 128}, {"R", 8.0}}}});
  const fs::path dd = kTmp / "cmp_d";
  REQUIRE(run("solve --config " + q(cd) + " --out " + q(dd)) == 0);
  CHECK(run("compare " + q(a) + " " + q(dd)) == 4);
}

TEST_CASE("oracle stage: seed control and STAGE_FAILED on tolerance") {
  const fs::path cfg = fast_config("orc", 128, {{"stages", {"solve", "oracle"}}});
  const fs::path a = kTmp / "orc_a", b = kTmp / "orc_b", c = kTmp / "orc_c";
  REQUIRE(run("oracle --config " + q(cfg) + " --out " + q(a)) == 0);
  REQUIRE(run("oracle --config " + q(cfg) + " --out " + q(b)) == 0);
  CHECK(slurp(a / "oracle_positions.csv") == slurp(b / "oracle_positions.csv"));

  REQUIRE(run("oracle --config " + q(cfg) + " --seed 99 --out " + q(c)) == 0);
  CHECK(slurp(a / "oracle_positions.csv") != slurp(c / "oracle_positions.csv"));

  const fs::path f = kTmp / "orc_fail";
  CHECK(run("oracle --config " + q(cfg) + " --tol-override ks=1e-12 --out " + q(f)) == 3);
  auto s = slurp_json(f / "summary.json");
  CHECK(s.at("oracle") == "fail");
}

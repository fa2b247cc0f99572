#include <doctest.h>

#include <filesystem>
#include <string>

#include "mcm/experiment.hpp"

using namespace mcm;
using io::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mcm_experiment_tests" / name;
  fs::remove_all(p);
  return p;
}

json solve_config(const fs::path& out) {
  return json{{"kind", "solve"},
              {"domain", {{"type", "disk"}, {"radius", 1.0}}},
              {"resolutions", {8, 16}},
              {"params", {{"phi", "0.3*x - 0.2*y + 1"}, {"exact", "0.3*x - 0.2*y + 1"}, {"rate", 0.5}}},
              {"out", out.string()}};
}

std::string config_error_path(const json& j) {
  try {
    ExperimentConfig::from_json(j).validate();
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("function specs") {
  CHECK(function_from_json(json(2.5))({0.3, 0.4}) == 2.5);
  CHECK(function_from_json(json("x + 2*y"))({1.0, 1.0}) == doctest::Approx(3.0));
  CHECK(function_from_json(json{{"name", "cone"}, {"slope", 2.0}})({0.6, 0.8}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(function_from_json(json("x +")), ConfigError);
  CHECK_THROWS_AS(function_from_json(json{{"name", "cone"}, {"slop", 2.0}}), ConfigError);
  CHECK_THROWS_AS(function_from_json(json{{"name", "teapot"}}), ConfigError);
  CHECK_THROWS_AS(function_from_json(json::array()), ConfigError);
}

TEST_CASE("config validation reports a path and writes nothing") {
  const fs::path out = scratch("invalid");
  json j = solve_config(out);
  CHECK(config_error_path(j) == "<accepted>");

  json bad = j;
  bad["params"]["phi"] = "sin(";
  CHECK(config_error_path(bad) == "/params/phi");
  bad = j;
  bad["params"]["tolerance"] = 1;
  CHECK(config_error_path(bad) == "/params/tolerance");
  bad = j;
  bad["resolutions"] = json::array();
  CHECK(config_error_path(bad) == "/resolutions");
  bad = j;
  bad["domain"]["radius"] = 0;
  CHECK(config_error_path(bad) == "/domain");
  bad = j;
  bad["kind"] = "sculpt";
  CHECK(config_error_path(bad) == "/kind");
  bad = j;
  bad["params"]["solver"] = {{"init", "provided"}};
  CHECK(config_error_path(bad) == "/params/solver/init");

  json atom = {{"kind", "dirichlet"},
               {"domain", {{"type", "disk"}, {"radius", 1.0}}},
               {"resolutions", {16}},
               {"params", {{"measure", {{"atoms", {{{"x", 0.0}, {"mass", 1.0}}}}}}, {"deltas", {0.4, 0.2}}}},
               {"out", out.string()}};
  CHECK(config_error_path(atom) == "/params/measure");

  bad["kind"] = "sculpt";
  CHECK_THROWS_AS(run_experiment(ExperimentConfig::from_json(bad)), ConfigError);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("solve experiment writes a manifest") {
  const fs::path out = scratch("solve");
  const Manifest m = run_experiment(ExperimentConfig::from_json(solve_config(out)));
  CHECK(m.pass);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "runs.csv"));
  CHECK(fs::exists(out / "field_16.json"));
  const std::string log = io::read_text(out / "runs.csv");
  CHECK(log.rfind("region,h,iters,residual,converged,error\ndisk,0.125,", 0) == 0);
  const json man = io::read_json(out / "manifest.json");
  CHECK(man.at("pass").get<bool>());
  CHECK(man.at("config").contains("out") == false);
  CHECK(man.at("outputs").size() == m.outputs.size());
}

TEST_CASE("assertion failure still writes outputs") {
  const fs::path out = scratch("failing");
  json j = solve_config(out);
  j["params"]["exact"] = "x";  // deliberately wrong reference
  j["params"]["rate"] = 3.0;
  const Manifest m = run_experiment(ExperimentConfig::from_json(j));
  CHECK_FALSE(m.pass);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "runs.csv"));
}

TEST_CASE("identical config and seed give identical bytes") {
  json a = {{"kind", "verify"}, {"seed", 17}, {"out", scratch("det_a").string()}};
  json b = a;
  b["out"] = scratch("det_b").string();
  const Manifest ma = run_experiment(ExperimentConfig::from_json(a));
  const Manifest mb = run_experiment(ExperimentConfig::from_json(b));
  CHECK(ma.pass);
  CHECK(io::read_text(fs::path(a["out"].get<std::string>()) / "manifest.json") ==
        io::read_text(fs::path(b["out"].get<std::string>()) / "manifest.json"));
  CHECK(io::read_text(fs::path(a["out"].get<std::string>()) / "verify.csv") ==
        io::read_text(fs::path(b["out"].get<std::string>()) / "verify.csv"));

  json c = a;
  c["seed"] = 18;
  c["out"] = scratch("det_c").string();
  const Manifest mc = run_experiment(ExperimentConfig::from_json(c));
  CHECK(mc.inputs_hash != ma.inputs_hash);
}

TEST_CASE("batch and report") {
  const fs::path root = scratch("batch");
  std::vector<ExperimentConfig> cs;
  for (int s : {1, 2}) {
    json j = {{"kind", "verify"}, {"seed", s}, {"out", (root / ("v" + std::to_string(s))).string()}};
    cs.push_back(ExperimentConfig::from_json(j));
  }
  const auto ms = run_batch(cs);
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].pass);
  CHECK(ms[1].pass);
  cs[1].out = cs[0].out;
  CHECK_THROWS_AS(run_batch(cs), ConfigError);

  const Manifest r = write_report(root);
  CHECK(r.pass);
  CHECK(r.assertions.size() == 2);
  const std::string summary = io::read_text(root / "summary.csv");
  CHECK(summary.rfind("experiment,kind,inputs_hash,assertions,failed,pass\nv1,verify,", 0) == 0);
}

// mcm <kind> --config run.json [--out dir] [--seed n] [--resolution 32,64]
//
// Exit status: 0 all assertions pass, 1 some assertion failed, 2 invalid
// config (JSON error on stderr, nothing written), 3 runtime failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcm/experiment.hpp"

namespace {

using mcm::io::json;

struct Flags {
  std::vector<std::string> configs;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<int> resolutions;
};

void add_flags(CLI::App* sub, Flags& f, bool config_required) {
  auto* c = sub->add_option("--config", f.configs, "experiment config (JSON); repeat to run a batch concurrently");
  if (config_required) c->required();
  sub->add_option("--out", f.out, "output directory (overrides the config)");
  sub->add_option("--seed", f.seed, "deterministic seed (overrides the config)");
  sub->add_option("--resolution", f.resolutions, "comma-separated list of 1/h values")->delimiter(',');
}

mcm::ExperimentConfig load(const std::string& kind, const std::optional<std::string>& path, const Flags& f) {
  json j = json::object();
  if (path) {
    try {
      j = mcm::io::read_json(*path);
    } catch (const json::parse_error& e) {
      throw mcm::ConfigError("", *path + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw mcm::ConfigError("", e.what());
    }
    if (!j.is_object()) throw mcm::ConfigError("", *path + ": expected a JSON object");
  }
  if (!j.contains("kind")) j["kind"] = kind;
  if (j["kind"] != kind)
    throw mcm::ConfigError("/kind", "config kind " + j["kind"].dump() + " does not match the subcommand '" + kind + "'");
  if (!f.out.empty()) j["out"] = f.out;
  if (f.seed) j["seed"] = *f.seed;
  if (!f.resolutions.empty()) j["resolutions"] = f.resolutions;
  return mcm::ExperimentConfig::from_json(j);
}

void print(const mcm::Manifest& m, const std::string& where) {
  for (const auto& a : m.assertions)
    std::printf("%s %s%s%s\n", a.pass ? "PASS" : "FAIL", a.name.c_str(), a.detail.empty() ? "" : ": ",
                a.detail.c_str());
  std::printf("%s: %s\n", m.pass ? "pass" : "fail", where.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribed mean curvature experiments"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::string> kinds{"solve", "perron", "measure", "harnack", "dirichlet", "verify"};
  for (const auto& k : kinds) add_flags(app.add_subcommand(k, "run a " + k + " experiment"), flags, k != "verify");
  auto* report = app.add_subcommand("report", "summarise every manifest below --out into summary.csv");
  report->add_option("--out", flags.out, "directory holding experiment directories")->required();

  CLI11_PARSE(app, argc, argv);
  const std::string kind = app.get_subcommands().front()->get_name();

  try {
    if (kind == "report") {
      const mcm::Manifest m = mcm::write_report(flags.out);
      print(m, (std::filesystem::path(flags.out) / "summary.csv").string());
      return m.pass ? 0 : 1;
    }
    std::vector<mcm::ExperimentConfig> configs;
    if (flags.configs.empty()) configs.push_back(load(kind, std::nullopt, flags));
    for (const auto& p : flags.configs) configs.push_back(load(kind, p, flags));
    if (configs.size() > 1 && !flags.out.empty())
      throw mcm::ConfigError("/out", "--out cannot be shared by a batch; set out in each config");

    const std::vector<mcm::Manifest> ms = mcm::run_batch(configs);
    bool pass = true;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      print(ms[i], (configs[i].out / "manifest.json").string());
      pass = pass && ms[i].pass;
    }
    return pass ? 0 : 1;
  } catch (const mcm::ConfigError& e) {
    std::cerr << e.to_json().dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
}

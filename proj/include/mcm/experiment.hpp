#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcm/io.hpp"

namespace mcm {

/// Config rejected before anything is written. `path` is a JSON pointer into
/// the config.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }
  io::json to_json() const;

 private:
  std::string path_;
};

/// kind: solve | perron | measure | harnack | dirichlet | verify.
struct ExperimentConfig {
  std::string kind;
  io::json domain;  // shape layout of io::shape_from_json
  std::vector<int> resolutions;  // 1/h
  io::json params = io::json::object();
  std::filesystem::path out;
  std::uint64_t seed = 0;

  static ExperimentConfig from_json(const io::json& j);
  io::json to_json() const;

  /// Parses every parameter, formula and family; throws ConfigError.
  void validate() const;
};

/// Function spec: a number, a formula string, or {"name": ..., parameters}.
FieldFunction function_from_json(const io::json& j, const std::string& path = "");

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct OutputFile {
  std::string path;  // relative to the experiment directory
  std::string hash;  // FNV-1a of the bytes
};

struct Manifest {
  io::json config;
  std::string inputs_hash;
  std::vector<OutputFile> outputs;
  std::vector<Assertion> assertions;
  bool pass = false;

  io::json to_json() const;
};

/// One experiment, one directory: outputs plus manifest.json. Validation
/// failures throw ConfigError before the directory is touched.
Manifest run_experiment(const ExperimentConfig& config);

/// Runs configs concurrently; each must name a distinct output directory.
std::vector<Manifest> run_batch(const std::vector<ExperimentConfig>& configs);

/// Collects manifest.json files below `root` into summary.csv there.
Manifest write_report(const std::filesystem::path& root);

}  // namespace mcm

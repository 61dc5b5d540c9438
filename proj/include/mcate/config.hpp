#pragma once

#include "mcate/dataset.hpp"
#include "mcate/estimators.hpp"
#include "mcate/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mcate {

enum class Command { analyze, check_assumptions, simulate, oracle };
const char* to_string(Command command);
Command parse_command(const std::string& name);

// Nuisance model settings as written in a config file. Specs are token lists
// (see DesignSpec::parse); an empty outcome spec means "main effects of every
// covariate" (plus center indicators for phi).
struct NuisanceSettings {
  std::vector<std::string> outcome;
  std::vector<std::string> treatment = {"1"};
  std::optional<KnownProbabilities> known_treatment;
  std::vector<std::string> membership;  // empty: main effects
  bool treatment_decomposition = false;
  double weight_floor = 0.0;
};

struct RunConfig {
  Command command = Command::analyze;
  std::string input;
  std::string output = ".";
  CsvSchema schema;
  std::vector<Estimator> estimators = {Estimator::tau, Estimator::phi, Estimator::psi};
  int arm = 1;
  int reference_arm = 0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  int bootstrap_replicates = 0;  // 0: influence-curve intervals only
  NuisanceSettings phi;
  NuisanceSettings psi;
  NuisanceSettings chi;
  std::vector<std::string> ancova_base;      // empty: default specs
  std::vector<std::string> ancova_extended;
  Scenario scenario = Scenario::paper();
  int replicates = 1000;
  std::int64_t oracle_draws = 10'000'000;
  std::uint64_t oracle_seed = 20211;
};

// Throws ErrorKind::config on unknown keys, wrong types or invalid values.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
// Effective configuration; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

// Resolves configured settings: empty specs become main effects of
// `covariates`, and a single row of known probabilities is shared by all m
// centers.
NuisanceConfig resolve_nuisance(const NuisanceSettings& settings, Estimator family,
                                const std::vector<std::string>& covariates, int m);

}  // namespace mcate

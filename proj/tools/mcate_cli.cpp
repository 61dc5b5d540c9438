#include "mcate/commands.hpp"
#include "mcate/config.hpp"
#include "mcate/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct Flags {
  std::string config;
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<double> alpha;
  std::optional<std::string> estimators;
  std::optional<std::string> arms;
  std::optional<unsigned> threads;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw mcate::Error(mcate::ErrorKind::usage, "empty item in list '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mcate::Error(mcate::ErrorKind::config, "cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw mcate::Error(mcate::ErrorKind::config, "config file " + path + ": " + e.what());
  }
}

mcate::RunConfig build_config(const std::string& command, const Flags& f) {
  json j = f.config.empty() ? json::object() : read_config_file(f.config);
  if (!j.is_object()) throw mcate::Error(mcate::ErrorKind::config, "config must be a JSON object");
  j["command"] = command;
  if (f.input) j["input"] = *f.input;
  if (f.output) j["output"] = *f.output;
  if (f.seed) j["seed"] = *f.seed;
  if (f.alpha) j["alpha"] = *f.alpha;
  if (f.threads) j["threads"] = *f.threads;
  if (f.replicates) j["study"]["replicates"] = *f.replicates;
  if (f.estimators) j["estimators"] = split_list(*f.estimators);
  if (f.arms) {
    const auto parts = split_list(*f.arms);
    if (parts.size() != 2) throw mcate::Error(mcate::ErrorKind::usage, "--arms expects a,a'");
    std::vector<int> arms;
    for (const auto& p : parts) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(p, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != p.size()) throw mcate::Error(mcate::ErrorKind::usage, "--arms: '" + p + "' is not an integer");
      arms.push_back(v);
    }
    j["arms"] = arms;
  }
  return mcate::parse_config(j);
}

int fail(mcate::ErrorKind kind, const std::string& message) {
  std::cerr << mcate::error_json(kind, message).dump() << '\n';
  return mcate::exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Center-specific treatment effects in multicenter trials"};
  app.require_subcommand(1);
  Flags flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"analyze", "Estimate per-center treatment effects from a CSV file"},
      {"check-assumptions", "ANCOVA and homogeneity tests on a CSV file"},
      {"simulate", "Monte Carlo study under the simulation scenario"},
      {"oracle", "True per-center effects of the simulation scenario"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--input", flags.input, "Input CSV");
    sub->add_option("--output", flags.output, "Output directory");
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--replicates", flags.replicates, "Simulation replicates");
    sub->add_option("--alpha", flags.alpha, "Interval / test level");
    sub->add_option("--estimators", flags.estimators, "Comma-separated estimator list");
    sub->add_option("--arms", flags.arms, "Contrast arms a,a'");
    sub->add_option("--threads", flags.threads, "Worker threads (0: all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(mcate::ErrorKind::usage, e.what());
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    mcate::run(build_config(command, flags));
  } catch (const mcate::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(mcate::ErrorKind::degenerate_fit, e.what());
  }
  return 0;
}

#include "mcate/commands.hpp"

#include "mcate/error.hpp"
#include "mcate/inference.hpp"
#include "mcate/simulation.hpp"

#include <filesystem>

namespace mcate {

using nlohmann::json;

namespace {

const NuisanceSettings& settings_for(const RunConfig& config, Estimator e) {
  switch (e) {
    case Estimator::phi:
    case Estimator::phi_ipw:
    case Estimator::phi_om: return config.phi;
    case Estimator::chi: return config.chi;
    default: return config.psi;
  }
}

Estimator family_of(Estimator e) {
  switch (e) {
    case Estimator::phi_ipw:
    case Estimator::phi_om: return Estimator::phi;
    case Estimator::psi_ipw:
    case Estimator::psi_om: return Estimator::psi;
    default: return e;
  }
}

NuisanceConfig nuisance_for(const RunConfig& config, Estimator e, const std::vector<std::string>& covariates, int m) {
  return resolve_nuisance(settings_for(config, e), family_of(e), covariates, m);
}

TrialDataset load_input(const RunConfig& config) {
  if (config.input.empty()) throw Error(ErrorKind::usage, "no input file given");
  TrialDataset data = load_csv(config.input, config.schema);
  validate_positivity(data);
  return data;
}

json envelope(const RunConfig& config) {
  return {{"command", to_string(config.command)}, {"seed", config.seed}, {"config", to_json(config)}};
}

}  // namespace

AnalysisResult analyze(const RunConfig& config, const TrialDataset& data) {
  AnalysisResult result;
  const auto& covs = data.covariate_names;
  const int a = config.arm;
  const int a0 = config.reference_arm;
  std::uint64_t stream = 0;
  for (Estimator e : config.estimators) {
    const NuisanceConfig cfg = nuisance_for(config, e, covs, data.m());
    auto records = estimate_all_centers(data, e, a, a0, cfg, covs);
    for (auto& record : records) {
      IntervalEstimate interval = interval_for(record, config.alpha);
      if (config.bootstrap_replicates > 0 && !is_comparator(e)) {
        const int c = record.estimand.center;
        BootstrapOptions opts;
        opts.replicates = config.bootstrap_replicates;
        opts.seed = derive_seed(config.seed, stream);
        opts.alpha = config.alpha;
        opts.threads = config.threads;
        const auto boot = bootstrap_se(
            data, [&](const TrialDataset& d) { return estimate_contrast(d, e, c, a, a0, cfg).value; }, opts);
        interval = boot.interval;
      }
      ++stream;
      result.rows.push_back({std::move(record), interval});
    }
  }
  json estimates = json::array();
  for (const auto& row : result.rows) estimates.push_back(to_json(row, data));
  result.report = envelope(config);
  result.report["data"] = dataset_summary(data);
  result.report["estimates"] = estimates;
  return result;
}

std::vector<NamedTest> check_assumptions(const RunConfig& config, const TrialDataset& data) {
  std::vector<NamedTest> tests;
  const auto& covs = data.covariate_names;
  auto specs = default_ancova_specs(covs);
  if (!config.ancova_base.empty()) {
    specs = {DesignSpec::parse(config.ancova_base), DesignSpec::parse(config.ancova_extended)};
  }
  tests.push_back({"ancova", ancova_center_outcome_test(data, specs.first, specs.second)});
  for (Estimator e : config.estimators) {
    if (is_comparator(e)) continue;
    const NuisanceConfig cfg = nuisance_for(config, e, covs, data.m());
    tests.push_back({to_string(e), homogeneity_test(data, e, config.arm, config.reference_arm, cfg)});
  }
  return tests;
}

StudyOptions study_options(const RunConfig& config) {
  StudyOptions opts;
  opts.replicates = config.replicates;
  opts.seed = config.seed;
  opts.estimators = config.estimators;
  opts.alpha = config.alpha;
  opts.threads = config.threads;
  opts.oracle_draws = config.oracle_draws;
  opts.oracle_seed = config.oracle_seed;
  const auto covs = config.scenario.covariate_names();
  const int m = config.scenario.m;
  opts.nuisances = StudyNuisances{resolve_nuisance(config.phi, Estimator::phi, covs, m),
                                  resolve_nuisance(config.psi, Estimator::psi, covs, m),
                                  resolve_nuisance(config.chi, Estimator::chi, covs, m)};
  return opts;
}

void run(const RunConfig& config) {
  const std::filesystem::path out = config.output.empty() ? "." : config.output;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::usage, "cannot create output directory " + out.string());

  switch (config.command) {
    case Command::analyze: {
      const TrialDataset data = load_input(config);
      const auto result = analyze(config, data);
      write_json(out / "report.json", result.report);
      write_text(out / "estimates.csv", estimates_csv(result.rows, data));
      break;
    }
    case Command::check_assumptions: {
      const TrialDataset data = load_input(config);
      json tests = json::array();
      for (const auto& t : check_assumptions(config, data)) tests.push_back(to_json(t));
      json report = envelope(config);
      report["data"] = dataset_summary(data);
      report["tests"] = tests;
      write_json(out / "report.json", report);
      break;
    }
    case Command::simulate: {
      config.scenario.validate();
      const StudyReport study = run_study(config.scenario, study_options(config));
      json report = envelope(config);
      report["study"] = to_json(study);
      write_json(out / "study_report.json", report);
      write_text(out / "study_report.csv", study_csv(study));
      break;
    }
    case Command::oracle: {
      config.scenario.validate();
      const TrueAte truth = true_center_ate(config.scenario, config.oracle_draws, config.oracle_seed, config.threads);
      json report = envelope(config);
      report["oracle"] = to_json(truth);
      write_json(out / "report.json", report);
      break;
    }
  }
}

json error_json(ErrorKind kind, const std::string& message) {
  return {{"error", {{"kind", to_string(kind)}, {"message", message}, {"exit_code", exit_code(kind)}}}};
}

}  // namespace mcate

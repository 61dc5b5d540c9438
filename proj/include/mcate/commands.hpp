#pragma once

#include "mcate/config.hpp"
#include "mcate/error.hpp"
#include "mcate/dataset.hpp"
#include "mcate/report.hpp"

#include <json.hpp>

#include <vector>

namespace mcate {

struct AnalysisResult {
  std::vector<AnalysisRow> rows;
  nlohmann::json report;
};

// Per-center contrasts for every configured estimator on an in-memory dataset.
AnalysisResult analyze(const RunConfig& config, const TrialDataset& data);

// ANCOVA test plus one homogeneity test per center-specific estimator.
std::vector<NamedTest> check_assumptions(const RunConfig& config, const TrialDataset& data);

StudyOptions study_options(const RunConfig& config);

// Runs config.command and writes its files into config.output:
//   analyze            report.json, estimates.csv
//   check-assumptions  report.json
//   simulate           study_report.json, study_report.csv
//   oracle             report.json
// Every JSON output embeds the effective config. Throws mcate::Error.
void run(const RunConfig& config);

// Structured error document written to stderr by the CLI.
nlohmann::json error_json(ErrorKind kind, const std::string& message);

}  // namespace mcate

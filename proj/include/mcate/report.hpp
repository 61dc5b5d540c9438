#pragma once

#include "mcate/config.hpp"
#include "mcate/dataset.hpp"
#include "mcate/estimators.hpp"
#include "mcate/inference.hpp"
#include "mcate/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mcate {

struct AnalysisRow {
  EstimateRecord record;
  IntervalEstimate interval;
};

struct NamedTest {
  std::string name;  // "ancova" or the estimator behind a homogeneity test
  TestResult result;
};

nlohmann::json to_json(const AnalysisRow& row, const TrialDataset& data);
nlohmann::json to_json(const NamedTest& test);
nlohmann::json to_json(const TrueAte& truth);
nlohmann::json to_json(const StudyReport& report);
nlohmann::json dataset_summary(const TrialDataset& data);

// Forest-plot table: center, estimator, estimate, ci_low, ci_high.
std::string estimates_csv(const std::vector<AnalysisRow>& rows, const TrialDataset& data);

// One block per metric (bias, mse, coverage, avg_se, avg_ci_width,
// empirical_sd): rows are centers, columns are estimators.
std::string study_csv(const StudyReport& report);

// Shortest round-trip decimal form.
std::string format_number(double value);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace mcate

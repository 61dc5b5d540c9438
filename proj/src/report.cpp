#include "mcate/report.hpp"

#include "mcate/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mcate {

using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, result.ptr};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const AnalysisRow& row, const TrialDataset& data) {
  const auto& r = row.record;
  json j = {{"center", r.estimand.center},
            {"center_label", data.center_labels.at(static_cast<std::size_t>(r.estimand.center - 1))},
            {"estimator", to_string(r.estimator)},
            {"arm", r.estimand.arm},
            {"reference_arm", r.estimand.reference_arm ? json(*r.estimand.reference_arm) : json(nullptr)},
            {"estimate", row.interval.value},
            {"se", row.interval.se},
            {"ci_low", row.interval.ci_low},
            {"ci_high", row.interval.ci_high},
            {"alpha", row.interval.alpha},
            {"method", to_string(row.interval.method)}};
  if (r.clipped_weights > 0) j["clipped_weights"] = r.clipped_weights;
  return j;
}

json to_json(const NamedTest& test) {
  const auto& t = test.result;
  return {{"name", test.name},
          {"test", to_string(t.test)},
          {"statistic", t.statistic},
          {"df", t.df},
          {"df_denominator", optional_number(t.df_denominator)},
          {"p_value", t.p_value}};
}

json to_json(const TrueAte& truth) {
  json centers = json::array();
  for (Eigen::Index c = 0; c < truth.value.size(); ++c) {
    centers.push_back({{"center", c + 1},
                       {"true_ate", truth.value(c)},
                       {"mc_se", truth.mc_se(c)},
                       {"frequency", truth.frequency(c)}});
  }
  return {{"draws", truth.draws}, {"seed", truth.seed}, {"centers", centers}};
}

json to_json(const StudyReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"estimator", to_string(c.estimator)},
                     {"center", c.center},
                     {"truth", c.truth},
                     {"mean_estimate", c.mean_estimate},
                     {"bias", c.bias},
                     {"mse", c.mse},
                     {"coverage", c.coverage},
                     {"avg_se", c.avg_se},
                     {"avg_ci_width", c.avg_ci_width},
                     {"empirical_sd", optional_number(c.empirical_sd)},
                     {"avg_n_c", c.avg_n_c}});
  }
  return {{"replicates", report.replicates},
          {"seed", report.options.seed},
          {"failures", report.failures},
          {"failure_messages", report.failure_messages},
          {"generator", report.generator},
          {"alpha", report.options.alpha},
          {"truth", to_json(report.truth)},
          {"cells", cells}};
}

json dataset_summary(const TrialDataset& data) {
  const CellCounts counts = count_cells(data);
  json cells = json::array();
  for (int c = 1; c <= data.m(); ++c) {
    json per_arm = json::object();
    for (std::size_t j = 0; j < counts.arms.size(); ++j)
      per_arm[std::to_string(counts.arms[j])] = counts.counts(c - 1, static_cast<Eigen::Index>(j));
    cells.push_back({{"center", c},
                     {"label", data.center_labels[static_cast<std::size_t>(c - 1)]},
                     {"n", counts.center_sizes(c - 1)},
                     {"arms", per_arm}});
  }
  return {{"n", data.n()},
          {"m", data.m()},
          {"covariates", data.covariate_names},
          {"dropped_rows", data.dropped_rows},
          {"centers", cells}};
}

std::string estimates_csv(const std::vector<AnalysisRow>& rows, const TrialDataset& data) {
  std::ostringstream out;
  out << "center,estimator,estimate,ci_low,ci_high\n";
  for (const auto& row : rows) {
    out << csv_field(data.center_labels.at(static_cast<std::size_t>(row.record.estimand.center - 1))) << ','
        << to_string(row.record.estimator) << ',' << format_number(row.interval.value) << ','
        << format_number(row.interval.ci_low) << ',' << format_number(row.interval.ci_high) << '\n';
  }
  return out.str();
}

std::string study_csv(const StudyReport& report) {
  std::vector<Estimator> estimators = report.options.estimators;
  const int m = report.scenario.m;
  std::ostringstream out;
  out << "metric,center,avg_n_c,true_ate";
  for (auto e : estimators) out << ',' << to_string(e);
  out << '\n';
  const std::vector<std::pair<const char*, std::optional<double> (*)(const StudyCell&)>> metrics = {
      {"bias", [](const StudyCell& c) -> std::optional<double> { return c.bias; }},
      {"mse", [](const StudyCell& c) -> std::optional<double> { return c.mse; }},
      {"coverage", [](const StudyCell& c) -> std::optional<double> { return c.coverage; }},
      {"avg_se", [](const StudyCell& c) -> std::optional<double> { return c.avg_se; }},
      {"avg_ci_width", [](const StudyCell& c) -> std::optional<double> { return c.avg_ci_width; }},
      {"empirical_sd", [](const StudyCell& c) { return c.empirical_sd; }},
  };
  for (const auto& [name, get] : metrics) {
    for (int c = 1; c <= m; ++c) {
      const auto& first = report.cell(estimators.front(), c);
      out << name << ',' << c << ',' << format_number(first.avg_n_c) << ',' << format_number(first.truth);
      for (auto e : estimators) {
        const auto v = get(report.cell(e, c));
        out << ',' << (v ? format_number(*v) : "");
      }
      out << '\n';
    }
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::usage, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::usage, "failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace mcate

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mcate {

// Rows of (X, C, A, Y) from a multicenter trial. Centers are stored densely as
// 1..m in first-appearance order; center_labels[c - 1] is the original label.
struct TrialDataset {
  Eigen::MatrixXd covariates;  // n x p
  std::vector<std::string> covariate_names;
  Eigen::VectorXi center;  // 1..m
  Eigen::VectorXi arm;
  Eigen::VectorXd outcome;
  std::vector<std::string> center_labels;

  // Ingestion metadata: rows removed by listwise deletion.
  std::size_t dropped_rows = 0;

  Eigen::Index n() const { return outcome.size(); }
  int m() const { return static_cast<int>(center_labels.size()); }
  Eigen::Index p() const { return covariates.cols(); }

  // Distinct arm values, ascending.
  std::vector<int> arms() const;
  std::optional<Eigen::Index> covariate_index(const std::string& name) const;
  // Number of rows in center c.
  Eigen::Index center_size(int c) const;
};

// Builds a dataset from raw columns, relabeling centers by first appearance.
TrialDataset make_dataset(Eigen::MatrixXd covariates, std::vector<std::string> covariate_names,
                          const std::vector<std::string>& center_labels, Eigen::VectorXi arm,
                          Eigen::VectorXd outcome);

// Same, for integer center labels.
TrialDataset make_dataset(Eigen::MatrixXd covariates, std::vector<std::string> covariate_names,
                          const Eigen::VectorXi& center_labels, Eigen::VectorXi arm,
                          Eigen::VectorXd outcome);

// Rows `rows` of `data`, in the given order (repeats allowed). Center numbers
// and labels are kept, so a center may end up with no rows.
TrialDataset select_rows(const TrialDataset& data, const std::vector<Eigen::Index>& rows);

struct CsvSchema {
  std::string center_col = "center";
  std::string arm_col = "arm";
  std::string outcome_col = "outcome";
  // Empty means "all remaining columns".
  std::vector<std::string> covariate_cols;
  bool drop_incomplete_rows = false;
};

TrialDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
TrialDataset parse_csv(const std::string& text, const CsvSchema& schema);

// Writes the dataset with the schema's column names; numbers are printed in
// shortest round-trip form so that load_csv recovers them bit-exactly.
void write_csv(const TrialDataset& data, const std::filesystem::path& path, const CsvSchema& schema);
std::string format_csv(const TrialDataset& data, const CsvSchema& schema);

struct CellCounts {
  std::vector<int> arms;         // column order of `counts`
  Eigen::MatrixXi counts;        // m x |arms|; counts(c - 1, j) = n_{c, arms[j]}
  Eigen::VectorXi center_sizes;  // n_c
};

CellCounts count_cells(const TrialDataset& data);

// Throws ErrorKind::positivity listing every empty (center, arm) pair.
CellCounts validate_positivity(const TrialDataset& data);

}  // namespace mcate

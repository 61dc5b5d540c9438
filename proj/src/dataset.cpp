#include "mcate/dataset.hpp"

#include "mcate/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mcate {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::config: return "config";
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::empty_input: return "empty_input";
    case ErrorKind::positivity: return "positivity";
    case ErrorKind::spec: return "spec";
    case ErrorKind::shape: return "shape";
    case ErrorKind::empty_fit: return "empty_fit";
    case ErrorKind::degenerate_fit: return "degenerate_fit";
    case ErrorKind::division: return "division";
    case ErrorKind::comparator: return "comparator";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::bootstrap: return "bootstrap";
    case ErrorKind::test: return "test";
    case ErrorKind::saturated: return "saturated";
    case ErrorKind::no_donor: return "no_donor";
    case ErrorKind::study: return "study";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::config:
    case ErrorKind::spec:
    case ErrorKind::parameter:
      return 1;
    case ErrorKind::schema:
    case ErrorKind::parse:
    case ErrorKind::empty_input:
    case ErrorKind::positivity:
    case ErrorKind::no_donor:
      return 2;
    default:
      return 3;
  }
}

std::vector<int> TrialDataset::arms() const {
  std::set<int> seen(arm.data(), arm.data() + arm.size());
  return {seen.begin(), seen.end()};
}

std::optional<Eigen::Index> TrialDataset::covariate_index(const std::string& name) const {
  auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end()) return std::nullopt;
  return static_cast<Eigen::Index>(std::distance(covariate_names.begin(), it));
}

Eigen::Index TrialDataset::center_size(int c) const { return (center.array() == c).count(); }

TrialDataset make_dataset(Eigen::MatrixXd covariates, std::vector<std::string> covariate_names,
                          const std::vector<std::string>& center_labels, Eigen::VectorXi arm,
                          Eigen::VectorXd outcome) {
  const auto n = outcome.size();
  if (n == 0) throw Error(ErrorKind::empty_input, "dataset has no rows");
  if (covariates.rows() != n || arm.size() != n || static_cast<Eigen::Index>(center_labels.size()) != n)
    throw Error(ErrorKind::shape, "dataset columns have different lengths");
  if (covariates.cols() != static_cast<Eigen::Index>(covariate_names.size()))
    throw Error(ErrorKind::shape, "covariate names do not match covariate columns");

  TrialDataset data;
  data.covariates = std::move(covariates);
  data.covariate_names = std::move(covariate_names);
  data.arm = std::move(arm);
  data.outcome = std::move(outcome);
  data.center.resize(n);
  std::unordered_map<std::string, int> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [it, inserted] = ids.try_emplace(center_labels[i], static_cast<int>(ids.size()) + 1);
    if (inserted) data.center_labels.push_back(center_labels[i]);
    data.center(i) = it->second;
  }
  return data;
}

TrialDataset make_dataset(Eigen::MatrixXd covariates, std::vector<std::string> covariate_names,
                          const Eigen::VectorXi& center_labels, Eigen::VectorXi arm,
                          Eigen::VectorXd outcome) {
  std::vector<std::string> labels(center_labels.size());
  for (Eigen::Index i = 0; i < center_labels.size(); ++i) labels[i] = std::to_string(center_labels(i));
  return make_dataset(std::move(covariates), std::move(covariate_names), labels, std::move(arm),
                      std::move(outcome));
}

TrialDataset select_rows(const TrialDataset& data, const std::vector<Eigen::Index>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  TrialDataset out;
  out.covariates.resize(n, data.p());
  out.covariate_names = data.covariate_names;
  out.center.resize(n);
  out.arm.resize(n);
  out.outcome.resize(n);
  out.center_labels = data.center_labels;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = rows[static_cast<std::size_t>(k)];
    if (i < 0 || i >= data.n()) throw Error(ErrorKind::shape, "row index out of range");
    out.covariates.row(k) = data.covariates.row(i);
    out.center(k) = data.center(i);
    out.arm(k) = data.arm(i);
    out.outcome(k) = data.outcome(i);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".";
}

template <typename T>
bool parse_number(const std::string& cell, T& out) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string describe(std::size_t line_no, const std::string& column) {
  std::ostringstream os;
  os << "row " << line_no << ", column '" << column << "'";
  return os.str();
}

}  // namespace

TrialDataset parse_csv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (header.empty()) {
      if (trim(line).empty()) continue;
      header = split_csv_line(line);
      for (auto& h : header) h = trim(h);
      continue;
    }
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
    line_numbers.push_back(line_no);
  }
  if (header.empty()) throw Error(ErrorKind::empty_input, "CSV input is empty");

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::schema, "missing column '" + name + "'");
    return static_cast<std::size_t>(std::distance(header.begin(), it));
  };
  const auto center_idx = column_of(schema.center_col);
  const auto arm_idx = column_of(schema.arm_col);
  const auto outcome_idx = column_of(schema.outcome_col);
  std::vector<std::size_t> cov_idx;
  std::vector<std::string> cov_names;
  if (schema.covariate_cols.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == center_idx || j == arm_idx || j == outcome_idx) continue;
      cov_idx.push_back(j);
      cov_names.push_back(header[j]);
    }
  } else {
    for (const auto& name : schema.covariate_cols) {
      cov_idx.push_back(column_of(name));
      cov_names.push_back(name);
    }
  }
  if (cov_idx.empty()) throw Error(ErrorKind::schema, "schema names no covariate columns");
  if (rows.empty()) throw Error(ErrorKind::empty_input, "CSV input has a header but no data rows");

  const auto p = static_cast<Eigen::Index>(cov_idx.size());
  std::vector<double> x_values;
  std::vector<int> arms;
  std::vector<double> outcomes;
  std::vector<std::string> centers;
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& cells = rows[r];
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::parse, "row " + std::to_string(line_numbers[r]) + " has " +
                                        std::to_string(cells.size()) + " cells, header has " +
                                        std::to_string(header.size()));
    }
    for (auto& c : cells) c = trim(c);

    bool incomplete = is_missing(cells[center_idx]) || is_missing(cells[arm_idx]) ||
                      is_missing(cells[outcome_idx]);
    for (auto j : cov_idx) incomplete = incomplete || is_missing(cells[j]);
    if (incomplete) {
      if (!schema.drop_incomplete_rows) {
        throw Error(ErrorKind::parse, "row " + std::to_string(line_numbers[r]) +
                                          " has a missing cell (set drop_incomplete_rows to delete such rows)");
      }
      ++dropped;
      continue;
    }

    int a = 0;
    if (!parse_number(cells[arm_idx], a))
      throw Error(ErrorKind::parse, "non-integer arm at " + describe(line_numbers[r], header[arm_idx]));
    double y = 0;
    if (!parse_number(cells[outcome_idx], y))
      throw Error(ErrorKind::parse, "non-numeric value at " + describe(line_numbers[r], header[outcome_idx]));
    for (auto j : cov_idx) {
      double v = 0;
      if (!parse_number(cells[j], v))
        throw Error(ErrorKind::parse, "non-numeric value at " + describe(line_numbers[r], header[j]));
      x_values.push_back(v);
    }
    arms.push_back(a);
    outcomes.push_back(y);
    centers.push_back(cells[center_idx]);
  }
  if (outcomes.empty()) throw Error(ErrorKind::empty_input, "no complete rows remain after deletion");

  const auto n = static_cast<Eigen::Index>(outcomes.size());
  Eigen::MatrixXd x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x_values.data(), n, p);
  auto data = make_dataset(std::move(x), std::move(cov_names), centers,
                           Eigen::Map<const Eigen::VectorXi>(arms.data(), n),
                           Eigen::Map<const Eigen::VectorXd>(outcomes.data(), n));
  data.dropped_rows = dropped;
  return data;
}

TrialDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::usage, "cannot open '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_csv(text, schema);
}

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace

std::string format_csv(const TrialDataset& data, const CsvSchema& schema) {
  std::string out;
  out += quote_if_needed(schema.center_col) + "," + quote_if_needed(schema.arm_col) + "," +
         quote_if_needed(schema.outcome_col);
  for (const auto& name : data.covariate_names) out += "," + quote_if_needed(name);
  out += "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out += quote_if_needed(data.center_labels[data.center(i) - 1]);
    out += "," + std::to_string(data.arm(i)) + ",";
    append_double(out, data.outcome(i));
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      out += ",";
      append_double(out, data.covariates(i, j));
    }
    out += "\n";
  }
  return out;
}

void write_csv(const TrialDataset& data, const std::filesystem::path& path, const CsvSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::usage, "cannot write '" + path.string() + "'");
  out << format_csv(data, schema);
}

CellCounts count_cells(const TrialDataset& data) {
  CellCounts cells;
  cells.arms = data.arms();
  const int m = data.m();
  cells.counts = Eigen::MatrixXi::Zero(m, static_cast<Eigen::Index>(cells.arms.size()));
  cells.center_sizes = Eigen::VectorXi::Zero(m);
  std::map<int, Eigen::Index> column;
  for (std::size_t j = 0; j < cells.arms.size(); ++j) column[cells.arms[j]] = static_cast<Eigen::Index>(j);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    cells.counts(data.center(i) - 1, column[data.arm(i)]) += 1;
    cells.center_sizes(data.center(i) - 1) += 1;
  }
  return cells;
}

CellCounts validate_positivity(const TrialDataset& data) {
  auto cells = count_cells(data);
  std::string missing;
  for (Eigen::Index c = 0; c < cells.counts.rows(); ++c) {
    for (Eigen::Index j = 0; j < cells.counts.cols(); ++j) {
      if (cells.counts(c, j) > 0) continue;
      if (!missing.empty()) missing += ", ";
      missing += "(" + std::to_string(c + 1) + ", " + std::to_string(cells.arms[j]) + ")";
    }
  }
  if (!missing.empty()) throw Error(ErrorKind::positivity, "empty (center, arm) cells: " + missing);
  return cells;
}

}  // namespace mcate

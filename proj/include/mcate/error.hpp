#pragma once

#include <stdexcept>
#include <string>

namespace mcate {

// Failure categories. Each maps to one CLI exit code (see exit_code()).
enum class ErrorKind {
  usage,              // bad flags / config values
  config,             // missing nuisance model, inconsistent estimator setup
  schema,             // CSV column mapping does not match the file
  parse,              // non-numeric or malformed cell
  empty_input,        // no data rows
  positivity,         // empty (center, arm) cell
  spec,               // design-spec problems (unknown covariate, non-nested specs)
  shape,              // dimension mismatch between a fit and new rows
  empty_fit,          // zero rows handed to a fitter
  degenerate_fit,     // a category/class never observed
  division,           // zero probability in a weight denominator
  comparator,         // the arm column aliased in a comparator regression
  insufficient_data,  // too few observations for a variance estimate
  parameter,          // alpha outside (0,1), B < 2, ...
  bootstrap,          // too many failed resamples
  test,               // singular covariance in a Wald test
  saturated,          // no residual degrees of freedom
  no_donor,           // transport estimator without other centers
  study,              // too many failed simulation replicates
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// 1 usage/config, 2 data/validation, 3 numerical failure.
int exit_code(ErrorKind kind);

}  // namespace mcate

#pragma once

#include <Eigen/Dense>

#include <cmath>

#include <string>
#include <vector>

namespace mcate {

// Columns of `design` that are linearly independent of the columns before them,
// scanned left to right (the R `lm` convention: later aliased columns drop).
// A column is aliased when its residual after projection onto the kept columns
// has norm <= tolerance * its own norm.
std::vector<Eigen::Index> independent_columns(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                              double tolerance = 1e-7);

struct LinearFit {
  Eigen::VectorXd coefficients;  // one per design column; aliased columns hold 0
  std::vector<Eigen::Index> dropped_columns;
  double rss = 0.0;
  Eigen::Index df_residual = 0;
  Eigen::Index rank = 0;
};

LinearFit fit_ols(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y);

// Homoskedastic coefficient covariance sigma^2 (X'X)^-1 over the retained
// columns, embedded in a p x p matrix with zero rows/columns for dropped ones.
Eigen::MatrixXd ols_covariance(const Eigen::Ref<const Eigen::MatrixXd>& design, const LinearFit& fit);

struct LogisticOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-10;
  // Converged once an accepted Newton step moves no coefficient by more than
  // step_tolerance * (1 + max |coefficient|).
  double step_tolerance = 1e-9;
  double separation_bound = 1e3;
  double ridge = 0.0;  // added to the Newton information diagonal when > 0
};

struct LogisticFit {
  Eigen::VectorXd coefficients;
  std::vector<Eigen::Index> dropped_columns;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;  // value after each accepted step, starting at beta = 0
  bool separation_warning = false;
};

// Bernoulli maximum likelihood by IRLS with step-halving; y must be 0/1.
LogisticFit fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                         const LogisticOptions& options = {});

struct MultinomialOptions {
  int max_iterations = 200;
  double score_tolerance = 1e-10;
  // Converged once an accepted Newton step moves no coefficient by more than
  // step_tolerance * (1 + max |coefficient|).
  double step_tolerance = 1e-9;
  double ridge = 0.0;
};

struct MultinomialFit {
  // (m - 1) x k; row j holds the coefficients of category j + 2. Category 1
  // is the reference with linear predictor 0.
  Eigen::MatrixXd coefficients;
  std::vector<Eigen::Index> dropped_columns;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;
  std::string warning;
};

// Multinomial logit maximum likelihood by Newton's method with step-halving.
// `category` takes values 1..m and every category must occur.
MultinomialFit fit_multinomial(const Eigen::Ref<const Eigen::MatrixXd>& design,
                               const Eigen::Ref<const Eigen::VectorXi>& category, int categories,
                               const MultinomialOptions& options = {});

Eigen::VectorXd predict(const LinearFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& rows);
Eigen::VectorXd predict(const LogisticFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& rows);
// n x m matrix of category probabilities.
Eigen::MatrixXd predict(const MultinomialFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& rows);

inline double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Row-wise softmax over (0, eta_1, ..., eta_{m-1}).
Eigen::MatrixXd reference_softmax(const Eigen::Ref<const Eigen::MatrixXd>& eta);

}  // namespace mcate

#pragma once

#include "mcate/dataset.hpp"
#include "mcate/estimators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcate {

enum class Strength { baseline, strong };
// Which membership slope the strong scenario doubles (the outcome interaction
// is doubled in both cases).
enum class StrongDoubles { x1, x3 };

const char* to_string(Strength strength);
const char* to_string(StrongDoubles doubles);
Strength parse_strength(const std::string& name);
StrongDoubles parse_strong_doubles(const std::string& name);

struct Scenario {
  Eigen::Index n = 1000;
  int m = 10;
  // Row k - 2 holds beta_k = (intercept, slopes...) for center k = 2..m.
  Eigen::MatrixXd membership_coeffs;
  double outcome_intercept = 161.0;
  Eigen::VectorXd outcome_slopes;  // one per covariate
  double arm_effect = -43.0;
  Eigen::VectorXd arm_interaction;  // X_j x A coefficients
  double noise_sd = 36.0;
  double arm_prob = 0.5;
  Strength strength = Strength::baseline;
  StrongDoubles strong_doubles = StrongDoubles::x1;

  // The published design: 10 centers, three standard normal covariates.
  static Scenario paper(Strength strength = Strength::baseline);

  Eigen::Index p() const { return membership_coeffs.cols() - 1; }
  // Coefficients after applying the strength setting.
  Eigen::MatrixXd effective_membership() const;
  Eigen::VectorXd effective_interaction() const;
  std::vector<std::string> covariate_names() const;  // x1..xp

  // Throws ErrorKind::parameter on inconsistent shapes or values.
  void validate() const;
};

// Center probabilities (reference softmax, center 1 first) at covariate row x.
Eigen::VectorXd center_probabilities(const Scenario& scenario, const Eigen::Ref<const Eigen::VectorXd>& x);

// One simulated trial of scenario.n rows. Arms are 0 / 1; centers keep their
// generating labels 1..m even when a center happens to be empty.
TrialDataset generate_dataset(const Scenario& scenario, std::uint64_t seed);

struct TrueAte {
  Eigen::VectorXd value;  // per center
  Eigen::VectorXd mc_se;
  Eigen::VectorXd frequency;  // share of draws in each center
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
};

// Monte Carlo oracle: averages arm_effect + interaction'X over `draws`
// simulated (X, C) pairs, per sampled center. Results are cached per
// (scenario, draws, seed) for the lifetime of the process.
TrueAte true_center_ate(const Scenario& scenario, std::int64_t draws = 10'000'000, std::uint64_t seed = 20211,
                        unsigned threads = 0);

// Per-estimator nuisance models used inside each replicate.
struct StudyNuisances {
  NuisanceConfig phi;
  NuisanceConfig psi;
  NuisanceConfig chi;
};

// Main-effects outcome models; phi adds center indicators; intercept-only
// logistic treatment models; main-effects membership model.
StudyNuisances default_study_nuisances(const std::vector<std::string>& covariates);

struct StudyOptions {
  int replicates = 1000;
  std::uint64_t seed = 1;
  std::vector<Estimator> estimators = {Estimator::tau,    Estimator::phi, Estimator::psi,
                                       Estimator::pooled, Estimator::fe1, Estimator::fe2};
  double alpha = 0.05;
  unsigned threads = 0;
  std::int64_t oracle_draws = 10'000'000;
  std::uint64_t oracle_seed = 20211;
  std::optional<StudyNuisances> nuisances;  // default_study_nuisances when unset
};

struct StudyCell {
  Estimator estimator = Estimator::tau;
  int center = 1;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double coverage = 0.0;
  double avg_se = 0.0;
  double avg_ci_width = 0.0;
  std::optional<double> empirical_sd;  // absent with a single replicate
  double avg_n_c = 0.0;
};

struct StudyReport {
  Scenario scenario;
  StudyOptions options;
  TrueAte truth;
  int replicates = 0;  // requested
  int failures = 0;    // excluded replicates
  std::vector<std::string> failure_messages;
  std::string generator;
  std::vector<StudyCell> cells;  // estimator-major, then center

  const StudyCell& cell(Estimator estimator, int center) const;
};

// Runs the Monte Carlo study. Replicate r draws its data from
// derive_seed(options.seed, r); a replicate in which any estimator fails is
// excluded and counted. More than 2% failures throws ErrorKind::study.
StudyReport run_study(const Scenario& scenario, const StudyOptions& options = {});

}  // namespace mcate

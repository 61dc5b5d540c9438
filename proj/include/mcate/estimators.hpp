#pragma once

#include "mcate/dataset.hpp"
#include "mcate/design.hpp"
#include "mcate/glm.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mcate {

enum class Estimator { tau, phi, psi, chi, phi_ipw, phi_om, psi_ipw, psi_om, pooled, fe1, fe2 };
enum class Variant { dr, ipw, om };

const char* to_string(Estimator estimator);
Estimator parse_estimator(const std::string& name);
bool is_comparator(Estimator estimator);

// Randomization probabilities fixed by design: probability(c - 1, j) is
// Pr[A = arms[j] | C = c].
struct KnownProbabilities {
  std::vector<int> arms;
  Eigen::MatrixXd probability;

  // Same arm probabilities in all m centers.
  static KnownProbabilities common(int m, std::vector<int> arms, const std::vector<double>& probs);
  Eigen::Index arm_column(int arm) const;
  // True when every center uses the same probability for `arm`.
  bool constant_across_centers(int arm) const;
};

struct NuisanceConfig {
  // Outcome regression, fit separately within each arm.
  DesignSpec outcome_spec;
  // Treatment model: a logistic (or, for > 2 arms, multinomial) design, or
  // known probabilities.
  std::variant<DesignSpec, KnownProbabilities> treatment = intercept_only();
  // Center-membership model (psi and chi).
  std::optional<DesignSpec> membership_spec;
  // psi: Pr[A = a | X] as the membership-weighted mixture of known per-center
  // probabilities.
  bool treatment_decomposition = false;
  // Lower clip for estimated treatment probabilities; 0 disables clipping.
  double weight_floor = 0.0;
  LogisticOptions logistic;
  MultinomialOptions multinomial;
};

struct Estimand {
  int center = 1;
  int arm = 1;
  std::optional<int> reference_arm;  // set for contrasts

  bool is_contrast() const { return reference_arm.has_value(); }
};

struct EstimateRecord {
  Estimand estimand;
  Estimator estimator = Estimator::tau;
  double value = 0.0;
  // Per-observation influence contributions (length n). Empty for comparators.
  Eigen::VectorXd influence;
  // Comparators only: homoskedastic OLS standard error of the arm coefficient.
  std::optional<double> model_se;
  // Observations whose treatment probability was raised to the weight floor.
  Eigen::Index clipped_weights = 0;

  bool has_influence() const { return influence.size() > 0; }
};

// Nuisance predictions for one arm, evaluated at every row of the dataset.
struct CenterAwareNuisances {
  Eigen::VectorXd outcome;    // g_a(X_i, C_i)
  Eigen::VectorXd treatment;  // e_a(X_i, C_i)
};

struct PooledNuisances {
  Eigen::VectorXd outcome;     // g~_a(X_i)
  Eigen::VectorXd treatment;   // e~_a(X_i)
  Eigen::MatrixXd membership;  // p_c(X_i), n x m
};

// Fitting -------------------------------------------------------------------

Eigen::MatrixXd fit_membership(const TrialDataset& data, const NuisanceConfig& cfg);
CenterAwareNuisances fit_center_aware_nuisances(const TrialDataset& data, int arm, const NuisanceConfig& cfg);
PooledNuisances fit_pooled_nuisances(const TrialDataset& data, int arm, const NuisanceConfig& cfg);
// Pooled nuisances reusing an already fitted membership matrix.
PooledNuisances fit_pooled_nuisances(const TrialDataset& data, int arm, const NuisanceConfig& cfg,
                                     const Eigen::MatrixXd& membership);

// Estimators from fixed nuisance predictions ---------------------------------

EstimateRecord phi_from_nuisances(const TrialDataset& data, int center, int arm, const CenterAwareNuisances& nuisances,
                                  Variant variant = Variant::dr, double weight_floor = 0.0);
EstimateRecord psi_from_nuisances(const TrialDataset& data, int center, int arm, const PooledNuisances& nuisances,
                                  Variant variant = Variant::dr, double weight_floor = 0.0);
// `donor_outcome` = g_a fit on rows outside `center`; `donor_treatment` =
// Pr[A = a | X, C != center]; `membership` = Pr[C = center | X].
EstimateRecord chi_from_nuisances(const TrialDataset& data, int center, int arm,
                                  const Eigen::Ref<const Eigen::VectorXd>& donor_outcome,
                                  const Eigen::Ref<const Eigen::VectorXd>& donor_treatment,
                                  const Eigen::Ref<const Eigen::VectorXd>& membership, double weight_floor = 0.0);

// Estimators that fit their own nuisances -----------------------------------

EstimateRecord estimate_tau(const TrialDataset& data, int center, int arm);
EstimateRecord estimate_phi(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg,
                            Variant variant = Variant::dr);
EstimateRecord estimate_psi(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg,
                            Variant variant = Variant::dr);
EstimateRecord estimate_chi(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg);

// mean(c, a) - mean(c, a'); influence vectors are differenced elementwise.
EstimateRecord contrast(const EstimateRecord& treated, const EstimateRecord& reference);

EstimateRecord estimate_contrast(const TrialDataset& data, Estimator estimator, int center, int arm, int reference_arm,
                                 const NuisanceConfig& cfg = {});

// Contrasts for every center, fitting shared nuisances once. Comparators
// return the same value for every center.
std::vector<EstimateRecord> estimate_all_centers(const TrialDataset& data, Estimator estimator, int arm,
                                                 int reference_arm, const NuisanceConfig& cfg = {},
                                                 const std::vector<std::string>& fe2_covariates = {});

// Arm coefficient contrast from the pooled / FE1 / FE2 OLS regressions. FE2
// adjusts for `fe2_covariates`, or for every covariate when empty.
struct ComparatorResult {
  double value = 0.0;
  double se = 0.0;
};
ComparatorResult estimate_comparator(const TrialDataset& data, Estimator which, int arm, int reference_arm,
                                     const std::vector<std::string>& fe2_covariates = {});

}  // namespace mcate

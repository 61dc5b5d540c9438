#pragma once

#include "mcate/dataset.hpp"
#include "mcate/design.hpp"
#include "mcate/estimators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace mcate {

enum class IntervalMethod { influence_curve, bootstrap, ols };
const char* to_string(IntervalMethod method);

struct IntervalEstimate {
  double value = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double alpha = 0.05;
  IntervalMethod method = IntervalMethod::influence_curve;
};

// sqrt(sample variance (divisor n - 1) of the contributions / n).
double se_from_influence(const Eigen::Ref<const Eigen::VectorXd>& influence);

IntervalEstimate wald_ci(double value, double se, double alpha = 0.05,
                         IntervalMethod method = IntervalMethod::influence_curve);

// Wald interval for a record: influence-curve SE when the record carries an
// influence vector, otherwise the comparator's OLS SE.
IntervalEstimate interval_for(const EstimateRecord& record, double alpha = 0.05);

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  unsigned threads = 0;  // 0: hardware concurrency
  double max_failure_fraction = 0.10;
};

struct BootstrapResult {
  IntervalEstimate interval;
  int failures = 0;
  Eigen::VectorXd replicate_values;  // successful replicates, in replicate order
};

// Nonparametric bootstrap: rows resampled with replacement, `statistic`
// re-evaluated (refitting its nuisances) on each resample. The interval is
// centered at statistic(data). Resample b uses an RNG seeded from (seed, b),
// so results do not depend on the thread count.
BootstrapResult bootstrap_se(const TrialDataset& data, const std::function<double(const TrialDataset&)>& statistic,
                             const BootstrapOptions& options = {});

enum class TestKind { homogeneity_wald, ancova_f };
const char* to_string(TestKind kind);

struct TestResult {
  TestKind test = TestKind::homogeneity_wald;
  double statistic = 0.0;
  double df = 1.0;                           // chi-squared df, or F numerator df
  std::optional<double> df_denominator;      // F only
  double p_value = 1.0;
};

// Wald test of equal contrasts across all centers from per-center records
// (each carrying an influence vector). Center 1 is the reference row of D.
TestResult homogeneity_test(const std::vector<EstimateRecord>& per_center, bool diagonal_covariance = false);

TestResult homogeneity_test(const TrialDataset& data, Estimator estimator, int arm, int reference_arm,
                            const NuisanceConfig& cfg = {});

// F test of `extended` against the nested `base` linear model for Y.
TestResult ancova_center_outcome_test(const TrialDataset& data, const DesignSpec& base, const DesignSpec& extended);

// Default nested pair: base = 1 + X + A + X:A; extended adds C, X:C, A:C.
std::pair<DesignSpec, DesignSpec> default_ancova_specs(const std::vector<std::string>& covariates);

// Deterministic 64-bit seed for stream `index` of `master` (SplitMix64 mix).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace mcate

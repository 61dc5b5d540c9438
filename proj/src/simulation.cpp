#include "mcate/simulation.hpp"

#include "mcate/error.hpp"
#include "mcate/glm.hpp"
#include "mcate/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

namespace mcate {

const char* to_string(Strength strength) {
  return strength == Strength::baseline ? "baseline" : "strong";
}

const char* to_string(StrongDoubles doubles) {
  return doubles == StrongDoubles::x1 ? "x1" : "x3";
}

Strength parse_strength(const std::string& name) {
  if (name == "baseline") return Strength::baseline;
  if (name == "strong") return Strength::strong;
  throw Error(ErrorKind::config, "unknown scenario strength '" + name + "' (expected baseline or strong)");
}

StrongDoubles parse_strong_doubles(const std::string& name) {
  if (name == "x1") return StrongDoubles::x1;
  if (name == "x3") return StrongDoubles::x3;
  throw Error(ErrorKind::config, "unknown strong_doubles '" + name + "' (expected x1 or x3)");
}

Scenario Scenario::paper(Strength strength) {
  Scenario s;
  s.membership_coeffs.resize(9, 4);
  s.membership_coeffs << 0.75, -0.36, -0.14, 0.36,
                         1.03, -0.18, 0.01, 0.18,
                         0.36, -0.32, -0.04, 0.44,
                         0.48, -0.13, -0.18, 0.35,
                         0.75, -0.47, 0.15, 0.34,
                         0.65, -0.42, -0.24, 0.37,
                         0.76, -0.52, -0.12, 0.34,
                         -0.09, -0.40, -0.09, 0.26,
                         1.46, -0.19, -0.16, 0.28;
  s.outcome_slopes = Eigen::Vector3d(62.0, -1.0, -1.0);
  s.arm_interaction = Eigen::Vector3d(-21.0, 0.0, 0.0);
  s.strength = strength;
  return s;
}

Eigen::MatrixXd Scenario::effective_membership() const {
  Eigen::MatrixXd beta = membership_coeffs;
  if (strength == Strength::strong) {
    const Eigen::Index col = strong_doubles == StrongDoubles::x1 ? 1 : 3;
    if (col < beta.cols()) beta.col(col) *= 2.0;
  }
  return beta;
}

Eigen::VectorXd Scenario::effective_interaction() const {
  Eigen::VectorXd gamma = arm_interaction;
  if (strength == Strength::strong && gamma.size() > 0) gamma(0) *= 2.0;
  return gamma;
}

std::vector<std::string> Scenario::covariate_names() const {
  std::vector<std::string> names;
  for (Eigen::Index j = 1; j <= p(); ++j) names.push_back("x" + std::to_string(j));
  return names;
}

void Scenario::validate() const {
  if (n < 1) throw Error(ErrorKind::parameter, "scenario n must be positive");
  if (m < 2) throw Error(ErrorKind::parameter, "scenario needs at least two centers");
  if (membership_coeffs.rows() != m - 1 || membership_coeffs.cols() < 1)
    throw Error(ErrorKind::parameter, "membership coefficients must have m - 1 rows and 1 + p columns");
  if (outcome_slopes.size() != p() || arm_interaction.size() != p())
    throw Error(ErrorKind::parameter, "outcome slopes and arm interactions need one entry per covariate");
  if (!(noise_sd >= 0.0)) throw Error(ErrorKind::parameter, "noise_sd must be non-negative");
  if (!(arm_prob > 0.0 && arm_prob < 1.0)) throw Error(ErrorKind::parameter, "arm_prob must lie in (0, 1)");
  if (!membership_coeffs.allFinite() || !outcome_slopes.allFinite() || !arm_interaction.allFinite())
    throw Error(ErrorKind::parameter, "scenario coefficients must be finite");
}

namespace {

Eigen::VectorXd softmax_row(const Eigen::MatrixXd& beta, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd eta(beta.rows() + 1);
  eta(0) = 0.0;
  eta.tail(beta.rows()) = beta.col(0) + beta.rightCols(beta.cols() - 1) * x;
  const double top = eta.maxCoeff();
  Eigen::VectorXd prob = (eta.array() - top).exp();
  return prob / prob.sum();
}

int draw_center(const Eigen::VectorXd& prob, double u) {
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k < prob.size() - 1; ++k) {
    cumulative += prob(k);
    if (u < cumulative) return static_cast<int>(k) + 1;
  }
  return static_cast<int>(prob.size());
}

}  // namespace

Eigen::VectorXd center_probabilities(const Scenario& scenario, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != scenario.p()) throw Error(ErrorKind::shape, "covariate row has the wrong length");
  return softmax_row(scenario.effective_membership(), x);
}

TrialDataset generate_dataset(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const auto n = scenario.n;
  const auto p = scenario.p();
  const Eigen::MatrixXd beta = scenario.effective_membership();
  const Eigen::VectorXd gamma = scenario.effective_interaction();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::bernoulli_distribution treat(scenario.arm_prob);

  TrialDataset data;
  data.covariates.resize(n, p);
  data.covariate_names = scenario.covariate_names();
  data.center.resize(n);
  data.arm.resize(n);
  data.outcome.resize(n);
  for (int c = 1; c <= scenario.m; ++c) data.center_labels.push_back(std::to_string(c));

  Eigen::VectorXd x(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(j) = normal(rng);
    const int c = draw_center(softmax_row(beta, x), uniform(rng));
    const int a = treat(rng) ? 1 : 0;
    const double e = normal(rng);
    data.covariates.row(i) = x.transpose();
    data.center(i) = c;
    data.arm(i) = a;
    data.outcome(i) = scenario.outcome_intercept + scenario.outcome_slopes.dot(x) +
                      a * (scenario.arm_effect + gamma.dot(x)) + scenario.noise_sd * e;
  }
  return data;
}

namespace {

std::string oracle_key(const Scenario& s, std::int64_t draws, std::uint64_t seed) {
  std::ostringstream key;
  key << std::hexfloat << s.m << '|' << s.effective_membership().reshaped().transpose() << '|' << s.arm_effect << '|'
      << s.effective_interaction().transpose() << '|' << draws << '|' << seed;
  return key.str();
}

struct OracleChunk {
  Eigen::VectorXd count, sum, sum_sq;
};

}  // namespace

TrueAte true_center_ate(const Scenario& scenario, std::int64_t draws, std::uint64_t seed, unsigned threads) {
  scenario.validate();
  if (draws < 1) throw Error(ErrorKind::parameter, "oracle needs at least one draw");

  static std::mutex cache_mutex;
  static std::map<std::string, TrueAte> cache;
  const std::string key = oracle_key(scenario, draws, seed);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  const Eigen::MatrixXd beta = scenario.effective_membership();
  const Eigen::VectorXd gamma = scenario.effective_interaction();
  const int m = scenario.m;
  const auto p = scenario.p();
  constexpr std::int64_t chunk_size = 1 << 18;
  const auto chunks = static_cast<std::size_t>((draws + chunk_size - 1) / chunk_size);
  std::vector<OracleChunk> parts(chunks);

  parallel_for(chunks, threads, [&](std::size_t k) {
    const std::int64_t begin = static_cast<std::int64_t>(k) * chunk_size;
    const std::int64_t end = std::min(draws, begin + chunk_size);
    std::mt19937_64 rng(derive_seed(seed, k));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    OracleChunk part{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
    Eigen::VectorXd x(p);
    for (std::int64_t i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) x(j) = normal(rng);
      const int c = draw_center(softmax_row(beta, x), uniform(rng)) - 1;
      const double effect = scenario.arm_effect + gamma.dot(x);
      part.count(c) += 1.0;
      part.sum(c) += effect;
      part.sum_sq(c) += effect * effect;
    }
    parts[k] = std::move(part);
  });

  Eigen::VectorXd count = Eigen::VectorXd::Zero(m), sum = Eigen::VectorXd::Zero(m), sum_sq = Eigen::VectorXd::Zero(m);
  for (const auto& part : parts) {
    count += part.count;
    sum += part.sum;
    sum_sq += part.sum_sq;
  }

  TrueAte truth;
  truth.draws = draws;
  truth.seed = seed;
  truth.value.resize(m);
  truth.mc_se.resize(m);
  truth.frequency = count / static_cast<double>(draws);
  for (int c = 0; c < m; ++c) {
    if (count(c) == 0.0) throw Error(ErrorKind::insufficient_data, "oracle drew no rows in center " + std::to_string(c + 1));
    const double mean = sum(c) / count(c);
    truth.value(c) = mean;
    const double var = count(c) > 1.0 ? std::max(0.0, (sum_sq(c) - count(c) * mean * mean) / (count(c) - 1.0)) : 0.0;
    truth.mc_se(c) = std::sqrt(var / count(c));
    // An effect that does not vary with X is reported exactly.
    if (gamma.isZero(0.0)) {
      truth.value(c) = scenario.arm_effect;
      truth.mc_se(c) = 0.0;
    }
  }

  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(key, truth);
  return truth;
}

StudyNuisances default_study_nuisances(const std::vector<std::string>& covariates) {
  StudyNuisances cfg;
  cfg.phi.outcome_spec = main_effects(covariates, true);
  cfg.phi.treatment = intercept_only();
  cfg.psi.outcome_spec = main_effects(covariates, false);
  cfg.psi.treatment = intercept_only();
  cfg.psi.membership_spec = main_effects(covariates, false);
  cfg.chi = cfg.psi;
  return cfg;
}

const StudyCell& StudyReport::cell(Estimator estimator, int center) const {
  for (const auto& c : cells) {
    if (c.estimator == estimator && c.center == center) return c;
  }
  throw Error(ErrorKind::usage, std::string("study report has no cell for ") + to_string(estimator) + " at center " +
                                    std::to_string(center));
}

namespace {

struct ReplicateOutcome {
  bool ok = false;
  std::string message;
  Eigen::MatrixXd value, se, low, high;  // estimators x centers
  Eigen::VectorXd n_c;
};

}  // namespace

StudyReport run_study(const Scenario& scenario, const StudyOptions& options) {
  scenario.validate();
  if (options.replicates < 1) throw Error(ErrorKind::parameter, "study needs at least one replicate");
  if (options.estimators.empty()) throw Error(ErrorKind::parameter, "study needs at least one estimator");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error(ErrorKind::parameter, "alpha must lie in (0, 1)");

  StudyReport report;
  report.scenario = scenario;
  report.options = options;
  report.replicates = options.replicates;
  report.generator = "mt19937_64; replicate r seeded with SplitMix64(master_seed, r)";
  report.truth = true_center_ate(scenario, options.oracle_draws, options.oracle_seed, options.threads);

  const StudyNuisances nuisances = options.nuisances ? *options.nuisances : default_study_nuisances(scenario.covariate_names());
  const int m = scenario.m;
  const auto n_est = static_cast<Eigen::Index>(options.estimators.size());
  const auto reps = static_cast<std::size_t>(options.replicates);
  std::vector<ReplicateOutcome> outcomes(reps);

  parallel_for(reps, options.threads, [&](std::size_t r) {
    ReplicateOutcome& out = outcomes[r];
    out.value.resize(n_est, m);
    out.se.resize(n_est, m);
    out.low.resize(n_est, m);
    out.high.resize(n_est, m);
    out.n_c.resize(m);
    try {
      const TrialDataset data = generate_dataset(scenario, derive_seed(options.seed, r));
      for (int c = 1; c <= m; ++c) out.n_c(c - 1) = static_cast<double>(data.center_size(c));
      for (Eigen::Index e = 0; e < n_est; ++e) {
        const Estimator est = options.estimators[static_cast<std::size_t>(e)];
        const NuisanceConfig& cfg = est == Estimator::chi ? nuisances.chi
                                    : (est == Estimator::psi || est == Estimator::psi_ipw || est == Estimator::psi_om)
                                        ? nuisances.psi
                                        : nuisances.phi;
        const auto records = estimate_all_centers(data, est, 1, 0, cfg);
        for (int c = 0; c < m; ++c) {
          const auto interval = interval_for(records[static_cast<std::size_t>(c)], options.alpha);
          out.value(e, c) = interval.value;
          out.se(e, c) = interval.se;
          out.low(e, c) = interval.ci_low;
          out.high(e, c) = interval.ci_high;
        }
      }
      out.ok = out.value.allFinite() && out.se.allFinite();
      if (!out.ok) out.message = "non-finite estimate";
    } catch (const Error& err) {
      out.ok = false;
      out.message = err.what();
    }
  });

  std::vector<const ReplicateOutcome*> kept;
  for (std::size_t r = 0; r < reps; ++r) {
    if (outcomes[r].ok) {
      kept.push_back(&outcomes[r]);
    } else {
      ++report.failures;
      report.failure_messages.push_back("replicate " + std::to_string(r) + ": " + outcomes[r].message);
    }
  }
  if (static_cast<double>(report.failures) > 0.02 * static_cast<double>(reps))
    throw Error(ErrorKind::study, std::to_string(report.failures) + " of " + std::to_string(reps) +
                                      " replicates failed; first: " + report.failure_messages.front());

  const auto r_ok = static_cast<double>(kept.size());
  Eigen::VectorXd avg_n_c = Eigen::VectorXd::Zero(m);
  for (const auto* out : kept) avg_n_c += out->n_c;
  avg_n_c /= r_ok;

  for (Eigen::Index e = 0; e < n_est; ++e) {
    for (int c = 0; c < m; ++c) {
      const double truth = report.truth.value(c);
      double sum = 0.0, sum_err_sq = 0.0, covered = 0.0, se = 0.0, width = 0.0;
      for (const auto* out : kept) {
        const double v = out->value(e, c);
        sum += v;
        sum_err_sq += (v - truth) * (v - truth);
        if (out->low(e, c) <= truth && truth <= out->high(e, c)) covered += 1.0;
        se += out->se(e, c);
        width += out->high(e, c) - out->low(e, c);
      }
      StudyCell cell;
      cell.estimator = options.estimators[static_cast<std::size_t>(e)];
      cell.center = c + 1;
      cell.truth = truth;
      cell.mean_estimate = sum / r_ok;
      cell.bias = cell.mean_estimate - truth;
      cell.mse = sum_err_sq / r_ok;
      cell.coverage = covered / r_ok;
      cell.avg_se = se / r_ok;
      cell.avg_ci_width = width / r_ok;
      cell.avg_n_c = avg_n_c(c);
      if (kept.size() > 1) {
        double ss = 0.0;
        for (const auto* out : kept) ss += (out->value(e, c) - cell.mean_estimate) * (out->value(e, c) - cell.mean_estimate);
        cell.empirical_sd = std::sqrt(ss / (r_ok - 1.0));
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

}  // namespace mcate

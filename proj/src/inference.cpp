#include "mcate/inference.hpp"

#include "mcate/error.hpp"
#include "mcate/glm.hpp"
#include "mcate/special_functions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace mcate {

const char* to_string(IntervalMethod method) {
  switch (method) {
    case IntervalMethod::influence_curve: return "influence_curve";
    case IntervalMethod::bootstrap: return "bootstrap";
    case IntervalMethod::ols: return "ols";
  }
  return "unknown";
}

const char* to_string(TestKind kind) {
  switch (kind) {
    case TestKind::homogeneity_wald: return "homogeneity_wald";
    case TestKind::ancova_f: return "ancova_f";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

double se_from_influence(const Eigen::Ref<const Eigen::VectorXd>& influence) {
  const auto n = influence.size();
  if (n < 2) throw Error(ErrorKind::insufficient_data, "influence-curve SE needs at least two observations");
  const double mean = influence.mean();
  const double ss = (influence.array() - mean).square().sum();
  const double variance = ss / static_cast<double>(n - 1);
  return std::sqrt(variance / static_cast<double>(n));
}

IntervalEstimate wald_ci(double value, double se, double alpha, IntervalMethod method) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::parameter, "alpha must lie in (0, 1)");
  if (!(se >= 0.0)) throw Error(ErrorKind::parameter, "standard error must be non-negative");
  const double half = normal_quantile(1.0 - alpha / 2.0) * se;
  return {value, se, value - half, value + half, alpha, method};
}

IntervalEstimate interval_for(const EstimateRecord& record, double alpha) {
  if (record.has_influence()) return wald_ci(record.value, se_from_influence(record.influence), alpha);
  if (record.model_se) return wald_ci(record.value, *record.model_se, alpha, IntervalMethod::ols);
  throw Error(ErrorKind::insufficient_data, "estimate carries neither an influence vector nor a model SE");
}

BootstrapResult bootstrap_se(const TrialDataset& data, const std::function<double(const TrialDataset&)>& statistic,
                             const BootstrapOptions& options) {
  if (options.replicates < 2) throw Error(ErrorKind::parameter, "bootstrap needs at least 2 replicates");
  const double point = statistic(data);
  const auto n = data.n();
  const auto b_count = static_cast<std::size_t>(options.replicates);
  std::vector<double> values(b_count, 0.0);
  std::vector<char> ok(b_count, 0);

  parallel_for(b_count, options.threads, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(options.seed, b));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    try {
      values[b] = statistic(select_rows(data, rows));
      ok[b] = std::isfinite(values[b]) ? 1 : 0;
    } catch (const Error&) {
      ok[b] = 0;
    }
  });

  BootstrapResult result;
  std::vector<double> kept;
  for (std::size_t b = 0; b < b_count; ++b) {
    if (ok[b]) {
      kept.push_back(values[b]);
    } else {
      ++result.failures;
    }
  }
  if (static_cast<double>(result.failures) > options.max_failure_fraction * static_cast<double>(b_count))
    throw Error(ErrorKind::bootstrap, std::to_string(result.failures) + " of " + std::to_string(b_count) +
                                          " bootstrap resamples failed");
  if (kept.size() < 2) throw Error(ErrorKind::bootstrap, "fewer than two successful bootstrap resamples");
  result.replicate_values = Eigen::Map<const Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  const double mean = result.replicate_values.mean();
  const double sd = std::sqrt((result.replicate_values.array() - mean).square().sum() /
                              static_cast<double>(kept.size() - 1));
  result.interval = wald_ci(point, sd, options.alpha, IntervalMethod::bootstrap);
  return result;
}

TestResult homogeneity_test(const std::vector<EstimateRecord>& per_center, bool diagonal_covariance) {
  const auto m = static_cast<Eigen::Index>(per_center.size());
  if (m < 2) throw Error(ErrorKind::test, "homogeneity test needs at least two centers");
  const auto n = per_center.front().influence.size();
  if (n < 2) throw Error(ErrorKind::insufficient_data, "homogeneity test needs influence vectors");

  Eigen::VectorXd delta(m);
  Eigen::MatrixXd influence(n, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& r = per_center[static_cast<std::size_t>(c)];
    if (r.influence.size() != n) throw Error(ErrorKind::shape, "influence vectors differ in length");
    delta(c) = r.value;
    influence.col(c) = r.influence;
  }
  const Eigen::MatrixXd centered = influence.rowwise() - influence.colwise().mean();
  Eigen::MatrixXd sigma = (centered.transpose() * centered) / static_cast<double>(n - 1) / static_cast<double>(n);
  if (diagonal_covariance) sigma = Eigen::MatrixXd(sigma.diagonal().asDiagonal());

  // Rows of D: delta_c - delta_1, c = 2..m.
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m - 1, m);
  d.col(0).setConstant(-1.0);
  d.rightCols(m - 1).setIdentity();

  const Eigen::VectorXd diff = d * delta;
  const Eigen::MatrixXd v = d * sigma * d.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
  const Eigen::VectorXd diag = ldlt.vectorD();
  const double scale = std::max(v.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || (diag.array() <= 1e-12 * scale).any())
    throw Error(ErrorKind::test,
                "contrast covariance is singular; consider collapsing centers with too few observations");

  TestResult result;
  result.test = TestKind::homogeneity_wald;
  result.df = static_cast<double>(m - 1);
  result.statistic = diff.isZero(0.0) ? 0.0 : std::max(0.0, diff.dot(ldlt.solve(diff)));
  result.p_value = chi_squared_sf(result.statistic, result.df);
  return result;
}

TestResult homogeneity_test(const TrialDataset& data, Estimator estimator, int arm, int reference_arm,
                            const NuisanceConfig& cfg) {
  if (data.m() < 2) throw Error(ErrorKind::test, "homogeneity test needs at least two centers");
  if (is_comparator(estimator)) throw Error(ErrorKind::usage, "homogeneity test needs a center-specific estimator");
  const auto records = estimate_all_centers(data, estimator, arm, reference_arm, cfg);
  return homogeneity_test(records, estimator == Estimator::tau);
}

TestResult ancova_center_outcome_test(const TrialDataset& data, const DesignSpec& base, const DesignSpec& extended) {
  const Design base_design = build_design(base, data);
  const Design ext_design = build_design(extended, data);
  for (const auto& name : base_design.column_names) {
    if (std::find(ext_design.column_names.begin(), ext_design.column_names.end(), name) == ext_design.column_names.end())
      throw Error(ErrorKind::spec, "extended model does not nest the base model (missing column " + name + ")");
  }
  const LinearFit base_fit = fit_ols(base_design.matrix, data.outcome);
  const LinearFit ext_fit = fit_ols(ext_design.matrix, data.outcome);
  if (ext_fit.df_residual <= 0) throw Error(ErrorKind::saturated, "extended model leaves no residual degrees of freedom");

  TestResult result;
  result.test = TestKind::ancova_f;
  const auto df_num = base_fit.df_residual - ext_fit.df_residual;
  result.df_denominator = static_cast<double>(ext_fit.df_residual);
  if (df_num <= 0) {
    result.df = 0.0;
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }
  result.df = static_cast<double>(df_num);
  const double gain = std::max(0.0, base_fit.rss - ext_fit.rss);
  result.statistic = (gain / result.df) / (ext_fit.rss / *result.df_denominator);
  result.p_value = f_sf(result.statistic, result.df, *result.df_denominator);
  return result;
}

std::pair<DesignSpec, DesignSpec> default_ancova_specs(const std::vector<std::string>& covariates) {
  const Atom arm{Atom::Kind::arm, {}};
  const Atom center{Atom::Kind::center, {}};
  DesignSpec base{{Term::intercept()}};
  for (const auto& x : covariates) base.terms.push_back(Term::covariate(x));
  base.terms.push_back(Term::arm());
  for (const auto& x : covariates) base.terms.push_back(Term::interaction({{Atom::Kind::covariate, x}, arm}));

  DesignSpec extended = base;
  extended.terms.push_back(Term::centers());
  for (const auto& x : covariates) extended.terms.push_back(Term::interaction({{Atom::Kind::covariate, x}, center}));
  extended.terms.push_back(Term::interaction({arm, center}));
  return {base, extended};
}

}  // namespace mcate

// Acceptance suite: one PASS/FAIL line per criterion.

#include "mcate/estimators.hpp"
#include "mcate/glm.hpp"
#include "mcate/inference.hpp"
#include "mcate/simulation.hpp"
#include "mcate/special_functions.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

using namespace mcate;

namespace {

using Column = std::array<double, 10>;

// Published simulation tables, centers 1..10.
namespace strong_table {
const Column bias_tau = {-0.31, 0.41, -0.47, -0.04, -0.53, -0.42, 0.43, -0.04, -0.67, 0.03};
const Column bias_phi = {-0.25, 0.24, -0.38, -0.24, -0.12, -0.18, 0.36, -0.16, -0.60, -0.26};
const Column bias_psi = {-0.16, -0.15, -0.16, -0.13, -0.14, -0.13, -0.18, -0.14, -0.13, -0.14};
const Column bias_pooled = {22.60, -5.10, 8.83, -1.92, 12.97, -13.57, -9.76, -17.57, -8.12, 8.02};
const Column bias_fe1 = {22.61, -5.09, 8.84, -1.91, 12.98, -13.56, -9.75, -17.56, -8.11, 8.03};
const Column bias_fe2 = {22.58, -5.12, 8.81, -1.94, 12.95, -13.60, -9.78, -17.59, -8.14, 7.99};
const Column mse_tau = {218.01, 127.63, 97.58, 199.89, 162.56, 116.04, 140.35, 121.16, 327.29, 60.72};
const Column mse_psi = {35.97, 22.51, 19.13, 31.35, 27.06, 21.29, 24.11, 20.88, 40.93, 13.12};
}  // namespace strong_table

namespace baseline_table {
const Column bias_tau = {-0.09, -0.04, -0.10, -0.94, -0.61, -0.51, 0.08, 0.41, 0.81, -0.22};
const Column bias_phi = {0.15, 0.14, -0.20, -0.38, -0.06, -0.19, -0.35, 0.16, 0.23, -0.35};
const Column bias_psi = {-0.17, -0.14, -0.16, -0.11, -0.14, -0.13, -0.16, -0.15, -0.15, -0.15};
const Column bias_pooled = {6.00, -1.37, 2.21, -0.59, 3.32, -3.59, -2.54, -4.72, -2.33, 2.03};
const Column bias_fe1 = {6.00, -1.38, 2.20, -0.59, 3.32, -3.60, -2.54, -4.73, -2.34, 2.03};
const Column bias_fe2 = {5.96, -1.41, 2.17, -0.63, 3.28, -3.63, -2.58, -4.76, -2.37, 1.99};
const Column mse_tau = {298.58, 147.41, 114.44, 241.36, 206.60, 158.16, 186.56, 144.92, 385.45, 80.86};
const Column mse_psi = {14.68, 9.49, 8.90, 11.83, 9.79, 9.90, 9.68, 10.04, 16.10, 6.89};
}  // namespace baseline_table

int failures = 0;

void verdict(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Largest |study - table| over the ten centers.
double max_bias_gap(const StudyReport& r, Estimator e, const Column& table) {
  double worst = 0;
  for (int c = 1; c <= 10; ++c) worst = std::max(worst, std::abs(r.cell(e, c).bias - table[c - 1]));
  return worst;
}

double max_mse_ratio_gap(const StudyReport& r, Estimator e, const Column& table) {
  double worst = 0;
  for (int c = 1; c <= 10; ++c) worst = std::max(worst, std::abs(r.cell(e, c).mse / table[c - 1] - 1));
  return worst;
}

struct Tables {
  Column bias_tau, bias_phi, bias_psi, bias_pooled, bias_fe1, bias_fe2, mse_tau, mse_psi;
};

using Check = std::pair<bool, std::string>;

Check check_bias(const StudyReport& r, const Tables& t) {
  const double tau = max_bias_gap(r, Estimator::tau, t.bias_tau);
  const double phi = max_bias_gap(r, Estimator::phi, t.bias_phi);
  const double psi = max_bias_gap(r, Estimator::psi, t.bias_psi);
  const double pooled = max_bias_gap(r, Estimator::pooled, t.bias_pooled);
  const double fe1 = max_bias_gap(r, Estimator::fe1, t.bias_fe1);
  const double fe2 = max_bias_gap(r, Estimator::fe2, t.bias_fe2);
  return {std::max({tau, phi, psi}) <= 1.0 && std::max({pooled, fe1, fe2}) <= 2.0,
          "max |bias - table| tau " + fmt(tau) + ", phi " + fmt(phi) + ", psi " + fmt(psi) + " (tol 1.0); pooled " +
              fmt(pooled) + ", fe1 " + fmt(fe1) + ", fe2 " + fmt(fe2) + " (tol 2.0)"};
}

Check check_mse(const StudyReport& r, const Tables& t) {
  const double tau = max_mse_ratio_gap(r, Estimator::tau, t.mse_tau);
  const double psi = max_mse_ratio_gap(r, Estimator::psi, t.mse_psi);
  int ordered = 0;
  for (int c = 1; c <= 10; ++c) {
    const double m_tau = r.cell(Estimator::tau, c).mse, m_phi = r.cell(Estimator::phi, c).mse;
    const double m_psi = r.cell(Estimator::psi, c).mse;
    ordered += m_psi < m_phi && m_phi < m_tau;
  }
  return {tau <= 0.15 && psi <= 0.15 && ordered == 10,
          "max relative MSE gap tau " + fmt(tau) + ", psi " + fmt(psi) + " (tol 0.15); psi < phi < tau in " +
              std::to_string(ordered) + "/10 centers"};
}

Check check_coverage(const StudyReport& r) {
  double lo = 1, hi = 0;
  for (Estimator e : {Estimator::tau, Estimator::phi, Estimator::psi})
    for (int c = 1; c <= 10; ++c) {
      lo = std::min(lo, r.cell(e, c).coverage);
      hi = std::max(hi, r.cell(e, c).coverage);
    }
  return {lo >= 0.92 && hi <= 0.97,
          "coverage over tau/phi/psi and 10 centers [" + fmt(lo) + ", " + fmt(hi) + "] (required [0.92, 0.97])"};
}

StudyReport study(Strength strength, std::vector<Estimator> estimators) {
  const auto start = std::chrono::steady_clock::now();
  StudyOptions o;
  o.replicates = 1000;
  o.seed = 1;
  o.estimators = std::move(estimators);
  auto r = run_study(Scenario::paper(strength), o);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("# %s study: %d replicates, %d excluded, %.0f s\n", to_string(strength), r.replicates, r.failures, secs);
  return r;
}

void criteria_1_to_4_and_8() {
  const auto r = study(Strength::strong, {Estimator::tau, Estimator::phi, Estimator::psi, Estimator::chi,
                                          Estimator::pooled, Estimator::fe1, Estimator::fe2});
  const Tables t{strong_table::bias_tau, strong_table::bias_phi,    strong_table::bias_psi, strong_table::bias_pooled,
                 strong_table::bias_fe1, strong_table::bias_fe2,    strong_table::mse_tau,  strong_table::mse_psi};
  for (const auto& [id, check] : {std::pair{"1 strong-scenario bias", check_bias(r, t)},
                                  std::pair{"2 strong-scenario MSE", check_mse(r, t)},
                                  std::pair{"3 strong-scenario coverage", check_coverage(r)}})
    verdict(id, check.first, check.second);

  double worst = 0;
  for (Estimator e : {Estimator::phi, Estimator::psi})
    for (int c = 1; c <= 10; ++c) {
      const auto& cell = r.cell(e, c);
      worst = std::max(worst, std::abs(cell.avg_se / *cell.empirical_sd - 1));
    }
  verdict("4 SE calibration", worst <= 0.10,
          "max |avg IF SE / empirical SD - 1| over phi/psi " + fmt(worst) + " (tol 0.10)");

  int vs_phi = 0, vs_chi = 0;
  for (int c = 1; c <= 10; ++c) {
    const double psi = *r.cell(Estimator::psi, c).empirical_sd;
    vs_phi += psi <= *r.cell(Estimator::phi, c).empirical_sd;
    vs_chi += psi <= *r.cell(Estimator::chi, c).empirical_sd;
  }
  verdict("8 efficiency ordering", vs_phi == 10 && vs_chi == 10,
          "SD(psi) <= SD(phi) in " + std::to_string(vs_phi) + "/10, SD(psi) <= SD(chi) in " + std::to_string(vs_chi) +
              "/10 centers");
}

void criterion_5() {
  const auto r = study(Strength::baseline, {Estimator::tau, Estimator::phi, Estimator::psi, Estimator::pooled,
                                            Estimator::fe1, Estimator::fe2});
  const Tables t{baseline_table::bias_tau, baseline_table::bias_phi, baseline_table::bias_psi,
                 baseline_table::bias_pooled, baseline_table::bias_fe1, baseline_table::bias_fe2,
                 baseline_table::mse_tau, baseline_table::mse_psi};
  const Check bias = check_bias(r, t), mse = check_mse(r, t), coverage = check_coverage(r);
  verdict("5 baseline scenario", bias.first && mse.first && coverage.first,
          bias.second + "; " + mse.second + "; " + coverage.second);
}

// Identities on small random trials.
void criterion_6() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> centers(2, 4);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  double worst = 0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };

  NuisanceConfig saturated;
  saturated.outcome_spec = DesignSpec::parse({"1", "C"});
  saturated.treatment = DesignSpec::parse({"1", "C"});
  NuisanceConfig flat;
  flat.outcome_spec = intercept_only();
  flat.membership_spec = intercept_only();

  for (int rep = 0; rep < 100; ++rep) {
    const int m = centers(rng);
    std::uniform_int_distribution<Eigen::Index> size(4 * m, 50);
    const auto d = testing::random_trial(rng, m, size(rng));
    const Eigen::Index n = d.n();

    NuisanceConfig phi_cells;  // residual weights constant on each (c, a) cell
    phi_cells.outcome_spec = main_effects(d.covariate_names, true);
    phi_cells.treatment = DesignSpec::parse({"1", "C"});
    NuisanceConfig psi_const;  // constant residual weights on each arm
    psi_const.outcome_spec = main_effects(d.covariate_names, false);
    psi_const.membership_spec = intercept_only();

    Eigen::VectorXd g(n), e(n);
    Eigen::MatrixXd p(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      g(i) = 3 * u(rng);
      e(i) = u(rng);
      for (int k = 0; k < m; ++k) p(i, k) = u(rng);
      p.row(i) /= p.row(i).sum();
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);

    for (int c = 1; c <= m; ++c)
      for (int a : {0, 1}) {
        // phi = tau under per-cell intercepts and within-center arm frequencies.
        const double tau = oracle::cell_mean(d, c, a);
        track(estimate_tau(d, c, a).value, tau);
        for (auto v : {Variant::dr, Variant::ipw, Variant::om}) track(estimate_phi(d, c, a, saturated, v).value, tau);

        // DR = OM when the weights are constant where residuals sum to zero.
        track(estimate_phi(d, c, a, phi_cells, Variant::dr).value,
              estimate_phi(d, c, a, phi_cells, Variant::om).value);
        track(estimate_psi(d, c, a, psi_const, Variant::dr).value,
              estimate_psi(d, c, a, psi_const, Variant::om).value);

        // psi with intercept-only models is the pooled arm mean.
        const double pooled = oracle::arm_mean(d, a);
        for (auto v : {Variant::dr, Variant::ipw, Variant::om}) track(estimate_psi(d, c, a, flat, v).value, pooled);

        // Fixed nuisances: DR = IPW + OM - weighted g; DR with g = 0 is IPW.
        const auto wphi = oracle::phi_weights(d, c, a, e);
        const auto ref_phi = oracle::augmented(d, c, g, wphi);
        const double nc = oracle::count(d, c, -1);
        const double dr_phi = phi_from_nuisances(d, c, a, {g, e}).value;
        track(dr_phi, ref_phi.dr);
        track(dr_phi, phi_from_nuisances(d, c, a, {g, e}, Variant::ipw).value +
                          phi_from_nuisances(d, c, a, {g, e}, Variant::om).value - wphi.dot(g) / nc);
        track(phi_from_nuisances(d, c, a, {zero, e}).value, phi_from_nuisances(d, c, a, {g, e}, Variant::ipw).value);

        const auto wpsi = oracle::psi_weights(d, c, a, p, e);
        const auto ref_psi = oracle::augmented(d, c, g, wpsi);
        const PooledNuisances pn{g, e, p};
        const double dr_psi = psi_from_nuisances(d, c, a, pn).value;
        track(dr_psi, ref_psi.dr);
        track(dr_psi, psi_from_nuisances(d, c, a, pn, Variant::ipw).value +
                          psi_from_nuisances(d, c, a, pn, Variant::om).value - wpsi.dot(g) / nc);
        track(psi_from_nuisances(d, c, a, {zero, e, p}).value, psi_from_nuisances(d, c, a, pn, Variant::ipw).value);
        track(psi_from_nuisances(d, c, a, pn, Variant::om).value, ref_psi.om);
      }
  }
  verdict("6 algebraic identities", worst <= 1e-10,
          "max deviation over 100 random trials (n <= 50) " + [&] {
            std::ostringstream s;
            s << worst;
            return s.str();
          }() + " (tol 1e-10)");
}

void criterion_7() {
  auto s = Scenario::paper();
  s.n = 100000;
  const auto truth = true_center_ate(s);
  const auto d = generate_dataset(s, derive_seed(2, 0));
  const std::vector<std::string> covs = s.covariate_names();
  const std::vector<std::string> without_x1 = {"1", "x2", "x3"};

  NuisanceConfig phi_wrong_outcome;
  phi_wrong_outcome.outcome_spec = DesignSpec::parse({"1", "x2", "x3", "C"});
  NuisanceConfig psi_wrong_outcome;
  psi_wrong_outcome.outcome_spec = DesignSpec::parse(without_x1);
  psi_wrong_outcome.membership_spec = main_effects(covs, false);
  NuisanceConfig psi_wrong_membership;
  psi_wrong_membership.outcome_spec = main_effects(covs, false);
  psi_wrong_membership.membership_spec = DesignSpec::parse(without_x1);

  auto worst = [&](Estimator e, const NuisanceConfig& cfg) {
    double w = 0;
    for (const auto& r : estimate_all_centers(d, e, 1, 0, cfg))
      w = std::max(w, std::abs(r.value - truth.value(r.estimand.center - 1)));
    return w;
  };
  const double phi = worst(Estimator::phi, phi_wrong_outcome);
  const double psi_a = worst(Estimator::psi, psi_wrong_outcome);
  const double psi_b = worst(Estimator::psi, psi_wrong_membership);
  verdict("7 double robustness at n = 1e5", std::max({phi, psi_a, psi_b}) < 0.5,
          "max |estimate - oracle| phi (wrong outcome) " + fmt(phi) + ", psi (wrong outcome) " + fmt(psi_a) +
              ", psi (wrong membership) " + fmt(psi_b) + " (tol 0.5)");
}

// Center 1 of a DGP draw copied into every center.
TrialDataset duplicated(const TrialDataset& base, int copies) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < base.n(); ++i)
    if (base.center(i) == 1) rows.push_back(i);
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(k * copies, base.p());
  Eigen::VectorXi c(k * copies), a(k * copies);
  Eigen::VectorXd y(k * copies);
  for (int j = 0; j < copies; ++j)
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index src = rows[static_cast<std::size_t>(i)];
      x.row(j * k + i) = base.covariates.row(src);
      c(j * k + i) = j + 1;
      a(j * k + i) = base.arm(src);
      y(j * k + i) = base.outcome(src);
    }
  return make_dataset(x, base.covariate_names, c, a, y);
}

void criterion_9() {
  constexpr int reps = 1000;
  auto null = Scenario::paper();
  null.arm_interaction.setZero();
  const auto nuisances = default_study_nuisances(null.covariate_names());
  int reject_tau = 0, reject_phi = 0, reject_psi = 0;
  for (int r = 0; r < reps; ++r) {
    const auto d = generate_dataset(null, derive_seed(3, static_cast<std::uint64_t>(r)));
    reject_tau += homogeneity_test(d, Estimator::tau, 1, 0).p_value < 0.05;
    reject_phi += homogeneity_test(d, Estimator::phi, 1, 0, nuisances.phi).p_value < 0.05;
    reject_psi += homogeneity_test(d, Estimator::psi, 1, 0, nuisances.psi).p_value < 0.05;
  }
  const auto dgp = Scenario::paper();
  const auto [base, extended] = default_ancova_specs(dgp.covariate_names());
  int reject_ancova = 0;
  for (int r = 0; r < reps; ++r) {
    const auto d = generate_dataset(dgp, derive_seed(4, static_cast<std::uint64_t>(r)));
    reject_ancova += ancova_center_outcome_test(d, base, extended).p_value < 0.05;
  }

  const auto copies = duplicated(generate_dataset(dgp, derive_seed(3, reps)), 5);
  const double dup_tau = homogeneity_test(copies, Estimator::tau, 1, 0).statistic;
  const double dup_psi = homogeneity_test(copies, Estimator::psi, 1, 0, nuisances.psi).statistic;

  const auto in_range = [](int k) { return k >= 35 && k <= 65; };
  const bool pass = in_range(reject_tau) && in_range(reject_phi) && in_range(reject_psi) && in_range(reject_ancova) &&
                    dup_tau == 0.0 && dup_psi == 0.0;
  verdict("9 test calibration", pass,
          "size at alpha 0.05 homogeneity tau " + fmt(reject_tau / double(reps)) + ", phi " +
              fmt(reject_phi / double(reps)) + ", psi " + fmt(reject_psi / double(reps)) + "; ANCOVA " +
              fmt(reject_ancova / double(reps)) + " (required [0.035, 0.065]); duplicated-center statistic tau " +
              fmt(dup_tau, 1) + ", psi " + fmt(dup_psi, 1));
}

void criterion_10() {
  double glm = 0;
  // Intercept-only logistic: logit of the sample mean.
  Eigen::VectorXd y(10);
  y << 1, 0, 0, 1, 0, 1, 1, 1, 1, 0;
  glm = std::max(glm, std::abs(fit_logistic(Eigen::MatrixXd::Ones(10, 1), y).coefficients(0) - std::log(1.5)));
  // Intercept-only multinomial: log(p_k / p_1).
  Eigen::VectorXi cat(12);
  cat << 1, 1, 2, 2, 2, 3, 3, 3, 3, 3, 3, 1;
  const auto mn = fit_multinomial(Eigen::MatrixXd::Ones(12, 1), cat, 3);
  glm = std::max({glm, std::abs(mn.coefficients(0, 0)), std::abs(mn.coefficients(1, 0) - std::log(2.0))});
  // Exact line.
  Eigen::MatrixXd x(8, 2);
  x.col(0).setOnes();
  x.col(1) << -3, -1, 0, 0.5, 2, 4, 7, 11;
  const Eigen::VectorXd line = (2.5 - 1.25 * x.col(1).array()).matrix();
  const auto ols = fit_ols(x, line);
  glm = std::max({glm, std::abs(ols.coefficients(0) - 2.5), std::abs(ols.coefficients(1) + 1.25)});

  double norm = 0;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z(0.0, 30.0);
  Eigen::MatrixXd eta(500, 9);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = z(rng);
  norm = (reference_softmax(eta).rowwise().sum().array() - 1).abs().maxCoeff();
  const auto d = generate_dataset(Scenario::paper(), 10);
  Eigen::MatrixXd design(d.n(), 4);
  design << Eigen::VectorXd::Ones(d.n()), d.covariates;
  const Eigen::MatrixXd fitted = predict(fit_multinomial(design, d.center, 10), design);
  norm = std::max(norm, (fitted.rowwise().sum().array() - 1).abs().maxCoeff());

  double grid = 0;
  using boost::math::complement;
  for (double df : {0.5, 1.0, 2.0, 3.0, 9.0, 30.0, 100.0})
    for (double s : {1e-4, 0.1, 1.0, 3.84, 10.0, 25.0, 80.0}) {
      const double chi = boost::math::cdf(complement(boost::math::chi_squared_distribution<double>(df), s));
      grid = std::max(grid, std::abs(chi_squared_sf(s, df) - chi) / std::max(chi, 1e-300));
      for (double df2 : {1.0, 5.0, 60.0, 1000.0}) {
        const double f = boost::math::cdf(complement(boost::math::fisher_f_distribution<double>(df, df2), s));
        grid = std::max(grid, std::abs(f_sf(s, df, df2) - f) / std::max(f, 1e-300));
      }
    }
  std::ostringstream detail;
  detail << "closed-form GLM error " << glm << " (tol 1e-8); softmax normalization error " << norm
         << " (tol 1e-12); max relative p-value error " << grid << " (tol 1e-8)";
  verdict("10 numerical kernels", glm <= 1e-8 && norm <= 1e-12 && grid <= 1e-8, detail.str());
}

}  // namespace

int main() {
  criteria_1_to_4_and_8();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_9();
  criterion_10();
  std::printf("# %d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcate/error.hpp"
#include "mcate/glm.hpp"

#include <cmath>
#include <random>

using namespace mcate;

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.cols() + 1);
  d << Eigen::VectorXd::Ones(x.rows()), x;
  return d;
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = normal(rng);
  return x;
}

}  // namespace

TEST_CASE("OLS residuals are orthogonal to the design") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = with_intercept(gaussian(rng, 80, 3));
  Eigen::VectorXd y = x * Eigen::Vector4d(1, 2, -1, 0.5) + gaussian(rng, 80, 1);
  const auto fit = fit_ols(x, y);
  const Eigen::VectorXd r = y - x * fit.coefficients;
  CHECK((x.transpose() * r).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit.rss == doctest::Approx(r.squaredNorm()).epsilon(1e-12));
  CHECK(fit.df_residual == 76);
  const Eigen::VectorXd normal_eq = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  CHECK((fit.coefficients - normal_eq).cwiseAbs().maxCoeff() < 1e-10);

  const double sigma2 = fit.rss / 76.0;
  const Eigen::MatrixXd cov = sigma2 * (x.transpose() * x).inverse();
  CHECK((ols_covariance(x, fit) - cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("OLS drops later aliased columns") {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd x = with_intercept(gaussian(rng, 30, 2));
  Eigen::MatrixXd xa(30, 4);
  xa << x, x.col(1) + 2 * x.col(2);
  const Eigen::VectorXd y = gaussian(rng, 30, 1);
  const auto fit = fit_ols(xa, y);
  CHECK(fit.dropped_columns == std::vector<Eigen::Index>{3});
  CHECK(fit.coefficients(3) == 0.0);
  CHECK(fit.rank == 3);
  CHECK((fit.coefficients.head(3) - fit_ols(x, y).coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("logistic closed forms") {
  // Intercept only: logit of the sample mean.
  Eigen::VectorXd y(10);
  y << 1, 0, 0, 1, 0, 1, 1, 1, 1, 0;
  const auto f0 = fit_logistic(Eigen::MatrixXd::Ones(10, 1), y);
  CHECK(f0.converged);
  CHECK(f0.coefficients(0) == doctest::Approx(std::log(0.6 / 0.4)).epsilon(1e-10));

  // Binary regressor: saturated, group log-odds.
  Eigen::MatrixXd x(10, 2);
  x.col(0).setOnes();
  x.col(1) << 0, 0, 0, 0, 0, 1, 1, 1, 1, 1;
  const auto f1 = fit_logistic(x, y);
  const double lo0 = std::log(2.0 / 3.0), lo1 = std::log(4.0 / 1.0);
  CHECK(f1.coefficients(0) == doctest::Approx(lo0).epsilon(1e-9));
  CHECK(f1.coefficients(1) == doctest::Approx(lo1 - lo0).epsilon(1e-9));
  const double ll = 2 * std::log(0.4) + 3 * std::log(0.6) + 4 * std::log(0.8) + std::log(0.2);
  CHECK(f1.log_likelihood == doctest::Approx(ll).epsilon(1e-10));
}

TEST_CASE("logistic log-likelihood trace never decreases") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = with_intercept(gaussian(rng, 200, 3));
  const Eigen::VectorXd eta = x * Eigen::Vector4d(0.3, 1.5, -2.0, 0.7);
  std::uniform_real_distribution<double> u;
  Eigen::VectorXd y(200);
  for (Eigen::Index i = 0; i < 200; ++i) y(i) = u(rng) < expit(eta(i)) ? 1.0 : 0.0;
  const auto fit = fit_logistic(x, y);
  CHECK(fit.converged);
  for (std::size_t k = 1; k < fit.log_likelihood_trace.size(); ++k)
    CHECK(fit.log_likelihood_trace[k] >= fit.log_likelihood_trace[k - 1] - 1e-12);
  const Eigen::VectorXd p = predict(fit, x);
  CHECK((x.transpose() * (y - p)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("separable logistic data raises the separation warning") {
  Eigen::MatrixXd x(6, 2);
  x.col(0).setOnes();
  x.col(1) << -3, -2, -1, 1, 2, 3;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  const auto fit = fit_logistic(x, y);
  CHECK(fit.separation_warning);
}

TEST_CASE("multinomial with two categories equals logistic") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = with_intercept(gaussian(rng, 150, 2));
  std::uniform_real_distribution<double> u;
  Eigen::VectorXi cat(150);
  Eigen::VectorXd y(150);
  for (Eigen::Index i = 0; i < 150; ++i) {
    y(i) = u(rng) < expit(0.2 + x(i, 1) - 0.5 * x(i, 2)) ? 1.0 : 0.0;
    cat(i) = y(i) > 0 ? 2 : 1;
  }
  const auto m = fit_multinomial(x, cat, 2);
  const auto l = fit_logistic(x, y);
  CHECK((m.coefficients.row(0).transpose() - l.coefficients).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(m.log_likelihood == doctest::Approx(l.log_likelihood).epsilon(1e-10));
}

TEST_CASE("multinomial closed forms and trace") {
  // Intercept only: log(p_k / p_1).
  Eigen::VectorXi cat(12);
  cat << 1, 1, 2, 2, 2, 3, 3, 3, 3, 3, 3, 1;
  const auto f0 = fit_multinomial(Eigen::MatrixXd::Ones(12, 1), cat, 3);
  CHECK(f0.converged);
  CHECK(f0.coefficients(0, 0) == doctest::Approx(std::log(3.0 / 3.0)).epsilon(1e-8));
  CHECK(f0.coefficients(1, 0) == doctest::Approx(std::log(6.0 / 3.0)).epsilon(1e-8));
  const Eigen::MatrixXd p = predict(f0, Eigen::MatrixXd::Ones(2, 1));
  CHECK(p(0, 2) == doctest::Approx(0.5).epsilon(1e-8));

  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = with_intercept(gaussian(rng, 400, 2));
  Eigen::MatrixXd beta(3, 3);
  beta << 0.5, 1.0, -0.5, -0.2, -1.0, 0.8, 0.1, 0.3, 0.3;
  const Eigen::MatrixXd probs = reference_softmax(x * beta.transpose());
  std::uniform_real_distribution<double> u;
  Eigen::VectorXi c(400);
  for (Eigen::Index i = 0; i < 400; ++i) {
    double v = u(rng), acc = 0;
    int k = 0;
    while (k < 3 && v > (acc += probs(i, k))) ++k;
    c(i) = k + 1;
  }
  const auto fit = fit_multinomial(x, c, 4);
  CHECK(fit.converged);
  for (std::size_t k = 1; k < fit.log_likelihood_trace.size(); ++k)
    CHECK(fit.log_likelihood_trace[k] >= fit.log_likelihood_trace[k - 1] - 1e-12);
  // Score equations: sum_i x_i (I(C_i = k) - p_k(x_i)) = 0 for k >= 2.
  const Eigen::MatrixXd ph = predict(fit, x);
  for (int k = 1; k < 4; ++k) {
    Eigen::VectorXd r(400);
    for (Eigen::Index i = 0; i < 400; ++i) r(i) = (c(i) == k + 1 ? 1.0 : 0.0) - ph(i, k);
    CHECK((x.transpose() * r).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("multinomial requires every category") {
  Eigen::VectorXi cat(4);
  cat << 1, 1, 3, 3;
  try {
    fit_multinomial(Eigen::MatrixXd::Ones(4, 1), cat, 3);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_fit);
  }
}

TEST_CASE("reference softmax") {
  Eigen::MatrixXd eta(2, 2);
  eta << 0, 0, std::log(2.0), std::log(3.0);
  const Eigen::MatrixXd p = reference_softmax(eta);
  CHECK(p.cols() == 3);
  CHECK(p(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(p(1, 0) == doctest::Approx(1.0 / 6));
  CHECK(p(1, 2) == doctest::Approx(0.5));
  Eigen::MatrixXd big(1, 2);
  big << 800, 799;
  const Eigen::MatrixXd q = reference_softmax(big);
  CHECK(q.allFinite());
  CHECK(q.sum() == doctest::Approx(1.0));
}

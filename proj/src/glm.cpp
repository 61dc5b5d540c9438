#include "mcate/glm.hpp"

#include "mcate/error.hpp"

#include <cmath>
#include <limits>

namespace mcate {

std::vector<Eigen::Index> independent_columns(const Eigen::Ref<const Eigen::MatrixXd>& design, double tolerance) {
  const auto n = design.rows();
  Eigen::MatrixXd basis(n, std::min(n, design.cols()));
  Eigen::Index rank = 0;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    const double norm = design.col(j).norm();
    if (norm == 0.0 || rank == n) continue;
    Eigen::VectorXd r = design.col(j);
    // Two passes of modified Gram-Schmidt keep the residual orthogonal to
    // working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < rank; ++k) r -= basis.col(k).dot(r) * basis.col(k);
    }
    const double rnorm = r.norm();
    if (rnorm <= tolerance * norm) continue;
    basis.col(rank++) = r / rnorm;
    kept.push_back(j);
  }
  return kept;
}

namespace {

Eigen::MatrixXd take_columns(const Eigen::Ref<const Eigen::MatrixXd>& x, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(cols[k]);
  return out;
}

std::vector<Eigen::Index> complement(Eigen::Index p, const std::vector<Eigen::Index>& kept) {
  std::vector<Eigen::Index> dropped;
  std::size_t k = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (k < kept.size() && kept[k] == j) {
      ++k;
    } else {
      dropped.push_back(j);
    }
  }
  return dropped;
}

Eigen::VectorXd expand(const Eigen::VectorXd& reduced, Eigen::Index p, const std::vector<Eigen::Index>& kept) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k < kept.size(); ++k) full(kept[k]) = reduced(static_cast<Eigen::Index>(k));
  return full;
}

void check_columns(Eigen::Index expected, Eigen::Index got) {
  if (expected != got) {
    throw Error(ErrorKind::shape, "design has " + std::to_string(got) + " columns, fit expects " +
                                      std::to_string(expected));
  }
}

double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::Ref<const Eigen::VectorXd>& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
  return ll;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt.solve(b);
  return a.completeOrthogonalDecomposition().solve(b);
}

bool step_is_small(const Eigen::VectorXd& step, const Eigen::VectorXd& current, double tolerance) {
  const double size = current.size() ? current.cwiseAbs().maxCoeff() : 0.0;
  return step.size() == 0 || step.cwiseAbs().maxCoeff() <= tolerance * (1.0 + size);
}

}  // namespace

LinearFit fit_ols(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (design.rows() == 0) throw Error(ErrorKind::empty_fit, "OLS fit on zero rows");
  if (design.cols() == 0) throw Error(ErrorKind::shape, "OLS design has no columns");
  if (design.rows() != y.size()) throw Error(ErrorKind::shape, "OLS design rows do not match outcome length");

  const auto kept = independent_columns(design);
  LinearFit fit;
  fit.dropped_columns = complement(design.cols(), kept);
  fit.rank = static_cast<Eigen::Index>(kept.size());
  fit.df_residual = design.rows() - fit.rank;
  if (kept.empty()) {
    fit.coefficients = Eigen::VectorXd::Zero(design.cols());
    fit.rss = y.squaredNorm();
    return fit;
  }
  const Eigen::MatrixXd x = take_columns(design, kept);
  const Eigen::VectorXd beta = x.householderQr().solve(y);
  fit.coefficients = expand(beta, design.cols(), kept);
  fit.rss = (y - x * beta).squaredNorm();
  return fit;
}

Eigen::MatrixXd ols_covariance(const Eigen::Ref<const Eigen::MatrixXd>& design, const LinearFit& fit) {
  check_columns(fit.coefficients.size(), design.cols());
  const auto p = design.cols();
  const auto kept = complement(p, fit.dropped_columns);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  if (kept.empty() || fit.df_residual <= 0) return cov;
  const Eigen::MatrixXd x = take_columns(design, kept);
  const auto r = static_cast<Eigen::Index>(kept.size());
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(r, r));
  const double sigma2 = fit.rss / static_cast<double>(fit.df_residual);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b) cov(kept[a], kept[b]) = sigma2 * xtx_inv(a, b);
  return cov;
}

LogisticFit fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                         const LogisticOptions& options) {
  if (design.rows() == 0) throw Error(ErrorKind::empty_fit, "logistic fit on zero rows");
  if (design.rows() != y.size()) throw Error(ErrorKind::shape, "logistic design rows do not match outcome length");
  const double ones = y.sum();
  if (ones == 0.0 || ones == static_cast<double>(y.size()))
    throw Error(ErrorKind::degenerate_fit, "logistic outcome contains a single class");

  const auto kept = independent_columns(design);
  LogisticFit fit;
  fit.dropped_columns = complement(design.cols(), kept);
  const Eigen::MatrixXd x = take_columns(design, kept);
  const auto k = x.cols();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.rows());
  double ll = bernoulli_loglik(eta, y);
  fit.log_likelihood_trace.push_back(ll);

  for (int it = 1; it <= options.max_iterations; ++it) {
    fit.iterations = it;
    Eigen::VectorXd mu = eta.unaryExpr([](double e) { return expit(e); });
    Eigen::VectorXd w = mu.cwiseProduct((1.0 - mu.array()).matrix());
    Eigen::VectorXd score = x.transpose() * (y - mu);
    Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    if (options.ridge > 0) info.diagonal().array() += options.ridge;
    Eigen::VectorXd step = solve_spd(info, score);
    const bool near = step_is_small(step, beta, 1e-4);

    double scale = 1.0;
    Eigen::VectorXd trial_beta;
    Eigen::VectorXd trial_eta;
    double trial_ll = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 40; ++half) {
      trial_beta = beta + scale * step;
      trial_eta = x * trial_beta;
      trial_ll = bernoulli_loglik(trial_eta, y);
      // Near the optimum the log-likelihood gain of a Newton step is below
      // rounding, so small full steps are taken without the ascent check.
      if (std::isfinite(trial_ll) && (trial_ll >= ll || (half == 0 && near))) break;
      scale *= 0.5;
    }
    if (!(std::isfinite(trial_ll) && (trial_ll >= ll || (scale == 1.0 && near)))) break;

    const bool small = step_is_small(scale * step, beta, options.step_tolerance);
    beta = trial_beta;
    eta = trial_eta;
    ll = trial_ll;
    fit.log_likelihood_trace.push_back(ll);

    mu = eta.unaryExpr([](double e) { return expit(e); });
    score = x.transpose() * (y - mu);
    if (score.cwiseAbs().maxCoeff() < options.score_tolerance || (small && scale == 1.0)) {
      fit.converged = true;
      break;
    }
  }

  fit.coefficients = expand(beta, design.cols(), kept);
  fit.log_likelihood = ll;

  // Complete separation: the MLE does not exist. Either the coefficients run
  // past the bound, or every observation is fitted to within 1e-6.
  const Eigen::VectorXd mu = eta.unaryExpr([](double e) { return expit(e); });
  const bool perfect = (y - mu).cwiseAbs().maxCoeff() < 1e-6;
  if (beta.norm() > options.separation_bound || perfect) {
    fit.separation_warning = true;
    fit.converged = false;
  }
  return fit;
}

Eigen::MatrixXd reference_softmax(const Eigen::Ref<const Eigen::MatrixXd>& eta) {
  const auto n = eta.rows();
  const auto m = eta.cols() + 1;
  Eigen::MatrixXd prob(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = std::max(0.0, eta.cols() > 0 ? eta.row(i).maxCoeff() : 0.0);
    double total = std::exp(-top);
    prob(i, 0) = total;
    for (Eigen::Index j = 0; j < eta.cols(); ++j) {
      prob(i, j + 1) = std::exp(eta(i, j) - top);
      total += prob(i, j + 1);
    }
    prob.row(i) /= total;
  }
  return prob;
}

namespace {

double multinomial_loglik(const Eigen::MatrixXd& eta, const Eigen::Ref<const Eigen::VectorXi>& category) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    const double top = std::max(0.0, eta.cols() > 0 ? eta.row(i).maxCoeff() : 0.0);
    double total = std::exp(-top);
    for (Eigen::Index j = 0; j < eta.cols(); ++j) total += std::exp(eta(i, j) - top);
    const double own = category(i) == 1 ? 0.0 : eta(i, category(i) - 2);
    ll += own - top - std::log(total);
  }
  return ll;
}

// Parameter vector layout: theta[j * k + l] = coefficient l of category j + 2.
Eigen::MatrixXd as_matrix(const Eigen::VectorXd& theta, Eigen::Index rows, Eigen::Index k) {
  Eigen::MatrixXd b(rows, k);
  for (Eigen::Index j = 0; j < rows; ++j) b.row(j) = theta.segment(j * k, k).transpose();
  return b;
}

}  // namespace

MultinomialFit fit_multinomial(const Eigen::Ref<const Eigen::MatrixXd>& design,
                               const Eigen::Ref<const Eigen::VectorXi>& category, int categories,
                               const MultinomialOptions& options) {
  if (design.rows() == 0) throw Error(ErrorKind::empty_fit, "multinomial fit on zero rows");
  if (design.rows() != category.size())
    throw Error(ErrorKind::shape, "multinomial design rows do not match category length");
  if (categories < 2) throw Error(ErrorKind::degenerate_fit, "multinomial fit needs at least two categories");
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(categories);
  for (Eigen::Index i = 0; i < category.size(); ++i) {
    if (category(i) < 1 || category(i) > categories)
      throw Error(ErrorKind::shape, "category value out of range 1.." + std::to_string(categories));
    counts(category(i) - 1) += 1;
  }
  for (int c = 0; c < categories; ++c) {
    if (counts(c) == 0)
      throw Error(ErrorKind::degenerate_fit, "category " + std::to_string(c + 1) + " is never observed");
  }

  const auto kept = independent_columns(design);
  MultinomialFit fit;
  fit.dropped_columns = complement(design.cols(), kept);
  const Eigen::MatrixXd x = take_columns(design, kept);
  const auto n = x.rows();
  const auto k = x.cols();
  const Eigen::Index rows = categories - 1;
  const Eigen::Index dim = rows * k;

  Eigen::MatrixXd indicator = Eigen::MatrixXd::Zero(n, rows);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (category(i) > 1) indicator(i, category(i) - 2) = 1.0;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(n, rows);
  double ll = multinomial_loglik(eta, category);
  fit.log_likelihood_trace.push_back(ll);

  auto score_of = [&](const Eigen::MatrixXd& prob) {
    const Eigen::MatrixXd resid = indicator - prob.rightCols(rows);
    const Eigen::MatrixXd g = x.transpose() * resid;  // k x rows
    Eigen::VectorXd s(dim);
    for (Eigen::Index j = 0; j < rows; ++j) s.segment(j * k, k) = g.col(j);
    return s;
  };

  Eigen::MatrixXd prob = reference_softmax(eta);
  Eigen::VectorXd score = score_of(prob);
  if (score.cwiseAbs().maxCoeff() < options.score_tolerance) fit.converged = true;

  for (int it = 1; it <= options.max_iterations && !fit.converged; ++it) {
    fit.iterations = it;
    Eigen::MatrixXd info(dim, dim);
    for (Eigen::Index a = 0; a < rows; ++a) {
      for (Eigen::Index b = a; b < rows; ++b) {
        Eigen::VectorXd w = -prob.col(a + 1).cwiseProduct(prob.col(b + 1));
        if (a == b) w += prob.col(a + 1);
        const Eigen::MatrixXd block = x.transpose() * w.asDiagonal() * x;
        info.block(a * k, b * k, k, k) = block;
        if (a != b) info.block(b * k, a * k, k, k) = block.transpose();
      }
    }
    if (options.ridge > 0) info.diagonal().array() += options.ridge;
    const Eigen::VectorXd step = solve_spd(info, score);
    const bool near = step_is_small(step, theta, 1e-4);

    double scale = 1.0;
    Eigen::VectorXd trial;
    Eigen::MatrixXd trial_eta;
    double trial_ll = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 40; ++half) {
      trial = theta + scale * step;
      trial_eta = x * as_matrix(trial, rows, k).transpose();
      trial_ll = multinomial_loglik(trial_eta, category);
      if (std::isfinite(trial_ll) && (trial_ll >= ll || (half == 0 && near))) break;
      scale *= 0.5;
    }
    if (!(std::isfinite(trial_ll) && (trial_ll >= ll || (scale == 1.0 && near)))) break;

    const bool small = step_is_small(scale * step, theta, options.step_tolerance);
    theta = trial;
    eta = trial_eta;
    ll = trial_ll;
    fit.log_likelihood_trace.push_back(ll);
    prob = reference_softmax(eta);
    score = score_of(prob);
    if (score.cwiseAbs().maxCoeff() < options.score_tolerance || (small && scale == 1.0)) fit.converged = true;
  }
  if (!fit.converged) {
    fit.warning = "multinomial fit did not converge after " + std::to_string(fit.iterations) + " iterations";
  }

  const Eigen::MatrixXd reduced = as_matrix(theta, rows, k);
  fit.coefficients = Eigen::MatrixXd::Zero(rows, design.cols());
  for (std::size_t l = 0; l < kept.size(); ++l)
    fit.coefficients.col(kept[l]) = reduced.col(static_cast<Eigen::Index>(l));
  fit.log_likelihood = ll;
  return fit;
}

Eigen::VectorXd predict(const LinearFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  check_columns(fit.coefficients.size(), rows.cols());
  return rows * fit.coefficients;
}

Eigen::VectorXd predict(const LogisticFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  check_columns(fit.coefficients.size(), rows.cols());
  return (rows * fit.coefficients).unaryExpr([](double e) { return expit(e); });
}

Eigen::MatrixXd predict(const MultinomialFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  check_columns(fit.coefficients.cols(), rows.cols());
  return reference_softmax(rows * fit.coefficients.transpose());
}

}  // namespace mcate

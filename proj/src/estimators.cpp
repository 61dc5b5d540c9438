#include "mcate/estimators.hpp"

#include "mcate/error.hpp"

#include <algorithm>
#include <cmath>

namespace mcate {

const char* to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::tau: return "tau";
    case Estimator::phi: return "phi";
    case Estimator::psi: return "psi";
    case Estimator::chi: return "chi";
    case Estimator::phi_ipw: return "phi_ipw";
    case Estimator::phi_om: return "phi_om";
    case Estimator::psi_ipw: return "psi_ipw";
    case Estimator::psi_om: return "psi_om";
    case Estimator::pooled: return "pooled";
    case Estimator::fe1: return "fe1";
    case Estimator::fe2: return "fe2";
  }
  return "unknown";
}

Estimator parse_estimator(const std::string& name) {
  for (auto e : {Estimator::tau, Estimator::phi, Estimator::psi, Estimator::chi, Estimator::phi_ipw, Estimator::phi_om,
                 Estimator::psi_ipw, Estimator::psi_om, Estimator::pooled, Estimator::fe1, Estimator::fe2}) {
    if (name == to_string(e)) return e;
  }
  throw Error(ErrorKind::usage, "unknown estimator '" + name + "'");
}

bool is_comparator(Estimator estimator) {
  return estimator == Estimator::pooled || estimator == Estimator::fe1 || estimator == Estimator::fe2;
}

KnownProbabilities KnownProbabilities::common(int m, std::vector<int> arms, const std::vector<double>& probs) {
  if (arms.size() != probs.size()) throw Error(ErrorKind::config, "known probabilities: arms and values differ in length");
  KnownProbabilities known;
  known.arms = std::move(arms);
  known.probability.resize(m, static_cast<Eigen::Index>(probs.size()));
  for (std::size_t j = 0; j < probs.size(); ++j) known.probability.col(static_cast<Eigen::Index>(j)).setConstant(probs[j]);
  return known;
}

Eigen::Index KnownProbabilities::arm_column(int arm) const {
  auto it = std::find(arms.begin(), arms.end(), arm);
  if (it == arms.end()) throw Error(ErrorKind::config, "no known probability for arm " + std::to_string(arm));
  return static_cast<Eigen::Index>(std::distance(arms.begin(), it));
}

bool KnownProbabilities::constant_across_centers(int arm) const {
  const auto col = probability.col(arm_column(arm));
  return (col.array() == col(0)).all();
}

namespace {

void validate_known(const KnownProbabilities& known, const TrialDataset& data) {
  if (known.probability.rows() != data.m())
    throw Error(ErrorKind::config, "known probabilities cover " + std::to_string(known.probability.rows()) +
                                       " centers, data has " + std::to_string(data.m()));
  for (Eigen::Index c = 0; c < known.probability.rows(); ++c) {
    const auto row = known.probability.row(c);
    if ((row.array() <= 0.0).any() || (row.array() >= 1.0).any())
      throw Error(ErrorKind::config, "known probabilities must lie in (0, 1)");
    if (std::abs(row.sum() - 1.0) > 1e-9)
      throw Error(ErrorKind::config, "known probabilities for center " + std::to_string(c + 1) + " do not sum to 1");
  }
}

void require_cell(const TrialDataset& data, int center, int arm) {
  if (center < 1 || center > data.m())
    throw Error(ErrorKind::positivity, "center " + std::to_string(center) + " is not in the data");
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (data.center(i) == center && data.arm(i) == arm) return;
  }
  throw Error(ErrorKind::positivity,
              "empty (center, arm) cell (" + std::to_string(center) + ", " + std::to_string(arm) + ")");
}

bool mentions_centers(const DesignSpec& spec) {
  for (const auto& t : spec.terms) {
    if (t.kind == Term::Kind::center_indicators) return true;
    if (t.kind == Term::Kind::interaction) {
      for (const auto& a : t.factors)
        if (a.kind == Atom::Kind::center) return true;
    }
  }
  return false;
}

// Outcome regression of Y on `spec` fit on rows with arm == arm (and, when
// `exclude_center` is set, outside that center); predictions for every row.
Eigen::VectorXd fit_outcome(const TrialDataset& data, int arm, const DesignSpec& spec,
                            std::optional<int> exclude_center = std::nullopt) {
  const Design design = build_design(spec, data);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (data.arm(i) == arm && (!exclude_center || data.center(i) != *exclude_center)) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorKind::positivity, "no rows in arm " + std::to_string(arm) + " to fit the outcome model");
  const Eigen::MatrixXd x = design.matrix(rows, Eigen::all);
  const Eigen::VectorXd y = data.outcome(rows);
  const LinearFit fit = fit_ols(x, y);
  return predict(fit, design.matrix);
}

// Pr[A = arm | design row], fit on `rows`, evaluated on every row.
Eigen::VectorXd fit_treatment(const TrialDataset& data, int arm, const DesignSpec& spec,
                              const std::vector<Eigen::Index>& rows, const NuisanceConfig& cfg) {
  const auto arms = data.arms();
  if (std::find(arms.begin(), arms.end(), arm) == arms.end())
    throw Error(ErrorKind::positivity, "arm " + std::to_string(arm) + " does not occur in the data");
  if (arms.size() == 1) return Eigen::VectorXd::Ones(data.n());

  const Design design = build_design(spec, data);
  const Eigen::MatrixXd x = design.matrix(rows, Eigen::all);
  if (arms.size() == 2) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) y(static_cast<Eigen::Index>(k)) = data.arm(rows[k]) == arms[1] ? 1.0 : 0.0;
    const LogisticFit fit = fit_logistic(x, y, cfg.logistic);
    const Eigen::VectorXd upper = predict(fit, design.matrix);
    if (arm == arms[1]) return upper;
    return (1.0 - upper.array()).matrix();
  }
  Eigen::VectorXi level(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto pos = std::find(arms.begin(), arms.end(), data.arm(rows[k])) - arms.begin();
    level(static_cast<Eigen::Index>(k)) = static_cast<int>(pos) + 1;
  }
  const MultinomialFit fit = fit_multinomial(x, level, static_cast<int>(arms.size()), cfg.multinomial);
  const auto col = std::find(arms.begin(), arms.end(), arm) - arms.begin();
  return predict(fit, design.matrix).col(col);
}

std::vector<Eigen::Index> all_rows(const TrialDataset& data) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

// Shared augmented-weighting kernel:
//   term_i  = weight_i (Y_i - g_i) + I(C_i = c) g_i
//   value   = sum_i term_i / n_c
//   IF_i    = (n / n_c) (term_i - I(C_i = c) value)
EstimateRecord augmented_estimate(const TrialDataset& data, int center, int arm, Estimator estimator,
                                  const Eigen::VectorXd& weight, const Eigen::VectorXd& prediction, Variant variant) {
  const auto n = data.n();
  Eigen::VectorXd terms(n);
  double n_c = 0.0;
  // The two parts are summed separately so that centers with identical rows
  // give bit-identical values.
  double outcome_part = 0.0;
  double residual_part = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double in_center = data.center(i) == center ? 1.0 : 0.0;
    const double g = variant == Variant::ipw ? 0.0 : prediction(i);
    const double w = variant == Variant::om ? 0.0 : weight(i);
    const double residual = w != 0.0 ? w * (data.outcome(i) - g) : 0.0;
    terms(i) = residual + in_center * g;
    if (in_center > 0.0) outcome_part += g;
    residual_part += residual;
    n_c += in_center;
  }

  EstimateRecord record;
  record.estimand = {center, arm, std::nullopt};
  record.estimator = estimator;
  record.value = (outcome_part + residual_part) / n_c;
  record.influence.resize(n);
  const double scale = static_cast<double>(n) / n_c;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double in_center = data.center(i) == center ? 1.0 : 0.0;
    record.influence(i) = scale * (terms(i) - in_center * record.value);
  }
  return record;
}

// Applies the weight floor in place and counts clipped entries among `used`.
Eigen::Index clip(Eigen::VectorXd& prob, double floor, const std::vector<bool>& used) {
  if (floor <= 0.0) return 0;
  Eigen::Index clipped = 0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    if (used[static_cast<std::size_t>(i)] && prob(i) < floor) {
      prob(i) = floor;
      ++clipped;
    }
  }
  return clipped;
}

void require_positive(const Eigen::VectorXd& prob, const std::vector<bool>& used, const char* what) {
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    if (used[static_cast<std::size_t>(i)] && !(prob(i) > 0.0))
      throw Error(ErrorKind::division, std::string(what) + " is zero at row " + std::to_string(i + 1));
  }
}

Estimator phi_kind(Variant v) {
  return v == Variant::dr ? Estimator::phi : v == Variant::ipw ? Estimator::phi_ipw : Estimator::phi_om;
}

Estimator psi_kind(Variant v) {
  return v == Variant::dr ? Estimator::psi : v == Variant::ipw ? Estimator::psi_ipw : Estimator::psi_om;
}

}  // namespace

Eigen::MatrixXd fit_membership(const TrialDataset& data, const NuisanceConfig& cfg) {
  if (data.m() == 1) return Eigen::MatrixXd::Ones(data.n(), 1);
  if (!cfg.membership_spec) throw Error(ErrorKind::config, "membership model is not configured");
  if (mentions_centers(*cfg.membership_spec))
    throw Error(ErrorKind::spec, "membership model cannot use center terms as regressors");
  const Design design = build_design(*cfg.membership_spec, data);
  const MultinomialFit fit = fit_multinomial(design.matrix, data.center, data.m(), cfg.multinomial);
  return predict(fit, design.matrix);
}

CenterAwareNuisances fit_center_aware_nuisances(const TrialDataset& data, int arm, const NuisanceConfig& cfg) {
  CenterAwareNuisances out;
  out.outcome = fit_outcome(data, arm, cfg.outcome_spec);
  if (const auto* known = std::get_if<KnownProbabilities>(&cfg.treatment)) {
    validate_known(*known, data);
    const auto col = known->arm_column(arm);
    out.treatment.resize(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) out.treatment(i) = known->probability(data.center(i) - 1, col);
  } else {
    out.treatment = fit_treatment(data, arm, std::get<DesignSpec>(cfg.treatment), all_rows(data), cfg);
  }
  return out;
}

PooledNuisances fit_pooled_nuisances(const TrialDataset& data, int arm, const NuisanceConfig& cfg) {
  return fit_pooled_nuisances(data, arm, cfg, fit_membership(data, cfg));
}

PooledNuisances fit_pooled_nuisances(const TrialDataset& data, int arm, const NuisanceConfig& cfg,
                                     const Eigen::MatrixXd& membership) {
  PooledNuisances out;
  out.membership = membership;
  out.outcome = fit_outcome(data, arm, cfg.outcome_spec);
  if (const auto* known = std::get_if<KnownProbabilities>(&cfg.treatment)) {
    validate_known(*known, data);
    const auto col = known->arm_column(arm);
    if (known->constant_across_centers(arm)) {
      out.treatment = Eigen::VectorXd::Constant(data.n(), known->probability(0, col));
    } else if (cfg.treatment_decomposition) {
      // Pr[A = a | X] = sum_c' Pr[A = a | C = c'] Pr[C = c' | X]
      out.treatment = (membership * known->probability.col(col)).cwiseQuotient(membership.rowwise().sum());
    } else {
      throw Error(ErrorKind::config,
                  "known treatment probabilities differ across centers; enable treatment_decomposition");
    }
  } else {
    if (cfg.treatment_decomposition)
      throw Error(ErrorKind::config, "treatment_decomposition requires known per-center probabilities");
    out.treatment = fit_treatment(data, arm, std::get<DesignSpec>(cfg.treatment), all_rows(data), cfg);
  }
  return out;
}

EstimateRecord phi_from_nuisances(const TrialDataset& data, int center, int arm, const CenterAwareNuisances& nuisances,
                                  Variant variant, double weight_floor) {
  require_cell(data, center, arm);
  std::vector<bool> used(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) used[i] = data.center(i) == center && data.arm(i) == arm;
  Eigen::VectorXd prob = nuisances.treatment;
  const auto clipped = variant == Variant::om ? 0 : clip(prob, weight_floor, used);
  if (variant != Variant::om) require_positive(prob, used, "treatment probability");

  Eigen::VectorXd weight = Eigen::VectorXd::Zero(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (used[i]) weight(i) = 1.0 / prob(i);
  }
  auto record = augmented_estimate(data, center, arm, phi_kind(variant), weight, nuisances.outcome, variant);
  record.clipped_weights = clipped;
  return record;
}

EstimateRecord psi_from_nuisances(const TrialDataset& data, int center, int arm, const PooledNuisances& nuisances,
                                  Variant variant, double weight_floor) {
  require_cell(data, center, arm);
  std::vector<bool> used(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) used[i] = data.arm(i) == arm;
  Eigen::VectorXd prob = nuisances.treatment;
  const auto clipped = variant == Variant::om ? 0 : clip(prob, weight_floor, used);
  if (variant != Variant::om) require_positive(prob, used, "treatment probability");

  Eigen::VectorXd weight = Eigen::VectorXd::Zero(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (used[i]) weight(i) = nuisances.membership(i, center - 1) / prob(i);
  }
  auto record = augmented_estimate(data, center, arm, psi_kind(variant), weight, nuisances.outcome, variant);
  record.clipped_weights = clipped;
  return record;
}

EstimateRecord chi_from_nuisances(const TrialDataset& data, int center, int arm,
                                  const Eigen::Ref<const Eigen::VectorXd>& donor_outcome,
                                  const Eigen::Ref<const Eigen::VectorXd>& donor_treatment,
                                  const Eigen::Ref<const Eigen::VectorXd>& membership, double weight_floor) {
  require_cell(data, center, arm);
  if (data.m() < 2) throw Error(ErrorKind::no_donor, "transport estimator needs at least one other center");
  std::vector<bool> used(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) used[i] = data.center(i) != center && data.arm(i) == arm;
  Eigen::VectorXd prob = donor_treatment;
  const auto clipped = clip(prob, weight_floor, used);
  require_positive(prob, used, "donor treatment probability");

  Eigen::VectorXd weight = Eigen::VectorXd::Zero(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (!used[i]) continue;
    const double outside = 1.0 - membership(i);
    if (!(outside > 0.0))
      throw Error(ErrorKind::division,
                  "membership probability is 1 at donor row " + std::to_string(i + 1) + " (overlap violation)");
    weight(i) = membership(i) / (outside * prob(i));
  }
  auto record = augmented_estimate(data, center, arm, Estimator::chi, weight, donor_outcome, Variant::dr);
  record.clipped_weights = clipped;
  return record;
}

EstimateRecord estimate_tau(const TrialDataset& data, int center, int arm) {
  require_cell(data, center, arm);
  const auto n = data.n();
  double total = 0.0;
  double cell = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.center(i) == center && data.arm(i) == arm) {
      total += data.outcome(i);
      cell += 1.0;
    }
  }
  EstimateRecord record;
  record.estimand = {center, arm, std::nullopt};
  record.estimator = Estimator::tau;
  record.value = total / cell;
  record.influence = Eigen::VectorXd::Zero(n);
  const double scale = static_cast<double>(n) / cell;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.center(i) == center && data.arm(i) == arm) record.influence(i) = scale * (data.outcome(i) - record.value);
  }
  return record;
}

EstimateRecord estimate_phi(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg, Variant variant) {
  require_cell(data, center, arm);
  return phi_from_nuisances(data, center, arm, fit_center_aware_nuisances(data, arm, cfg), variant, cfg.weight_floor);
}

EstimateRecord estimate_psi(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg, Variant variant) {
  require_cell(data, center, arm);
  return psi_from_nuisances(data, center, arm, fit_pooled_nuisances(data, arm, cfg), variant, cfg.weight_floor);
}

namespace {

// Pr[A = arm | X, C != center] for every row.
Eigen::VectorXd donor_treatment(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg,
                                const Eigen::MatrixXd& membership) {
  if (const auto* known = std::get_if<KnownProbabilities>(&cfg.treatment)) {
    validate_known(*known, data);
    const auto col = known->arm_column(arm);
    if (known->constant_across_centers(arm)) return Eigen::VectorXd::Constant(data.n(), known->probability(0, col));
    Eigen::VectorXd numer = Eigen::VectorXd::Zero(data.n());
    Eigen::VectorXd denom = Eigen::VectorXd::Zero(data.n());
    for (int c = 1; c <= data.m(); ++c) {
      if (c == center) continue;
      numer += known->probability(c - 1, col) * membership.col(c - 1);
      denom += membership.col(c - 1);
    }
    return numer.cwiseQuotient(denom);
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (data.center(i) != center) rows.push_back(i);
  }
  return fit_treatment(data, arm, std::get<DesignSpec>(cfg.treatment), rows, cfg);
}

EstimateRecord chi_with_membership(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg,
                                   const Eigen::MatrixXd& membership) {
  require_cell(data, center, arm);
  if (data.m() < 2) throw Error(ErrorKind::no_donor, "transport estimator needs at least one other center");
  const Eigen::VectorXd outcome = fit_outcome(data, arm, cfg.outcome_spec, center);
  const Eigen::VectorXd treatment = donor_treatment(data, center, arm, cfg, membership);
  return chi_from_nuisances(data, center, arm, outcome, treatment, membership.col(center - 1), cfg.weight_floor);
}

}  // namespace

EstimateRecord estimate_chi(const TrialDataset& data, int center, int arm, const NuisanceConfig& cfg) {
  require_cell(data, center, arm);
  if (data.m() < 2) throw Error(ErrorKind::no_donor, "transport estimator needs at least one other center");
  return chi_with_membership(data, center, arm, cfg, fit_membership(data, cfg));
}

EstimateRecord contrast(const EstimateRecord& treated, const EstimateRecord& reference) {
  EstimateRecord out;
  out.estimand = {treated.estimand.center, treated.estimand.arm, reference.estimand.arm};
  out.estimator = treated.estimator;
  out.value = treated.value - reference.value;
  if (treated.has_influence() && reference.has_influence()) out.influence = treated.influence - reference.influence;
  out.clipped_weights = treated.clipped_weights + reference.clipped_weights;
  return out;
}

EstimateRecord estimate_contrast(const TrialDataset& data, Estimator estimator, int center, int arm, int reference_arm,
                                 const NuisanceConfig& cfg) {
  const auto records = [&]() -> std::vector<EstimateRecord> {
    if (is_comparator(estimator)) return estimate_all_centers(data, estimator, arm, reference_arm, cfg);
    return {};
  }();
  if (!records.empty()) return records.at(static_cast<std::size_t>(center - 1));

  if (arm == reference_arm) {
    require_cell(data, center, arm);
    EstimateRecord zero;
    zero.estimand = {center, arm, reference_arm};
    zero.estimator = estimator;
    zero.influence = Eigen::VectorXd::Zero(data.n());
    return zero;
  }
  auto mean = [&](int a) {
    switch (estimator) {
      case Estimator::tau: return estimate_tau(data, center, a);
      case Estimator::phi: return estimate_phi(data, center, a, cfg, Variant::dr);
      case Estimator::phi_ipw: return estimate_phi(data, center, a, cfg, Variant::ipw);
      case Estimator::phi_om: return estimate_phi(data, center, a, cfg, Variant::om);
      case Estimator::psi: return estimate_psi(data, center, a, cfg, Variant::dr);
      case Estimator::psi_ipw: return estimate_psi(data, center, a, cfg, Variant::ipw);
      case Estimator::psi_om: return estimate_psi(data, center, a, cfg, Variant::om);
      case Estimator::chi: return estimate_chi(data, center, a, cfg);
      default: break;
    }
    throw Error(ErrorKind::usage, "not a center-specific estimator");
  };
  return contrast(mean(arm), mean(reference_arm));
}

std::vector<EstimateRecord> estimate_all_centers(const TrialDataset& data, Estimator estimator, int arm,
                                                 int reference_arm, const NuisanceConfig& cfg,
                                                 const std::vector<std::string>& fe2_covariates) {
  const int m = data.m();
  std::vector<EstimateRecord> out;
  out.reserve(static_cast<std::size_t>(m));

  if (is_comparator(estimator)) {
    const auto result = estimate_comparator(data, estimator, arm, reference_arm, fe2_covariates);
    for (int c = 1; c <= m; ++c) {
      EstimateRecord r;
      r.estimand = {c, arm, reference_arm};
      r.estimator = estimator;
      r.value = result.value;
      r.model_se = result.se;
      out.push_back(r);
    }
    return out;
  }

  if (arm == reference_arm) {
    for (int c = 1; c <= m; ++c) out.push_back(estimate_contrast(data, estimator, c, arm, reference_arm, cfg));
    return out;
  }

  switch (estimator) {
    case Estimator::tau:
      for (int c = 1; c <= m; ++c)
        out.push_back(contrast(estimate_tau(data, c, arm), estimate_tau(data, c, reference_arm)));
      break;
    case Estimator::phi:
    case Estimator::phi_ipw:
    case Estimator::phi_om: {
      const Variant v = estimator == Estimator::phi ? Variant::dr : estimator == Estimator::phi_ipw ? Variant::ipw : Variant::om;
      const auto treated = fit_center_aware_nuisances(data, arm, cfg);
      const auto reference = fit_center_aware_nuisances(data, reference_arm, cfg);
      for (int c = 1; c <= m; ++c) {
        out.push_back(contrast(phi_from_nuisances(data, c, arm, treated, v, cfg.weight_floor),
                               phi_from_nuisances(data, c, reference_arm, reference, v, cfg.weight_floor)));
      }
      break;
    }
    case Estimator::psi:
    case Estimator::psi_ipw:
    case Estimator::psi_om: {
      const Variant v = estimator == Estimator::psi ? Variant::dr : estimator == Estimator::psi_ipw ? Variant::ipw : Variant::om;
      const Eigen::MatrixXd membership = fit_membership(data, cfg);
      const auto treated = fit_pooled_nuisances(data, arm, cfg, membership);
      const auto reference = fit_pooled_nuisances(data, reference_arm, cfg, membership);
      for (int c = 1; c <= m; ++c) {
        out.push_back(contrast(psi_from_nuisances(data, c, arm, treated, v, cfg.weight_floor),
                               psi_from_nuisances(data, c, reference_arm, reference, v, cfg.weight_floor)));
      }
      break;
    }
    case Estimator::chi: {
      if (m < 2) throw Error(ErrorKind::no_donor, "transport estimator needs at least one other center");
      const Eigen::MatrixXd membership = fit_membership(data, cfg);
      for (int c = 1; c <= m; ++c) {
        out.push_back(contrast(chi_with_membership(data, c, arm, cfg, membership),
                               chi_with_membership(data, c, reference_arm, cfg, membership)));
      }
      break;
    }
    default:
      throw Error(ErrorKind::usage, "not a center-specific estimator");
  }
  return out;
}

ComparatorResult estimate_comparator(const TrialDataset& data, Estimator which, int arm, int reference_arm,
                                     const std::vector<std::string>& fe2_covariates) {
  if (!is_comparator(which)) throw Error(ErrorKind::usage, "not a comparator estimator");
  for (int a : {arm, reference_arm}) {
    if ((data.arm.array() == a).count() < 2)
      throw Error(ErrorKind::comparator, "comparator needs at least two rows in arm " + std::to_string(a));
  }
  if (arm == reference_arm) return {0.0, 0.0};

  DesignSpec spec{{Term::intercept(), Term::arm()}};
  if (which == Estimator::fe2) {
    for (const auto& name : fe2_covariates.empty() ? data.covariate_names : fe2_covariates)
      spec.terms.push_back(Term::covariate(name));
  }
  if (which != Estimator::pooled) spec.terms.push_back(Term::centers());

  const Design design = build_design(spec, data);
  const LinearFit fit = fit_ols(design.matrix, data.outcome);

  // Arm dummies are named "A<arm>"; the lowest arm is the reference level.
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(design.matrix.cols());
  auto mark = [&](int a, double sign) {
    const auto name = "A" + std::to_string(a);
    auto it = std::find(design.column_names.begin(), design.column_names.end(), name);
    if (it == design.column_names.end()) return;  // reference arm
    const auto j = static_cast<Eigen::Index>(it - design.column_names.begin());
    if (std::find(fit.dropped_columns.begin(), fit.dropped_columns.end(), j) != fit.dropped_columns.end())
      throw Error(ErrorKind::comparator, "arm column " + name + " is aliased in the comparator regression");
    weights(j) = sign;
  };
  mark(arm, 1.0);
  mark(reference_arm, -1.0);

  const Eigen::MatrixXd cov = ols_covariance(design.matrix, fit);
  return {weights.dot(fit.coefficients), std::sqrt(std::max(0.0, weights.dot(cov * weights)))};
}

}  // namespace mcate

#include "mcate/config.hpp"

#include "mcate/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mcate {

using nlohmann::json;

const char* to_string(Command command) {
  switch (command) {
    case Command::analyze: return "analyze";
    case Command::check_assumptions: return "check-assumptions";
    case Command::simulate: return "simulate";
    case Command::oracle: return "oracle";
  }
  return "unknown";
}

Command parse_command(const std::string& name) {
  for (auto c : {Command::analyze, Command::check_assumptions, Command::simulate, Command::oracle}) {
    if (name == to_string(c)) return c;
  }
  throw Error(ErrorKind::usage, "unknown command '" + name + "'");
}

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorKind::config, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::config, where + " must be a non-empty array of rows");
  const auto cols = j.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw Error(ErrorKind::config, where + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

NuisanceSettings parse_nuisance(const json& j, const std::string& where) {
  check_keys(j, where, {"outcome", "treatment", "membership", "treatment_decomposition", "weight_floor"});
  NuisanceSettings s;
  read(j, "outcome", s.outcome);
  read(j, "membership", s.membership);
  read(j, "treatment_decomposition", s.treatment_decomposition);
  read(j, "weight_floor", s.weight_floor);
  if (j.contains("treatment")) {
    const json& t = j.at("treatment");
    if (t.is_array()) {
      s.treatment = t.get<std::vector<std::string>>();
    } else {
      check_keys(t, where + ".treatment", {"known_arms", "known_probabilities"});
      KnownProbabilities known;
      known.arms = t.at("known_arms").get<std::vector<int>>();
      const json& p = t.at("known_probabilities");
      known.probability = p.is_array() && !p.empty() && p.front().is_number()
                              ? Eigen::MatrixXd(vector_from(p).transpose())
                              : matrix_from(p, where + ".treatment.known_probabilities");
      if (known.probability.cols() != static_cast<Eigen::Index>(known.arms.size()))
        throw Error(ErrorKind::config, where + ": known probabilities need one column per arm");
      s.known_treatment = known;
      s.treatment.clear();
    }
  }
  if (!(s.weight_floor >= 0.0 && s.weight_floor < 1.0))
    throw Error(ErrorKind::config, where + ".weight_floor must lie in [0, 1)");
  for (const auto& spec : {s.outcome, s.treatment, s.membership}) DesignSpec::parse(spec);
  return s;
}

json nuisance_json(const NuisanceSettings& s) {
  json j;
  j["outcome"] = s.outcome;
  if (s.known_treatment) {
    j["treatment"] = {{"known_arms", s.known_treatment->arms},
                      {"known_probabilities", matrix_json(s.known_treatment->probability)}};
  } else {
    j["treatment"] = s.treatment;
  }
  j["membership"] = s.membership;
  j["treatment_decomposition"] = s.treatment_decomposition;
  j["weight_floor"] = s.weight_floor;
  return j;
}

Scenario parse_scenario(const json& j) {
  check_keys(j, "scenario",
             {"strength", "strong_doubles", "n", "m", "membership_coeffs", "outcome_intercept", "outcome_slopes",
              "arm_effect", "arm_interaction", "noise_sd", "arm_prob"});
  Scenario s = Scenario::paper(j.contains("strength") ? parse_strength(j.at("strength").get<std::string>())
                                                      : Strength::baseline);
  if (j.contains("strong_doubles")) s.strong_doubles = parse_strong_doubles(j.at("strong_doubles").get<std::string>());
  read(j, "n", s.n);
  read(j, "m", s.m);
  if (j.contains("membership_coeffs")) s.membership_coeffs = matrix_from(j.at("membership_coeffs"), "scenario.membership_coeffs");
  read(j, "outcome_intercept", s.outcome_intercept);
  if (j.contains("outcome_slopes")) s.outcome_slopes = vector_from(j.at("outcome_slopes"));
  read(j, "arm_effect", s.arm_effect);
  if (j.contains("arm_interaction")) s.arm_interaction = vector_from(j.at("arm_interaction"));
  read(j, "noise_sd", s.noise_sd);
  read(j, "arm_prob", s.arm_prob);
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("scenario: ") + e.what());
  }
  return s;
}

json scenario_json(const Scenario& s) {
  return {{"strength", to_string(s.strength)},
          {"strong_doubles", to_string(s.strong_doubles)},
          {"n", s.n},
          {"m", s.m},
          {"membership_coeffs", matrix_json(s.membership_coeffs)},
          {"outcome_intercept", s.outcome_intercept},
          {"outcome_slopes", to_std(s.outcome_slopes)},
          {"arm_effect", s.arm_effect},
          {"arm_interaction", to_std(s.arm_interaction)},
          {"noise_sd", s.noise_sd},
          {"arm_prob", s.arm_prob}};
}

RunConfig parse_config_unchecked(const json& j) {
  check_keys(j, "config",
             {"command", "input", "output", "schema", "estimators", "arms", "alpha", "seed", "threads", "bootstrap",
              "nuisance", "ancova", "scenario", "study"});
  RunConfig c;
  if (j.contains("command")) c.command = parse_command(j.at("command").get<std::string>());
  read(j, "input", c.input);
  read(j, "output", c.output);
  if (j.contains("schema")) {
    const json& s = j.at("schema");
    check_keys(s, "schema", {"center", "arm", "outcome", "covariates", "drop_incomplete_rows"});
    read(s, "center", c.schema.center_col);
    read(s, "arm", c.schema.arm_col);
    read(s, "outcome", c.schema.outcome_col);
    read(s, "covariates", c.schema.covariate_cols);
    read(s, "drop_incomplete_rows", c.schema.drop_incomplete_rows);
  }
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& name : j.at("estimators").get<std::vector<std::string>>()) c.estimators.push_back(parse_estimator(name));
    if (c.estimators.empty()) throw Error(ErrorKind::config, "estimators must not be empty");
  }
  if (j.contains("arms")) {
    const auto arms = j.at("arms").get<std::vector<int>>();
    if (arms.size() != 2) throw Error(ErrorKind::config, "arms must be a pair [a, a']");
    c.arm = arms[0];
    c.reference_arm = arms[1];
  }
  read(j, "alpha", c.alpha);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error(ErrorKind::config, "alpha must lie in (0, 1)");
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  if (j.contains("bootstrap")) {
    check_keys(j.at("bootstrap"), "bootstrap", {"replicates"});
    read(j.at("bootstrap"), "replicates", c.bootstrap_replicates);
    if (c.bootstrap_replicates < 0 || c.bootstrap_replicates == 1)
      throw Error(ErrorKind::config, "bootstrap.replicates must be 0 or at least 2");
  }
  if (j.contains("nuisance")) {
    const json& n = j.at("nuisance");
    check_keys(n, "nuisance", {"phi", "psi", "chi"});
    if (n.contains("phi")) c.phi = parse_nuisance(n.at("phi"), "nuisance.phi");
    if (n.contains("psi")) c.psi = parse_nuisance(n.at("psi"), "nuisance.psi");
    if (n.contains("chi")) c.chi = parse_nuisance(n.at("chi"), "nuisance.chi");
  }
  if (j.contains("ancova")) {
    check_keys(j.at("ancova"), "ancova", {"base", "extended"});
    read(j.at("ancova"), "base", c.ancova_base);
    read(j.at("ancova"), "extended", c.ancova_extended);
    if (c.ancova_base.empty() != c.ancova_extended.empty())
      throw Error(ErrorKind::config, "ancova.base and ancova.extended must be given together");
    DesignSpec::parse(c.ancova_base);
    DesignSpec::parse(c.ancova_extended);
  }
  if (j.contains("scenario")) c.scenario = parse_scenario(j.at("scenario"));
  if (j.contains("study")) {
    const json& s = j.at("study");
    check_keys(s, "study", {"replicates", "oracle_draws", "oracle_seed"});
    read(s, "replicates", c.replicates);
    read(s, "oracle_draws", c.oracle_draws);
    read(s, "oracle_seed", c.oracle_seed);
    if (c.replicates < 1) throw Error(ErrorKind::config, "study.replicates must be positive");
    if (c.oracle_draws < 1) throw Error(ErrorKind::config, "study.oracle_draws must be positive");
  }
  return c;
}

}  // namespace

RunConfig parse_config(const json& j) {
  try {
    return parse_config_unchecked(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::spec || e.kind() == ErrorKind::usage) throw Error(ErrorKind::config, e.what());
    throw;
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, "config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  std::vector<std::string> estimators;
  for (auto e : c.estimators) estimators.emplace_back(to_string(e));
  return {{"command", to_string(c.command)},
          {"input", c.input},
          {"output", c.output},
          {"schema",
           {{"center", c.schema.center_col},
            {"arm", c.schema.arm_col},
            {"outcome", c.schema.outcome_col},
            {"covariates", c.schema.covariate_cols},
            {"drop_incomplete_rows", c.schema.drop_incomplete_rows}}},
          {"estimators", estimators},
          {"arms", {c.arm, c.reference_arm}},
          {"alpha", c.alpha},
          {"seed", c.seed},
          {"threads", c.threads},
          {"bootstrap", {{"replicates", c.bootstrap_replicates}}},
          {"nuisance", {{"phi", nuisance_json(c.phi)}, {"psi", nuisance_json(c.psi)}, {"chi", nuisance_json(c.chi)}}},
          {"ancova", {{"base", c.ancova_base}, {"extended", c.ancova_extended}}},
          {"scenario", scenario_json(c.scenario)},
          {"study", {{"replicates", c.replicates}, {"oracle_draws", c.oracle_draws}, {"oracle_seed", c.oracle_seed}}}};
}

NuisanceConfig resolve_nuisance(const NuisanceSettings& s, Estimator family, const std::vector<std::string>& covariates,
                                int m) {
  const bool center_aware = family == Estimator::phi || family == Estimator::phi_ipw || family == Estimator::phi_om;
  NuisanceConfig cfg;
  cfg.outcome_spec = s.outcome.empty() ? main_effects(covariates, center_aware) : DesignSpec::parse(s.outcome);
  if (s.known_treatment) {
    KnownProbabilities known = *s.known_treatment;
    if (known.probability.rows() == 1 && m > 1) known.probability = known.probability.replicate(m, 1).eval();
    cfg.treatment = known;
  } else {
    cfg.treatment = DesignSpec::parse(s.treatment);
  }
  if (!center_aware) cfg.membership_spec = s.membership.empty() ? main_effects(covariates, false) : DesignSpec::parse(s.membership);
  cfg.treatment_decomposition = s.treatment_decomposition;
  cfg.weight_floor = s.weight_floor;
  return cfg;
}

}  // namespace mcate

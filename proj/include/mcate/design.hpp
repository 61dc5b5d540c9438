#pragma once

#include "mcate/dataset.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mcate {

// One atomic regressor factor. An interaction is a product of atoms.
struct Atom {
  enum class Kind { covariate, center, arm };
  Kind kind = Kind::covariate;
  std::string name;  // covariate name; unused otherwise

  bool operator==(const Atom&) const = default;
};

struct Term {
  enum class Kind { intercept, covariate, center_indicators, arm_indicator, interaction };
  Kind kind = Kind::intercept;
  std::string name;           // covariate name
  std::vector<Atom> factors;  // interaction only, >= 2 atoms

  static Term intercept() { return {Kind::intercept, {}, {}}; }
  static Term covariate(std::string name) { return {Kind::covariate, std::move(name), {}}; }
  static Term centers() { return {Kind::center_indicators, {}, {}}; }
  static Term arm() { return {Kind::arm_indicator, {}, {}}; }
  static Term interaction(std::vector<Atom> factors) { return {Kind::interaction, {}, std::move(factors)}; }

  bool operator==(const Term&) const = default;
};

// Ordered regressor list. String form, one token per term: "1" intercept,
// "C" center indicators, "A" arm indicators, any other name a covariate, and
// "x1:A", "x1:C", "A:C", "x1:A:C" for products.
struct DesignSpec {
  std::vector<Term> terms;

  static DesignSpec parse(const std::vector<std::string>& tokens);
  std::vector<std::string> to_strings() const;
  bool has_intercept() const;

  bool operator==(const DesignSpec&) const = default;
};

struct Design {
  Eigen::MatrixXd matrix;
  std::vector<std::string> column_names;
  std::vector<Eigen::Index> rows;  // dataset row of each design row
};

// Expands `spec` over every row of `data`, or only rows with arm == *arm_filter.
// Center indicators use center 1 as reference (m - 1 columns); arm indicators
// use the lowest arm as reference (|arms| - 1 columns).
Design build_design(const DesignSpec& spec, const TrialDataset& data,
                    std::optional<int> arm_filter = std::nullopt);

// Convenience specs.
DesignSpec intercept_only();
DesignSpec main_effects(const std::vector<std::string>& covariates, bool with_centers);

}  // namespace mcate

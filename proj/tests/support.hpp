#pragma once

#include "mcate/dataset.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace mcate::testing {

// Small random trial: every (center, arm) cell gets at least two rows, the
// rest are spread at random. Outcomes depend on X, C and A.
inline TrialDataset random_trial(std::mt19937_64& rng, int m, Eigen::Index n, Eigen::Index p = 2,
                                 std::vector<int> arms = {0, 1}) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> pick_center(1, m);
  std::uniform_int_distribution<std::size_t> pick_arm(0, arms.size() - 1);
  const auto cells = static_cast<Eigen::Index>(2 * m * arms.size());
  if (n < cells) n = cells;
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXi c(n), a(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < cells) {
      c(i) = static_cast<int>(i / static_cast<Eigen::Index>(2 * arms.size())) + 1;
      a(i) = arms[static_cast<std::size_t>(i % static_cast<Eigen::Index>(arms.size()))];
    } else {
      c(i) = pick_center(rng);
      a(i) = arms[pick_arm(rng)];
    }
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = normal(rng) + 0.2 * c(i);
    y(i) = 1.0 + x.row(i).sum() + 0.5 * c(i) + (1.0 + 0.3 * x(i, 0)) * a(i) + normal(rng);
  }
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return make_dataset(std::move(x), std::move(names), c, std::move(a), std::move(y));
}

}  // namespace mcate::testing

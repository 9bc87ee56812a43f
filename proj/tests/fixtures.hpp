#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "divebias/lmm.hpp"
#include "divebias/random.hpp"

namespace fixture {

/// Five groups of four rows: intercept plus one covariate, group effects with
/// variance sigma2_b and unit residuals.
inline divebias::LmmDesign tiny(std::uint64_t seed, double sigma2_b = 1.0) {
  divebias::Rng rng(seed);
  constexpr int g = 5;
  constexpr int m = 4;
  Eigen::VectorXd y(g * m);
  Eigen::MatrixXd x(g * m, 2);
  std::vector<int> group(g * m);
  for (int i = 0; i < g; ++i) {
    const double b = rng.normal(0.0, std::sqrt(sigma2_b));
    for (int j = 0; j < m; ++j) {
      const int row = i * m + j;
      x(row, 0) = 1.0;
      x(row, 1) = rng.normal(0.0, 1.0);
      y[row] = 0.5 - 0.8 * x(row, 1) + b + rng.normal();
      group[static_cast<std::size_t>(row)] = i;
    }
  }
  return divebias::make_design(y, x, group, {"Intercept", "X"});
}

/// Intercept-only balanced layout, rows grouped in order.
inline divebias::LmmDesign balanced(int g, int m, double sigma2_b, std::uint64_t seed) {
  divebias::Rng rng(seed);
  Eigen::VectorXd y(g * m);
  std::vector<int> group(static_cast<std::size_t>(g * m));
  for (int i = 0; i < g; ++i) {
    const double b = rng.normal(0.0, std::sqrt(sigma2_b));
    for (int j = 0; j < m; ++j) {
      y[i * m + j] = 2.0 + b + rng.normal(0.0, 1.5);
      group[static_cast<std::size_t>(i * m + j)] = i;
    }
  }
  return divebias::make_design(y, Eigen::MatrixXd::Ones(g * m, 1), group, {"Intercept"});
}

/// Four-column design like the discrepancy model with no group effect: the
/// residuals are centred within each group, so the sample between-group
/// variance of the errors is exactly zero.
inline divebias::LmmDesign no_group_effect(int g, int m, std::uint64_t seed) {
  divebias::Rng rng(seed);
  const int n = g * m;
  Eigen::VectorXd e(n);
  Eigen::MatrixXd x(n, 4);
  std::vector<int> group(static_cast<std::size_t>(n));
  for (int i = 0; i < g; ++i) {
    double mean = 0.0;
    for (int j = 0; j < m; ++j) {
      const int row = i * m + j;
      x(row, 0) = 1.0;
      x(row, 1) = 1 + j % 11;
      x(row, 2) = 12 + rng.between(0, 6);
      x(row, 3) = 1.0 + 0.1 * rng.between(0, 25);
      e[row] = rng.normal(0.0, 2.0);
      mean += e[row];
      group[static_cast<std::size_t>(row)] = i;
    }
    mean /= m;
    for (int j = 0; j < m; ++j) e[i * m + j] -= mean;
  }
  Eigen::Vector4d beta(1.0, -0.08, 0.3, -2.2);
  const Eigen::VectorXd y = x * beta + e;
  return divebias::make_design(y, x, group, {"Intercept", "Round", "Age", "DD"});
}

}  // namespace fixture

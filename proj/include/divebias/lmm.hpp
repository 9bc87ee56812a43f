#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "divebias/analytics.hpp"

namespace divebias {

/// Response, fixed-effect design and grouping for a random-intercept model
///   y = X·beta + b[group] + e,  b ~ N(0, sigma2_b),  e ~ N(0, sigma2_e).
struct LmmDesign {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<int> group;  // dense indices 0..groups-1, one per row
  int groups{0};
  std::vector<std::string> group_ids;
  std::vector<std::string> column_names;
  std::optional<Gender> gender;
};

/// Validates shapes, dense group indices, non-empty groups and full column
/// rank. Throws std::invalid_argument on any failure.
LmmDesign make_design(Eigen::VectorXd y, Eigen::MatrixXd x, std::vector<int> group,
                      std::vector<std::string> column_names = {});

/// Discrepancy ~ 1 + round + age + dd with a random intercept per diver, for
/// one gender. Rows are put in (diver, meet, round) order and groups are
/// numbered by diver id, so the result does not depend on input order.
LmmDesign build_design(std::span<const DiscrepancyRecord> records, Gender gender);

/// -2 × restricted log-likelihood at variance ratio lambda = sigma2_b/sigma2_e,
/// profiled over beta and sigma2_e. Throws std::domain_error on lambda < 0 and
/// std::runtime_error on a non-finite value.
double reml_criterion(const LmmDesign& design, double lambda);

/// Derivative of reml_criterion with respect to lambda.
double reml_gradient(const LmmDesign& design, double lambda);

struct LmmOptions {
  double lambda_max{1e6};
  double tolerance{1e-10};
  int max_iterations{200};
};

struct LmmFit {
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd t;
  double sigma2_b{0.0};
  double sigma2_e{0.0};
  double lambda{0.0};
  double icc_adj{0.0};
  std::size_t n{0};
  int g{0};
  double reml_value{0.0};
  bool converged{false};
  bool at_boundary{false};
  int iterations{0};
};

/// Profiled REML fit: Brent search over log(1 + lambda) on [0, lambda_max],
/// polished on the sign of the analytic gradient, then GLS at the optimum.
/// Throws std::runtime_error when the search does not converge.
LmmFit fit_lmm(const LmmDesign& design, const LmmOptions& options = {});

/// sigma2_b / (sigma2_b + sigma2_e).
double icc_adjusted(const LmmFit& fit);

/// Side-by-side coefficient table, one panel per labelled fit: rows are the
/// fixed effects, columns Estimate, SE and t-statistic per panel.
std::string format_fit_table(std::span<const std::pair<std::string, LmmFit>> panels);
std::string format_fit_table(const LmmFit& girls, const LmmFit& boys);

/// Display rules: estimates to two decimals without trailing zeros, standard
/// errors to two significant figures, t-statistics to two decimals.
std::string format_estimate(double v);
std::string format_standard_error(double v);
std::string format_t(double v);

}  // namespace divebias

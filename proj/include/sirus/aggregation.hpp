#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sirus/data.hpp"
#include "sirus/rules.hpp"

namespace sirus {

// Rule outputs on the training rows: gamma(i, k) = rule k evaluated at X_i.
struct RuleDesignMatrix {
  Eigen::MatrixXd gamma;
  Eigen::VectorXd y;
};

RuleDesignMatrix build_design(std::span<const Rule> rules, const Dataset& data);

struct RidgeFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

// Non-negative least squares on a quadratic form: minimises
// b' Q b - 2 c' b over b >= 0 with Q symmetric positive semi-definite.
// Active-set method of Lawson and Hanson; `warm_start` may seed the support.
Eigen::VectorXd solve_nnls_quadratic(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                     const Eigen::VectorXd* warm_start = nullptr);

// argmin over beta >= 0 and free intercept of
//   (1/n) ||Y - beta0 1 - Gamma beta||^2 + lambda ||beta||^2.
RidgeFit fit_nn_ridge(const RuleDesignMatrix& design, double lambda);

// Value of the objective above, for diagnostics and tests.
double nn_ridge_objective(const RuleDesignMatrix& design, const RidgeFit& fit, double lambda);

// 50 log-spaced values over [1e-4, 1e2] * var_y, ascending.
std::vector<double> default_lambda_grid(double var_y);

// Held-out mean squared error for each lambda of an ascending grid. Rule
// outputs are re-estimated on each fold's training part (falling back to the
// given outputs when a side is empty there).
std::vector<double> lambda_cv_curve(std::span<const Rule> rules, const Dataset& data, const FoldAssignment& folds,
                                    std::span<const double> lambdas);

// Lambda minimising the cross-validated error; ties go to the larger value.
double tune_lambda(std::span<const Rule> rules, const Dataset& data, const FoldAssignment& folds,
                   std::span<const double> grid);

struct SirusModel {
  FeatureSchema schema;
  std::string response_name;
  double response_mean = 0.0;
  QuantileGrid grid;
  double p0 = 0.0;
  double lambda = 0.0;
  double intercept = 0.0;
  std::vector<Rule> rules;
  std::vector<double> weights;
  std::vector<double> frequencies;
  std::size_t rules_before_discard = 0;
  std::int64_t num_trees = 0;

  std::size_t size() const { return rules.size(); }
  std::vector<Path> paths() const;
};

double predict(const SirusModel& model, std::span<const double> x);
std::vector<double> predict(const SirusModel& model, const Dataset& data);

}  // namespace sirus

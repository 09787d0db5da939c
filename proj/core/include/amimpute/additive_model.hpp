#pragma once

#include "amimpute/spline.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace amimpute {

struct AmOptions {
  int basis_size = 10;
  std::vector<double> lambda_grid = default_lambda_grid();
  double tol = 1e-6;
  int max_iter = 50;
  // Smoothing parameters are re-selected by GCV in the first cycles, then frozen.
  int reselect_cycles = 5;
  // One lambda per covariate; disables GCV entirely when non-empty.
  std::vector<double> fixed_lambdas;
};

struct AmTerm {
  std::size_t covariate = 0;
  SplineFit smooth;     // centered: weighted mean over the training points is zero
  double center = 0.0;  // offset removed from the raw smooth at the last update
};

// y = intercept + sum_j a_j(x_j), fitted by backfitting.
struct AmFit {
  double intercept = 0.0;
  std::size_t covariates = 0;
  std::vector<AmTerm> terms;
  std::vector<std::size_t> dropped;  // covariates with fewer than 4 distinct values
  double residual_variance = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // penalized criterion after each cycle
  Eigen::VectorXd fitted;               // in-sample fitted values

  std::vector<double> lambdas() const;  // per covariate, NaN for dropped ones
};

// weights empty means unweighted. Throws DegenerateFitError for fewer than 10 rows.
AmFit fit_am(const Eigen::MatrixXd& X, std::span<const double> y, std::span<const double> weights,
             const AmOptions& options = {});

std::vector<double> predict_am(const AmFit& fit, const Eigen::MatrixXd& X_new);

}  // namespace amimpute
